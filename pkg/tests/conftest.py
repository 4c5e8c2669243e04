import json

import pytest

from cfe import schemes


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict to ``tmp_path`` and return its path."""

    def write(raw, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(raw, indent=2))
        return path

    return write


@pytest.fixture
def fresh_operators():
    schemes._cached.cache_clear()
    yield
    schemes._cached.cache_clear()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by a test")
    config._criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(item.user_properties).get("detail", "")
        item.config._criteria.append((marker.args[0], marker.args[1], report.outcome, detail))


def pytest_terminal_summary(terminalreporter, config):
    rows = sorted(getattr(config, "_criteria", []))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, text, outcome, detail in rows:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {number:>2}: {verdict}  {text}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
