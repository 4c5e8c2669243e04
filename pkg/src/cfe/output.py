"""CSV and manifest writers.

CSV files use ``repr`` floats (shortest round-trip form, always ``.`` as the
decimal separator) and LF line endings, so output is byte-stable across
locales and platforms.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
from pathlib import Path

from . import __version__

__all__ = [
    "canonical_json",
    "config_hash",
    "write_csv",
    "write_ledger",
    "write_snapshots",
    "snapshot_name",
    "build_manifest",
    "write_manifest",
    "utc_now",
]


class _Token(str):
    """A numeric literal kept exactly as written."""


def _dump(node) -> str:
    if isinstance(node, _Token):
        return str(node)
    if isinstance(node, dict):
        items = sorted(node.items())
        return "{" + ",".join(json.dumps(k, ensure_ascii=True) + ":" + _dump(v) for k, v in items) + "}"
    if isinstance(node, list):
        return "[" + ",".join(_dump(v) for v in node) + "]"
    return json.dumps(node, ensure_ascii=True)


def canonical_json(text: str) -> str:
    """Compact, key-sorted JSON with every number copied verbatim from ``text``.

    Numbers are never parsed into floats, so ``1e-3`` stays ``1e-3`` and the
    result does not depend on the platform's float formatting.

    >>> canonical_json('{"b": 1.50, "a": [2, {"d": 1e-3, "c": true}]}')
    '{"a":[2,{"c":true,"d":1e-3}],"b":1.50}'
    """
    tree = json.loads(text, parse_float=_Token, parse_int=_Token, parse_constant=_Token)
    return _dump(tree)


def config_hash(text: str) -> str:
    return hashlib.sha256(canonical_json(text).encode("utf-8")).hexdigest()


def _cell(value):
    if isinstance(value, float) or hasattr(value, "dtype"):
        return repr(float(value))
    return value


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def write_ledger(path, ledger) -> Path:
    return write_csv(path, ledger.COLUMNS, ledger.rows())


def snapshot_name(t: float) -> str:
    return f"{t:.6f}.csv"


def write_snapshots(directory, traj) -> list:
    directory = Path(directory)
    grid = traj.grid
    paths = []
    for t, s in traj.samples:
        rows = zip(grid.pivots, grid.widths, s.values)
        paths.append(write_csv(directory / snapshot_name(t), ("pivot", "width", "g"), rows))
    return paths


def utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def build_manifest(config_text: str, config_raw: dict, traj, started: str, finished: str) -> dict:
    ledger = traj.ledger
    return {
        "config": config_raw,
        "config_sha256": config_hash(config_text),
        "version": __version__,
        "started_utc": started,
        "finished_utc": finished,
        "summary": {
            "final_time": float(traj.final_time),
            "final_M0": float(ledger.M0[-1]),
            "final_M1": float(ledger.M1[-1]),
            "accumulated_loss": float(ledger.accumulated_loss[-1]),
            "clipped_mass": float(ledger.clipped_mass[-1]),
        },
    }


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
