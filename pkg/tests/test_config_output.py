import csv
import json

import numpy as np
import pytest

from cfe.config import load_config, parse_config
from cfe.errors import ConfigError
from cfe.integrator import StepControl, exp_decay, run
from cfe.grid import make_uniform
from cfe.kernels import make_builtin
from cfe.output import canonical_json, config_hash, write_ledger, write_snapshots
from cfe.reference import reference_config
from cfe.schemes import TruncationScheme


def test_parse_reference():
    cfg = parse_config(reference_config("additive_frag"))
    assert cfg.scheme is TruncationScheme.NONCONS_COAG
    assert cfg.step == StepControl("rk4", 0.01, 1e-8, "reject_and_halve", 0.05)
    assert cfg.kernel.name == "additive|constant_frag(c=1)"
    assert cfg.initial_name == "exp_decay(1)"
    assert cfg.grid.cell_count == 200


@pytest.mark.parametrize(
    "patch",
    [{"T": 0}, {"T": -1}, {"scheme": "lossy"}, {"grid": {"type": "uniform", "R": 4}},
     {"kernel": {"family": "brownian"}}, {"step": {"positivity": "ignore"}},
     {"step": {"dt": 1.0, "sample_every": 0.1}}, {"initial": {"type": "gaussian"}},
     {"initial": {"type": "monodisperse_cell", "cell": 999, "mass": 1}}],
)
def test_invalid_configs(patch):
    raw = reference_config("frozen")
    raw.update(patch)
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_missing_field():
    raw = reference_config("frozen")
    del raw["kernel"]
    with pytest.raises(ConfigError, match="kernel"):
        parse_config(raw)


def test_json_error_has_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "T": 1,\n  "kernel": }\n')
    with pytest.raises(ConfigError, match=r"line 3, column 13"):
        load_config(path)


def test_monodisperse_initial():
    raw = reference_config("frozen")
    raw["grid"] = {"type": "uniform", "R": 4, "cells": 4}
    raw["initial"] = {"type": "monodisperse_cell", "cell": 2, "mass": 5}
    cfg = parse_config(raw)
    values = cfg.initial_for(cfg.grid)
    np.testing.assert_allclose(values, [0, 0, 2.0, 0])
    assert np.sum(cfg.grid.pivots * values * cfg.grid.widths) == pytest.approx(5.0)


def test_custom_table_relative_to_config(write_config, tmp_path):
    (tmp_path / "init.csv").write_text("y,g\n0,1\n10,0\n")
    raw = reference_config("frozen")
    raw["grid"] = {"type": "uniform", "R": 10, "cells": 10}
    raw["initial"] = {"type": "custom_table", "path": "init.csv"}
    cfg = load_config(write_config(raw))
    datum = cfg.initial_for(cfg.grid)
    np.testing.assert_allclose(datum(np.array([0.0, 5.0, 12.0])), [1.0, 0.5, 0.0])
    assert cfg.initial_name == "custom_table(init.csv)"


def test_custom_table_missing(write_config):
    raw = reference_config("frozen")
    raw["initial"] = {"type": "custom_table", "path": "nope.csv"}
    with pytest.raises(ConfigError):
        load_config(write_config(raw))


def test_canonical_json_keeps_number_tokens():
    a = '{"b": 1.50, "a": {"y": 1e-3, "x": [1, 2.0]}}'
    b = '{\n  "a": {"x": [1, 2.0], "y": 1e-3},\n  "b": 1.50\n}'
    assert canonical_json(a) == '{"a":{"x":[1,2.0],"y":1e-3},"b":1.50}'
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(a.replace("1.50", "1.5"))


def test_csv_writers(tmp_path):
    g = make_uniform(2, 4)
    ctl = StepControl("euler", 0.1, 1e-8, "clip", 0.5)
    traj = run(exp_decay(1.0), g, make_builtin("constant", c=1), "noncons_coag", ctl, 1.0)
    path = write_ledger(tmp_path / "ledger.csv", traj.ledger)
    data = path.read_bytes()
    assert b"\r" not in data
    rows = list(csv.reader(data.decode().splitlines()))
    assert rows[0] == ["t", "M0", "M1", "accumulated_loss", "clipped_mass", "frag_created_mass"]
    assert [float(x) for x in rows[-1]] == list(list(traj.ledger.rows())[-1])
    snaps = write_snapshots(tmp_path / "snapshots", traj)
    assert [p.name for p in snaps] == ["0.000000.csv", "0.500000.csv", "1.000000.csv"]
    assert snaps[0].read_text().splitlines()[0] == "pivot,width,g"
