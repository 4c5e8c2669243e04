"""Reference run configurations shared by ``cfe verify`` and the test suite.

Each entry is a plain JSON-compatible dict in the run-config format, so it
can be written to disk and fed to ``cfe run`` unchanged.
"""
from __future__ import annotations

import copy

__all__ = ["REFERENCE_CONFIGS", "CONSERVATIVE_KERNELS", "reference_config", "conservative_config"]

_EXP = {"type": "exp_decay", "lambda": 1}


def _step(dt, every, positivity="reject"):
    return {"method": "rk4", "dt": dt, "dt_min": 1e-8, "positivity": positivity, "sample_every": every}


REFERENCE_CONFIGS = {
    "constant_coag": {
        "kernel": {"family": "constant", "c": 1},
        "grid": {"type": "geometric", "R": 200, "cells": 400},
        "scheme": "conservative",
        "step": _step(0.01, 0.5),
        "initial": _EXP,
        "T": 10,
    },
    "binary_frag": {
        "kernel": {"family": "constant_frag", "c": 2},
        "grid": {"type": "geometric", "R": 100, "cells": 400},
        "scheme": "conservative",
        "step": _step(0.01, 0.25),
        "initial": _EXP,
        "T": 3,
    },
    "product_m2": {
        "kernel": {"family": "multiplicative"},
        "grid": {"type": "geometric", "R": 500, "cells": 1000},
        "scheme": "noncons_coag",
        "step": _step(0.002, 0.05),
        "initial": _EXP,
        "T": 0.4,
    },
    "frozen": {
        "kernel": {"family": "zero"},
        "grid": {"type": "geometric", "R": 50, "cells": 200},
        "scheme": "noncons_coag",
        "step": _step(0.01, 0.25),
        "initial": _EXP,
        "T": 1,
    },
    "additive_frag": {
        "kernel": {"coag": {"family": "additive"}, "frag": {"family": "constant_frag", "c": 1}},
        "grid": {"type": "geometric", "R": 50, "cells": 200},
        "scheme": "noncons_coag",
        "step": _step(0.01, 0.05),
        "initial": _EXP,
        "T": 2,
    },
    "truncation_sweep": {
        "kernel": {"coag": {"family": "constant", "c": 1}, "frag": {"family": "constant_frag", "c": 1}},
        "grid": {"type": "geometric", "R": 10, "cells": 40},
        "scheme": "noncons_coag",
        "step": _step(0.01, 0.5),
        "initial": _EXP,
        "T": 5,
    },
    "gelation": {
        "kernel": {"family": "multiplicative"},
        "grid": {"type": "geometric", "R": 250, "cells": 500},
        "scheme": "noncons_coag",
        "step": _step(0.002, 0.05),
        "initial": _EXP,
        "T": 1,
    },
}

# every linearly bounded built-in, alone and in coag/frag combinations
CONSERVATIVE_KERNELS = {
    "constant": {"family": "constant", "c": 1},
    "additive": {"family": "additive"},
    "linear_sum": {"family": "linear_sum", "a": 1},
    "constant_frag": {"family": "constant_frag", "c": 1},
    "zero": {"family": "zero"},
    "constant+frag": {"coag": {"family": "constant", "c": 1}, "frag": {"family": "constant_frag", "c": 1}},
    "additive+frag": {"coag": {"family": "additive"}, "frag": {"family": "constant_frag", "c": 1}},
    "linear_sum+frag": {"coag": {"family": "linear_sum", "a": 1}, "frag": {"family": "constant_frag", "c": 2}},
}


def reference_config(name: str) -> dict:
    return copy.deepcopy(REFERENCE_CONFIGS[name])


def conservative_config(kernel_name: str) -> dict:
    return {
        "kernel": copy.deepcopy(CONSERVATIVE_KERNELS[kernel_name]),
        "grid": {"type": "geometric", "R": 50, "cells": 200},
        "scheme": "conservative",
        "step": _step(0.005, 0.1),
        "initial": _EXP,
        "T": 2,
    }
