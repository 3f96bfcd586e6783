"""Adaptive interpolative quadrature."""

import csv
import io
import json

from ._core import (
    AquadError,
    BudgetExhausted,
    banana_log_density,
    exoplanet_evidence,
    multimodal_log_density,
    solve_kepler,
)
from . import _core

__all__ = [
    "AquadError",
    "BudgetExhausted",
    "banana_log_density",
    "exoplanet_evidence",
    "experiment",
    "multimodal_log_density",
    "oracle",
    "run",
    "solve_kepler",
]


def run(config=None, target="banana", dim=2):
    """One adaptive run; returns the final report as a dict."""
    return json.loads(_core._run(json.dumps(config or {}), target, dim))


def oracle(target="banana", dim=2, resolution=2000):
    """Grid ground truth (Z, mean, variance and error estimates)."""
    return json.loads(_core._oracle(target, dim, resolution))


def experiment(config):
    """Runs an experiment grid and returns the summary rows."""
    rows = list(csv.DictReader(io.StringIO(_core._experiment(json.dumps(config)))))
    for r in rows:
        for k, v in r.items():
            try:
                r[k] = float(v) if "." in v or "e" in v or "nan" in v else int(v)
            except ValueError:
                pass
    return rows
