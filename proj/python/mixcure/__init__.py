"""Mixture cure models that use known cure status."""

import json

import numpy as np

from . import _core
from ._core import (
    DataError,
    DimensionError,
    DomainError,
    Error,
    InputError,
    NonConvergenceError,
    SeparationError,
    SpecError,
    quantile,
)

__all__ = [
    "DataError",
    "DimensionError",
    "DomainError",
    "Error",
    "InputError",
    "NonConvergenceError",
    "SeparationError",
    "SpecError",
    "compare_strategies",
    "fit",
    "quantile",
    "read_dataset",
    "simulate",
]


def _matrix(a):
    return None if a is None else np.atleast_2d(np.asarray(a, dtype=float))


def fit(time, status, x=None, z=None, q=None, **options):
    """Fit the model and return the result as a dict.

    Status codes: 0 censored, 1 event, 2 known cured. Keyword options:
    mechanism, latency, cureid, strategy, lam, max_iter, bootstrap, seed, jobs.
    """
    n = len(time)
    shaped = [None if m is None else _matrix(m).reshape(n, -1) for m in (x, z, q)]
    doc = _core.fit(
        np.asarray(time, dtype=float),
        [int(s) for s in status],
        *shaped,
        **options,
    )
    return json.loads(doc)


def simulate(table=1, n=500, seed=1, **options):
    """Draw one dataset from a preset scenario; arrays plus realized rates."""
    out = dict(_core.simulate(table=table, n=n, seed=seed, **options))
    out["rates"] = json.loads(out["rates"])
    out["status"] = np.asarray(out["status"], dtype=int)
    return out


def compare_strategies(table, n, strategies, replicates, **options):
    """Paired simulation study; returns the study report as a dict."""
    return json.loads(_core.compare_strategies(table, n, list(strategies), replicates, **options))


def read_dataset(path):
    out = dict(_core.read_dataset(str(path)))
    out["status"] = np.asarray(out["status"], dtype=int)
    return out
