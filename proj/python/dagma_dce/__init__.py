"""Causal discovery with differential causal effects (C++ core)."""

import json

# The compiled module lives in the build tree during development.
__path__ = __import__("pkgutil").extend_path(__path__, __name__)

from . import _dagma_dce as _core
from ._dagma_dce import (
    FeasibilityError,
    IoError,
    UsageError,
    grad_h_dagma,
    h_dagma,
    kendall_tau_b,
    lemma_witness,
    shd,
    sid,
    spearman_rho,
    threshold,
)

__all__ = [
    "FeasibilityError",
    "IoError",
    "UsageError",
    "evaluate",
    "fit",
    "generate",
    "grad_h_dagma",
    "h_dagma",
    "kendall_tau_b",
    "lemma_witness",
    "shd",
    "sid",
    "spearman_rho",
    "threshold",
]


def generate(**config):
    """Sample a DAG, an SEM on it, and a dataset. Keys as in the gen config."""
    out = _core.generate(json.dumps(config))
    out["sem"] = json.loads(out["sem"])
    return out


def fit(x, **config):
    """Fit a method ("dagma-dce", "dagma" or "linear-dce") and return the result document."""
    return json.loads(_core.fit(x, json.dumps(config)))


def evaluate(est, truth):
    """SHD, SID, precision, recall, F1 and FM index of a binary estimate."""
    return json.loads(_core.evaluate(est, truth))
