"""Statistical, explicability, and predictive metrics for binary classifiers.

Group conventions: ``z == 1`` is the privileged group and label 1 is the
favourable outcome.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.stats import rankdata


class MetricError(ValueError):
    """A metric is undefined on the given inputs (e.g. a missing group)."""


def _binary(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return a.astype(np.int8)


def _group_rates(values: np.ndarray, z: np.ndarray, what: str) -> tuple[float, float]:
    on, off = z == 1, z == 0
    if not on.any() or not off.any():
        raise MetricError(f"{what}: both z groups must be present")
    return float(values[on].mean()), float(values[off].mean())


def threshold_scores(ybar, t: float = 0.5) -> np.ndarray:
    """Favourable label wherever the score reaches ``t`` (``>=``)."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {t}")
    return (np.asarray(ybar, dtype=np.float64) >= t).astype(np.int8)


def spd(yhat, z) -> float:
    """|P(yhat=1 | z=1) - P(yhat=1 | z=0)|"""
    yhat, z = _binary(yhat, "yhat"), _binary(z, "z")
    a, b = _group_rates(yhat, z, "spd")
    return abs(a - b)


def eod(yhat, y, z) -> float:
    """True-positive-rate gap between the z groups."""
    yhat, y, z = _binary(yhat, "yhat"), _binary(y, "y"), _binary(z, "z")
    pos = y == 1
    a, b = _group_rates(yhat[pos], z[pos], "eod (y == 1 subset)")
    return abs(a - b)


def fe(phi, z) -> float:
    """Absolute gap in mean attribution between the z groups."""
    phi = np.asarray(phi, dtype=np.float64)
    z = _binary(z, "z")
    a, b = _group_rates(phi, z, "fe")
    return abs(a - b)


def sfe(phi) -> float:
    """Mean absolute attribution over the population."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.size == 0:
        raise MetricError("sfe: empty attribution vector")
    return float(np.abs(phi).mean())


def auc(ybar, y) -> float:
    """ROC AUC via the Mann-Whitney U statistic, average ranks for ties."""
    ybar = np.asarray(ybar, dtype=np.float64)
    y = _binary(y, "y")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("auc: both label classes must be present")
    ranks = rankdata(ybar)
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(yhat, y) -> float:
    yhat, y = _binary(yhat, "yhat"), _binary(y, "y")
    if y.size == 0:
        raise MetricError("accuracy: no rows")
    return float((yhat == y).mean())


def precision(yhat, y) -> Optional[float]:
    """TP / (TP + FP), or ``None`` when nothing is predicted favourable."""
    yhat, y = _binary(yhat, "yhat"), _binary(y, "y")
    predicted = yhat == 1
    if not predicted.any():
        return None
    return float((y[predicted] == 1).mean())
