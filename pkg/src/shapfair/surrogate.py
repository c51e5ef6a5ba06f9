"""Univariate linear surrogate ``ybar ~ beta * z + alpha`` and its SHAP values.

For a linear model the SHAP value of ``z`` on row ``i`` is
``beta * (z_i - mean(z))``. Everything here is closed form, so the surrogate
is cheap enough to refit on every boosting round.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateFitError(ValueError):
    """The fit population holds a single ``z`` class, so ``beta`` is undefined."""


@dataclass(frozen=True)
class LinearSurrogate:
    beta: float
    alpha: float
    z_mean: float
    s_zz: float
    fit_count: int

    @property
    def alpha_shap(self) -> float:
        """Expected prediction over the fit population (the SHAP base value)."""
        return self.alpha + self.beta * self.z_mean

    def predict(self, z: np.ndarray) -> np.ndarray:
        return self.alpha + self.beta * np.asarray(z, dtype=np.float64)

    def shap_values(self, z: np.ndarray) -> np.ndarray:
        return shap_values(self, z)


@dataclass(frozen=True)
class RegularizerEval:
    value: float
    grad: np.ndarray
    hess_diag: np.ndarray
    C: float
    surrogate: LinearSurrogate


def fit(z, ybar, mask=None) -> LinearSurrogate:
    """Ordinary least squares of ``ybar`` on ``z`` over the (masked) rows."""
    z = np.asarray(z, dtype=np.float64)
    ybar = np.asarray(ybar, dtype=np.float64)
    if z.shape != ybar.shape:
        raise ValueError(f"z and ybar lengths differ: {z.shape} vs {ybar.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        z = z[mask]
        ybar = ybar[mask]
    n = z.shape[0]
    if n == 0:
        raise DegenerateFitError("surrogate fit population is empty")
    z_mean = z.mean()
    dz = z - z_mean
    s_zz = float(dz @ dz)
    if not s_zz > 0.0:
        raise DegenerateFitError(
            f"surrogate fit population has a single z class (n={n}, mean(z)={z_mean})"
        )
    y_mean = ybar.mean()
    beta = float(dz @ (ybar - y_mean)) / s_zz
    alpha = float(y_mean - beta * z_mean)
    return LinearSurrogate(beta=beta, alpha=alpha, z_mean=float(z_mean), s_zz=s_zz, fit_count=n)


def shap_values(s: LinearSurrogate, z) -> np.ndarray:
    return s.beta * (np.asarray(z, dtype=np.float64) - s.z_mean)


def regularizer(z, ybar, C: float) -> RegularizerEval:
    """``R = C * sum(phi_i**2)`` with its exact first and second derivatives.

    ``beta`` is treated as a function of ``ybar`` through the closed-form fit,
    which gives ``dR/dybar_k = 2 C beta (z_k - zbar)`` and
    ``d2R/dybar_k2 = 2 C (z_k - zbar)**2 / s_zz``.
    """
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    z = np.asarray(z, dtype=np.float64)
    s = fit(z, ybar)
    dz = z - s.z_mean
    value = C * s.beta * s.beta * s.s_zz
    grad = 2.0 * C * s.beta * dz
    hess = 2.0 * C * dz * dz / s.s_zz
    return RegularizerEval(value=float(value), grad=grad, hess_diag=hess, C=float(C), surrogate=s)


def penalty(z, y, ybar) -> np.ndarray:
    """Per-row reweighting exponent: ``-phi_i`` where ``y_i == 1``, else 0.

    The surrogate is fitted on the ``y == 1`` rows only, so ``mean(z)`` in the
    SHAP value is the favourable-label mean.
    """
    z = np.asarray(z, dtype=np.float64)
    pos = np.asarray(y) == 1
    s = fit(z, ybar, mask=pos)
    return np.where(pos, -shap_values(s, z), 0.0)
