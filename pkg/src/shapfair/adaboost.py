"""SHAPEnforce: AdaBoost whose reweighting is blended with a SHAP penalty.

Each round fits a weighted depth-limited tree, refits the linear surrogate to
the tree's probabilities on the ``y == 1`` rows, and multiplies every weight by

    (1 - lam) * exp(alpha_m / 2 * (+1 if wrong else -1)) + lam * exp(P_i)

where ``P_i = -phi_i`` for favourable rows and 0 otherwise, and
``alpha_m = log((1 - e_m) / e_m)``. The half exponent puts half of the
weight mass on the misclassified rows after renormalization, which is what
discrete AdaBoost does; with ``lam == 0`` the update is exactly that
algorithm written in symmetric form.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import surrogate
from ._tree import GINI, Tree, grow_tree, presort
from .data import Dataset

FORMAT = "shapfair-enforce"
FORMAT_VERSION = 1

SCORE_MODES = ("proba", "label")


class DegenerateEnsembleError(ValueError):
    """The stage weights do not sum to a positive number."""


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnforceConfig:
    lam: float = 0.0
    rounds: int = 100
    weak_max_depth: int = 3
    error_clamp_eps: float = 1e-6
    min_child_weight: float = 0.0
    score_mode: str = "proba"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.weak_max_depth < 1:
            raise ValueError("weak_max_depth must be >= 1")
        if not 0.0 < self.error_clamp_eps < 0.5:
            raise ValueError("error_clamp_eps must lie in (0, 0.5)")
        if self.score_mode not in SCORE_MODES:
            raise ValueError(f"score_mode must be one of {SCORE_MODES}")


@dataclass
class ShapEnforceModel:
    alphas: list[float]
    learners: list[Tree]
    feature_names: tuple[str, ...]
    score_mode: str = "proba"
    config: Optional[EnforceConfig] = None
    # per-round training trace: (e_m, alpha_m, surrogate beta or None)
    history: list[tuple] = field(default_factory=list)

    @property
    def stages(self) -> list[tuple[float, Tree]]:
        return list(zip(self.alphas, self.learners))

    def predict_score(self, X) -> np.ndarray:
        return predict_score(self, X)

    def decision_function(self, X) -> np.ndarray:
        """Unnormalized ``sum(alpha_m * k_m(x))``."""
        X = _check_columns(self, X)
        out = np.zeros(X.shape[0])
        for a, k in self.stages:
            out = out + a * _stage_output(k, X, self.score_mode)
        return out

    def to_json(self) -> str:
        return json.dumps({
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "feature_names": list(self.feature_names),
            "score_mode": self.score_mode,
            "config": asdict(self.config) if self.config is not None else None,
            "stages": [{"alpha": a, "tree": k.to_dict()} for a, k in self.stages],
        })

    @classmethod
    def from_json(cls, text: str) -> "ShapEnforceModel":
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise ValueError(f"not a {FORMAT} document")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported {FORMAT} version {doc.get('version')}")
        cfg = doc.get("config")
        return cls(
            alphas=[float(s["alpha"]) for s in doc["stages"]],
            learners=[Tree.from_dict(s["tree"]) for s in doc["stages"]],
            feature_names=tuple(doc["feature_names"]),
            score_mode=doc["score_mode"],
            config=EnforceConfig(**cfg) if cfg is not None else None,
        )


def _check_columns(model: ShapEnforceModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(model.feature_names):
        raise ValueError(f"expected {len(model.feature_names)} feature columns, got shape {X.shape}")
    return X


def _stage_output(tree: Tree, X: np.ndarray, score_mode: str) -> np.ndarray:
    proba = tree.predict(X)
    if score_mode == "label":
        return (proba >= 0.5).astype(np.float64)
    return proba


def predict_score(model: ShapEnforceModel, X) -> np.ndarray:
    """Alpha-weighted mean of stage outputs, a score in [0, 1] when all alphas are positive."""
    if not model.learners:
        raise DegenerateEnsembleError("model has no stages")
    total = float(np.sum(model.alphas))
    if not total > 0.0:
        raise DegenerateEnsembleError(f"sum of stage weights is {total}")
    return model.decision_function(X) / total


def fit_weak_learner(X, order, y, omega, max_depth: int, min_child_weight: float = 0.0) -> Tree:
    stats = np.column_stack([omega, omega * y])
    return grow_tree(X, order, stats, GINI, max_depth, min_child=min_child_weight)


def weight_update(omega, yhat, y, alpha: float, P, lam: float) -> np.ndarray:
    """One reweighting step followed by renormalization."""
    omega = np.asarray(omega, dtype=np.float64)
    wrong = np.asarray(yhat) != np.asarray(y)
    sign = np.where(wrong, 1.0, -1.0)
    if lam == 0.0:
        factor = np.exp(0.5 * alpha * sign)
    else:
        factor = (1.0 - lam) * np.exp(0.5 * alpha * sign) + lam * np.exp(np.asarray(P, dtype=np.float64))
    new = omega * factor
    total = new.sum()
    if not (np.isfinite(total) and total > 0.0):
        raise TrainingError(f"instance weights degenerate after update (sum={total})")
    return new / total


def train_shapenforce(ds: Dataset, cfg: EnforceConfig, callback=None) -> ShapEnforceModel:
    """Run the boosting loop; ``callback(round, omega)`` sees the weights after each update."""
    X = ds.features
    y = ds.y.astype(np.float64)
    z = ds.z
    if cfg.lam > 0:
        zp = z[ds.y == 1]
        if zp.size == 0 or zp.min() == zp.max():
            raise surrogate.DegenerateFitError("y == 1 rows must contain both z groups when lambda > 0")
    order = presort(X)
    n = ds.n_rows
    omega = np.full(n, 1.0 / n)
    eps = cfg.error_clamp_eps
    model = ShapEnforceModel([], [], ds.feature_names, score_mode=cfg.score_mode, config=cfg)
    for m in range(cfg.rounds):
        tree = fit_weak_learner(X, order, y, omega, cfg.weak_max_depth, cfg.min_child_weight)
        ybar = tree.predict(X)
        yhat = (ybar >= 0.5).astype(np.int8)
        wrong = yhat != ds.y
        raw_err = float(omega[wrong].sum())
        err = min(max(raw_err, eps), 1.0 - eps)
        alpha = float(np.log((1.0 - err) / err))
        model.alphas.append(alpha)
        model.learners.append(tree)
        if cfg.lam > 0.0:
            P = surrogate.penalty(z, ds.y, ybar)
            beta = surrogate.fit(z, ybar, mask=ds.y == 1).beta
        else:
            P = None
            beta = None
        model.history.append((raw_err, alpha, beta))
        if cfg.lam == 0.0 and raw_err <= eps:
            # a perfect learner leaves the normalized weights unchanged; later stages would repeat it
            break
        omega = weight_update(omega, yhat, ds.y, alpha, P, cfg.lam)
        if callback is not None:
            callback(m, omega)
    return model
