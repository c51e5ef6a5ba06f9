"""Newton gradient boosting with the SHAPSqueeze fairness regularizer.

The training objective is ``(1 - lam) * BCE + lam * R`` where ``R`` is the
squared SHAP attribution of ``z`` under a linear surrogate refitted to the
current probabilities every round (see :func:`shapfair.surrogate.regularizer`).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy.special import expit

from . import surrogate
from ._tree import NEWTON, Tree, grow_tree, presort
from .data import Dataset

log = logging.getLogger(__name__)

FORMAT = "shapfair-gbdt"
FORMAT_VERSION = 1

HESS_FLOOR = 1e-6


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class GbdtConfig:
    lam: float = 0.0
    C: float = 1.0
    rounds: int = 300
    learning_rate: float = 0.1
    max_depth: int = 4
    min_child_hessian: float = 1.0
    leaf_l2: float = 1.0
    base_margin: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_child_hessian < 0 or self.leaf_l2 < 0:
            raise ValueError("min_child_hessian and leaf_l2 must be >= 0")


@dataclass(frozen=True)
class Objective:
    grad: np.ndarray
    hess: np.ndarray
    loss: float
    # per-component pieces, kept for the gradient-balance diagnostic
    grad_ce: np.ndarray
    grad_reg: Optional[np.ndarray]


def bce_loss(y, margin) -> float:
    """Summed binary cross-entropy written on the margin scale."""
    margin = np.asarray(margin, dtype=np.float64)
    return float(np.sum(np.logaddexp(0.0, margin) - y * margin))


def composite_objective(y, z, margin, lam: float, C: float = 1.0, clamp: bool = True) -> Objective:
    """Gradient, diagonal hessian and value of the fair loss w.r.t. the margin.

    With ``clamp=False`` the exact diagonal second derivative is returned; the
    default clamps the regularizer curvature at 0 and floors the total at
    ``HESS_FLOOR`` so that Newton leaf weights stay well defined.
    """
    y = np.asarray(y, dtype=np.float64)
    margin = np.asarray(margin, dtype=np.float64)
    p = expit(margin)
    s = p * (1.0 - p)
    grad_ce = p - y
    loss = bce_loss(y, margin)
    if lam == 0.0:
        hess = np.maximum(s, HESS_FLOOR) if clamp else s
        return Objective(grad=grad_ce, hess=hess, loss=loss, grad_ce=grad_ce, grad_reg=None)

    reg = surrogate.regularizer(z, p, C)
    grad_reg = reg.grad * s
    hess_reg = reg.hess_diag * s * s + reg.grad * s * (1.0 - 2.0 * p)
    if clamp:
        hess_reg = np.maximum(hess_reg, 0.0)
    grad = (1.0 - lam) * grad_ce + lam * grad_reg
    hess = (1.0 - lam) * s + lam * hess_reg
    if clamp:
        hess = np.maximum(hess, HESS_FLOOR)
    return Objective(
        grad=grad,
        hess=hess,
        loss=(1.0 - lam) * loss + lam * reg.value,
        grad_ce=grad_ce,
        grad_reg=grad_reg,
    )


@dataclass
class GbdtModel:
    trees: list[Tree]
    learning_rate: float
    base_margin: float
    feature_names: tuple[str, ...]
    config: Optional[GbdtConfig] = None
    loss_history: list[float] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict_margin(self, X) -> np.ndarray:
        return predict_margin(self, X)

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self, X)

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "learning_rate": self.learning_rate,
            "base_margin": self.base_margin,
            "feature_names": list(self.feature_names),
            "config": asdict(self.config) if self.config is not None else None,
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "GbdtModel":
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise ValueError(f"not a {FORMAT} document")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported {FORMAT} version {doc.get('version')}")
        cfg = doc.get("config")
        return cls(
            trees=[Tree.from_dict(t) for t in doc["trees"]],
            learning_rate=float(doc["learning_rate"]),
            base_margin=float(doc["base_margin"]),
            feature_names=tuple(doc["feature_names"]),
            config=GbdtConfig(**cfg) if cfg is not None else None,
        )


def _check_columns(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} feature columns, got shape {X.shape}")
    return X


def predict_margin(model: GbdtModel, X) -> np.ndarray:
    X = _check_columns(model, X)
    margin = np.full(X.shape[0], model.base_margin, dtype=np.float64)
    for tree in model.trees:
        margin = margin + model.learning_rate * tree.predict(X)
    return margin


def predict_proba(model: GbdtModel, X) -> np.ndarray:
    return expit(predict_margin(model, X))


def train_shapsqueeze(ds: Dataset, cfg: GbdtConfig, callback=None) -> GbdtModel:
    """Boost regression trees on the fair objective.

    ``callback(round, margin, objective)`` is invoked after each round's
    objective evaluation, before the new tree is added.
    """
    X = ds.features
    y = ds.y.astype(np.float64)
    z = ds.z
    if cfg.lam > 0 and (z.min() == z.max()):
        raise surrogate.DegenerateFitError("both z groups are required when lambda > 0")
    order = presort(X)
    margin = np.full(ds.n_rows, cfg.base_margin, dtype=np.float64)
    model = GbdtModel([], cfg.learning_rate, cfg.base_margin, ds.feature_names, config=cfg)
    probe = min(100, cfg.rounds - 1)
    for r in range(cfg.rounds):
        obj = composite_objective(y, z, margin, cfg.lam, cfg.C)
        if not (np.isfinite(obj.grad).all() and np.isfinite(obj.hess).all()):
            raise TrainingError(
                f"non-finite gradient/hessian at round {r}: "
                f"margin range [{margin.min()}, {margin.max()}]"
            )
        model.loss_history.append(obj.loss)
        if r == probe:
            model.diagnostics = {
                "round": r,
                "mean_abs_grad_ce": float(np.abs(obj.grad_ce).mean()),
                "mean_abs_grad_reg": (float(np.abs(obj.grad_reg).mean())
                                      if obj.grad_reg is not None else 0.0),
            }
            log.debug("gradient balance at round %d: %s", r, model.diagnostics)
        if callback is not None:
            callback(r, margin, obj)
        tree = grow_tree(X, order, np.column_stack([obj.grad, obj.hess]), NEWTON,
                         cfg.max_depth, l2=cfg.leaf_l2, min_child=cfg.min_child_hessian)
        model.trees.append(tree)
        margin = margin + cfg.learning_rate * tree.predict(X)
    model.loss_history.append(composite_objective(y, z, margin, cfg.lam, cfg.C).loss)
    return model
