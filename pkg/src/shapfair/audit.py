"""External auditor: a linear surrogate fitted to held-out scores.

The auditor's coefficient on ``z`` is the explicability-fairness measurement.
A model is *explicably fair* when the auditor's mean ``z`` attribution does not
differ between groups (``fe`` ~ 0) and *strongly* fair when the total
attribution vanishes (``sfe`` ~ 0).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import metrics, surrogate
from .data import Dataset

POPULATIONS = ("all", "y_equals_1")

REPORT_FIELDS = (
    "spd", "eod", "fe", "sfe", "auditor_beta", "accuracy", "precision", "auc",
    "threshold", "lambda", "c", "algo", "dataset", "seed",
)


@dataclass(frozen=True)
class AuditorResult:
    beta: float
    fe: float
    sfe: float
    population: str
    n_audited: int


@dataclass(frozen=True)
class Verdict:
    explicably_fair: bool
    strongly_fair: bool


def audit(scores, z, y, population: str = "all") -> AuditorResult:
    if population not in POPULATIONS:
        raise ValueError(f"population must be one of {POPULATIONS}")
    scores = np.asarray(scores, dtype=np.float64)
    z = np.asarray(z)
    mask = None if population == "all" else np.asarray(y) == 1
    l = surrogate.fit(z, scores, mask=mask)
    z_pop = z if mask is None else z[mask]
    phi = surrogate.shap_values(l, z_pop)
    return AuditorResult(
        beta=l.beta,
        fe=metrics.fe(phi, z_pop),
        sfe=metrics.sfe(phi),
        population=population,
        n_audited=l.fit_count,
    )


def verdict(result: AuditorResult, tol_fe: float = 1e-3, tol_sfe: float = 1e-3) -> Verdict:
    return Verdict(explicably_fair=result.fe <= tol_fe, strongly_fair=result.sfe <= tol_sfe)


@dataclass(frozen=True)
class FairnessReport:
    spd: float
    eod: float
    fe: float
    sfe: float
    auditor_beta: float
    accuracy: float
    precision: Optional[float]
    auc: float
    threshold: float
    lam: float
    c: Optional[float]
    algo: str = ""
    dataset: str = ""
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return {k: d[k] for k in REPORT_FIELDS}

    @classmethod
    def from_dict(cls, d: dict) -> "FairnessReport":
        missing = [k for k in REPORT_FIELDS if k not in d]
        if missing:
            raise ValueError(f"report is missing field(s): {missing}")
        kw = {k: d[k] for k in REPORT_FIELDS}
        kw["lam"] = kw.pop("lambda")
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FairnessReport":
        return cls.from_dict(json.loads(text))


def build_report(
    scores,
    ds: Dataset,
    threshold: float = 0.5,
    lam: float = 0.0,
    C: Optional[float] = None,
    population: str = "all",
    algo: str = "",
    seed: Optional[int] = None,
) -> FairnessReport:
    """Threshold the scores, compute every metric, and audit on ``population``."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (ds.n_rows,):
        raise ValueError(f"{scores.shape[0]} scores for {ds.n_rows} rows")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    yhat = metrics.threshold_scores(scores, threshold)
    aud = audit(scores, ds.z, ds.y, population)
    return FairnessReport(
        spd=metrics.spd(yhat, ds.z),
        eod=metrics.eod(yhat, ds.y, ds.z),
        fe=aud.fe,
        sfe=aud.sfe,
        auditor_beta=aud.beta,
        accuracy=metrics.accuracy(yhat, ds.y),
        precision=metrics.precision(yhat, ds.y),
        auc=metrics.auc(scores, ds.y),
        threshold=float(threshold),
        lam=float(lam),
        c=None if C is None else float(C),
        algo=algo,
        dataset=ds.name,
        seed=seed,
    )
