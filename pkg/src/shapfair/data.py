"""Datasets: synthetic generator, CSV ingestion, preprocessing, interchange files."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

Z_COLUMN = "__z__"
Y_COLUMN = "__y__"

# P(Z=1) for the synthetic benchmark. Found with calibrate_p_z(n=10**6, seed=0)
# so that ~90% of favourable outcomes belong to z=1; see tests/test_data.py.
DEFAULT_P_Z = 0.837


class DataError(ValueError):
    """Malformed input data or schema."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Encoded features plus the protected attribute ``z`` and target ``y``.

    ``z`` is kept apart from ``features`` so that a model trained on a
    Dataset never sees it as an input column.
    """

    features: np.ndarray
    z: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        z = np.asarray(self.z)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        n, m = X.shape
        if z.shape != (n,) or y.shape != (n,):
            raise DataError(f"z/y lengths {z.shape}/{y.shape} do not match {n} feature rows")
        for label, v in (("z", z), ("y", y)):
            if not np.isin(v, (0, 1)).all():
                raise DataError(f"{label} must contain only 0 and 1")
        names = tuple(self.feature_names)
        if len(names) != m:
            raise DataError(f"{len(names)} feature names for {m} columns")
        if len(set(names)) != m:
            raise DataError("feature names must be distinct")
        if Z_COLUMN in names or Y_COLUMN in names:
            raise DataError("reserved column name used as a feature")
        if not np.isfinite(X).all():
            raise DataError("features must be finite")
        object.__setattr__(self, "features", _readonly(X))
        object.__setattr__(self, "z", _readonly(z.astype(np.int8)))
        object.__setattr__(self, "y", _readonly(y.astype(np.int8)))
        object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    def subset(self, idx, name: Optional[str] = None) -> "Dataset":
        return Dataset(self.features[idx], self.z[idx], self.y[idx], self.feature_names,
                       name=name or self.name)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.y, other.y)
        )


# --------------------------------------------------------------------------
# synthetic benchmark


@dataclass(frozen=True)
class SyntheticConfig:
    n: int = 100_000
    p_z: float = DEFAULT_P_Z
    n_safe: int = 10
    n_indirect: int = 4
    n_proxy: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise DataError(f"n must be >= 1, got {self.n}")
        if not 0.0 < self.p_z < 1.0:
            raise DataError(f"p_z must lie in (0, 1), got {self.p_z}")
        for k in ("n_safe", "n_indirect", "n_proxy"):
            if getattr(self, k) < 0:
                raise DataError(f"{k} must be >= 0")


def generate_synthetic(cfg: SyntheticConfig) -> Dataset:
    """Draw the biased synthetic benchmark.

    Safe covariates are N(0, 1); indirect-effect and proxy covariates are
    N(z, 1). The target log-odds are ``0.25 * sum(indirect + safe) + 1.25 z``;
    proxies influence ``y`` only through their correlation with ``z``.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    z = (rng.random(n) < cfg.p_z).astype(np.int8)
    safe = rng.standard_normal((n, cfg.n_safe))
    indirect = rng.standard_normal((n, cfg.n_indirect)) + z[:, None]
    proxy = rng.standard_normal((n, cfg.n_proxy)) + z[:, None]
    log_odds = 0.25 * (indirect.sum(axis=1) + safe.sum(axis=1)) + 1.25 * z
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-log_odds))).astype(np.int8)
    names = (
        [f"safe_{i}" for i in range(cfg.n_safe)]
        + [f"indirect_{i}" for i in range(cfg.n_indirect)]
        + [f"proxy_{i}" for i in range(cfg.n_proxy)]
    )
    return Dataset(np.hstack([safe, indirect, proxy]), z, y, tuple(names), name="synthetic")


def favourable_share(ds: Dataset) -> float:
    """Fraction of y=1 rows that belong to the privileged group."""
    pos = ds.y == 1
    return float(ds.z[pos].mean())


def calibrate_p_z(target: float = 0.90, n: int = 10**6, seed: int = 0, tol: float = 1e-4) -> float:
    """Bisect P(Z=1) until the favourable share of z=1 hits ``target``.

    The same seed is used at every probe, so the share is monotone in p_z.
    """
    lo, hi = 0.01, 0.99
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        share = favourable_share(generate_synthetic(SyntheticConfig(n=n, p_z=mid, seed=seed)))
        if share < target:
            lo = mid
        else:
            hi = mid
    return round(0.5 * (lo + hi), 4)


def train_test_split(ds: Dataset, test_fraction: float = 0.25, seed: int = 0) -> tuple[Dataset, Dataset]:
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(ds.n_rows)
    n_test = int(round(ds.n_rows * test_fraction))
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return ds.subset(train_idx), ds.subset(test_idx)


# --------------------------------------------------------------------------
# raw CSV ingestion

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class TableSchema:
    """Column roles for a raw CSV file.

    ``columns`` maps every declared column to ``"numeric"`` or
    ``"categorical"``; ``target`` and ``protected`` must be among them.
    ``names`` supplies the header for files that have none.
    """

    columns: Mapping[str, str]
    target: str
    protected: str
    names: Optional[Sequence[str]] = None
    skiprows: int = 0

    def __post_init__(self):
        for role in (self.target, self.protected):
            if role not in self.columns:
                raise DataError(f"column {role!r} has no declared kind")
        bad = {k: v for k, v in self.columns.items() if v not in (NUMERIC, CATEGORICAL)}
        if bad:
            raise DataError(f"unknown column kinds: {bad}")


def load_csv(path, schema: TableSchema) -> pd.DataFrame:
    """Read a raw CSV into a typed table.

    Whitespace around values is trimmed. Rows whose numeric fields cannot be
    parsed are dropped and logged; their original row numbers are kept in
    ``table.attrs["unparseable_rows"]``.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    raw = pd.read_csv(
        path,
        header=None if schema.names is not None else "infer",
        names=list(schema.names) if schema.names is not None else None,
        skiprows=schema.skiprows,
        skipinitialspace=True,
        dtype=str,
        keep_default_na=False,
        skip_blank_lines=True,
    )
    raw.columns = [str(c).strip() for c in raw.columns]
    missing = [c for c in schema.columns if c not in raw.columns]
    if missing:
        raise DataError(f"declared column(s) missing from {path.name}: {', '.join(missing)}")
    if len(raw) == 0:
        raise DataError(f"{path.name}: empty table")

    table = pd.DataFrame(index=raw.index)
    bad = np.zeros(len(raw), dtype=bool)
    for col, kind in schema.columns.items():
        values = raw[col].str.strip()
        if kind == NUMERIC:
            parsed = pd.to_numeric(values, errors="coerce")
            bad |= parsed.isna().to_numpy()
            table[col] = parsed.astype(np.float64)
        else:
            table[col] = values.astype(object)
    if bad.any():
        rows = raw.index[bad].tolist()
        log.warning("%s: dropping %d row(s) with unparseable numeric fields: %s",
                    path.name, len(rows), rows[:10])
        table = table.loc[~bad].reset_index(drop=True)
        if len(table) == 0:
            raise DataError(f"{path.name}: empty table after dropping unparseable rows")
    else:
        rows = []
    table.attrs["unparseable_rows"] = rows
    return table


# --------------------------------------------------------------------------
# preprocessing


@dataclass(frozen=True)
class PreprocessPolicy:
    target: str
    protected: str
    favourable: str
    drop: tuple[str, ...] = ()


@dataclass(frozen=True)
class PreprocessSpec:
    """Statistics fitted on a training table.

    ``columns`` lists the retained input columns in table order, each as
    ``(name, kind)``; numeric columns carry ``(mean, sd)`` in ``scaling`` and
    categorical columns their first-seen category list in ``categories``.
    """

    policy: PreprocessPolicy
    columns: tuple[tuple[str, str], ...]
    scaling: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    categories: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    dropped: tuple[str, ...] = ()

    @property
    def feature_names(self) -> tuple[str, ...]:
        names = []
        for col, kind in self.columns:
            if kind == NUMERIC:
                names.append(col)
            else:
                names.extend(f"{col}={cat}" for cat in self.categories[col])
        return tuple(names)


def fit_preprocess(table: pd.DataFrame, policy: PreprocessPolicy) -> PreprocessSpec:
    """Fit standard scores (population sd) and one-hot category lists."""
    if len(table) == 0:
        raise DataError("cannot fit preprocessing on an empty table")
    for col in (policy.target, policy.protected):
        if col not in table.columns:
            raise DataError(f"column {col!r} missing from table")
    dropped = [c for c in policy.drop if c in table.columns]
    columns, scaling, categories = [], {}, {}
    for col in table.columns:
        if col in (policy.target, policy.protected) or col in policy.drop:
            continue
        series = table[col]
        if pd.api.types.is_numeric_dtype(series):
            values = series.to_numpy(dtype=np.float64)
            mean = float(values.mean())
            sd = float(values.std())
            if not sd > 0.0:
                warnings.warn(f"dropping constant numeric column {col!r}", stacklevel=2)
                dropped.append(col)
                continue
            scaling[col] = (mean, sd)
            columns.append((col, NUMERIC))
        else:
            categories[col] = tuple(pd.unique(series.astype(str)))
            columns.append((col, CATEGORICAL))
    if not columns:
        raise DataError("all input columns were dropped")
    return PreprocessSpec(policy=policy, columns=tuple(columns), scaling=scaling,
                          categories=categories, dropped=tuple(dropped))


def apply_preprocess(table: pd.DataFrame, spec: PreprocessSpec, protected_encoding: str,
                     name: str = "dataset") -> Dataset:
    """Encode a table with fitted statistics.

    ``protected_encoding`` is the raw protected value mapped to ``z = 1``.
    Categories unseen at fit time encode as all-zero indicators.
    """
    policy = spec.policy
    for col in (policy.target, policy.protected):
        if col not in table.columns:
            raise DataError(f"column {col!r} missing from table")
    blocks = []
    for col, kind in spec.columns:
        if col not in table.columns:
            raise DataError(f"column {col!r} missing from table")
        if kind == NUMERIC:
            mean, sd = spec.scaling[col]
            blocks.append(((table[col].to_numpy(dtype=np.float64) - mean) / sd)[:, None])
        else:
            values = table[col].astype(str).to_numpy()
            cats = np.asarray(spec.categories[col], dtype=object)
            blocks.append((values[:, None] == cats[None, :]).astype(np.float64))
    X = np.hstack(blocks)
    z = (table[policy.protected].astype(str).to_numpy() == protected_encoding).astype(np.int8)
    y = (table[policy.target].astype(str).to_numpy() == policy.favourable).astype(np.int8)
    return Dataset(X, z, y, spec.feature_names, name=name)


# --------------------------------------------------------------------------
# UCI Adult

ADULT_COLUMNS = (
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income",
)
_ADULT_NUMERIC = {"age", "fnlwgt", "education-num", "capital-gain", "capital-loss", "hours-per-week"}
ADULT_SCHEMA = TableSchema(
    columns={c: NUMERIC if c in _ADULT_NUMERIC else CATEGORICAL for c in ADULT_COLUMNS},
    target="income",
    protected="sex",
    names=ADULT_COLUMNS,
)
ADULT_POLICY = PreprocessPolicy(
    target="income",
    protected="sex",
    favourable=">50K",
    drop=("race", "marital-status", "native-country", "relationship"),
)
ADULT_PRIVILEGED = "Male"


def load_adult_tables(data_dir) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Read ``adult.data`` / ``adult.test`` from the UCI distribution."""
    data_dir = Path(data_dir)
    train = load_csv(data_dir / "adult.data", ADULT_SCHEMA)
    # adult.test opens with a "|1x3 Cross validator" line and its labels end in "."
    test_schema = TableSchema(ADULT_SCHEMA.columns, "income", "sex", ADULT_COLUMNS, skiprows=1)
    test = load_csv(data_dir / "adult.test", test_schema)
    test["income"] = test["income"].str.rstrip(".")
    return train, test


def load_adult(data_dir) -> tuple[Dataset, Dataset]:
    train_t, test_t = load_adult_tables(data_dir)
    spec = fit_preprocess(train_t, ADULT_POLICY)
    return (
        apply_preprocess(train_t, spec, ADULT_PRIVILEGED, name="adult"),
        apply_preprocess(test_t, spec, ADULT_PRIVILEGED, name="adult"),
    )


def standardize(train: Dataset, *others: Dataset) -> list[Dataset]:
    """Standard-score every feature using train statistics (population sd)."""
    mean = train.features.mean(axis=0)
    sd = train.features.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return [Dataset((d.features - mean) / sd, d.z, d.y, d.feature_names, name=d.name)
            for d in (train, *others)]


def load_synthetic(seed: int = 0, n: int = 100_000, p_z: float = DEFAULT_P_Z) -> tuple[Dataset, Dataset]:
    """Seeded 75/25 split of the synthetic draw, standardized on train."""
    ds = generate_synthetic(SyntheticConfig(n=n, p_z=p_z, seed=seed))
    train, test = train_test_split(ds, 0.25, seed=seed)
    train, test = standardize(train, test)
    return train, test


# --------------------------------------------------------------------------
# CSV interchange: feature columns, then __z__ and __y__ as 0/1 integers


def write_csv(ds: Dataset, path) -> None:
    frame = pd.DataFrame(ds.features, columns=list(ds.feature_names))
    frame[Z_COLUMN] = ds.z.astype(np.int64)
    frame[Y_COLUMN] = ds.y.astype(np.int64)
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def read_csv(path, name: Optional[str] = None) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    frame = pd.read_csv(path, float_precision="round_trip", encoding="utf-8")
    for col in (Z_COLUMN, Y_COLUMN):
        if col not in frame.columns:
            raise DataError(f"{path.name}: missing column {col}")
    if len(frame) == 0:
        raise DataError(f"{path.name}: empty table")
    names = [c for c in frame.columns if c not in (Z_COLUMN, Y_COLUMN)]
    return Dataset(
        frame[names].to_numpy(dtype=np.float64),
        frame[Z_COLUMN].to_numpy(),
        frame[Y_COLUMN].to_numpy(),
        tuple(names),
        name=name or path.parent.name or "csv",
    )
