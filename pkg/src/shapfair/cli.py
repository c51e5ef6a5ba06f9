"""Command-line entry point: gen-data, train, sweep, audit, report.

Exit codes: 0 success, 1 invalid configuration, 2 runtime or data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import adaboost, data, gbdt
from .audit import FairnessReport, build_report

log = logging.getLogger("shapfair")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

SWEEP_FIELDS = ("lambda", "spd", "eod", "fe", "sfe", "auditor_beta", "accuracy", "precision", "auc")
DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(10))
DEFAULT_C = {"synthetic": 1.0, "adult": 10.0}
ALGOS = ("squeeze", "enforce")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dataset: str = "synthetic"
    algo: str = "squeeze"
    lam: float = 0.0
    lambda_grid: tuple[float, ...] = DEFAULT_GRID
    c: Optional[float] = None
    threshold: float = 0.5
    rounds: Optional[int] = None
    depth: Optional[int] = None
    learning_rate: float = 0.1
    seed: int = 0
    n: int = 100_000
    adult_dir: str = field(default_factory=lambda: os.environ.get("SHAPFAIR_ADULT_DIR", "data/adult"))
    score_mode: str = "proba"
    out: Optional[str] = None
    model: Optional[str] = None
    inputs: tuple[str, ...] = field(default_factory=tuple)

    def validate(self) -> "RunConfig":
        if self.algo not in ALGOS:
            raise ConfigError(f"algo must be one of {ALGOS}, got {self.algo!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.lambda_grid:
            raise ConfigError("lambda grid is empty")
        bad = [v for v in self.lambda_grid if not 0.0 <= v <= 1.0]
        if bad:
            raise ConfigError(f"lambda grid values outside [0, 1]: {bad}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.c is not None and not self.c > 0:
            raise ConfigError(f"C must be positive, got {self.c}")
        if self.rounds is not None and self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.depth is not None and self.depth < 0:
            raise ConfigError("depth must be >= 0")
        if not self.learning_rate > 0:
            raise ConfigError("learning rate must be positive")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.score_mode not in adaboost.SCORE_MODES:
            raise ConfigError(f"score mode must be one of {adaboost.SCORE_MODES}")
        return self

    @property
    def C(self) -> float:
        if self.c is not None:
            return self.c
        return DEFAULT_C.get(self.dataset, 1.0)


_CONFIG_KEYS = {f.name for f in fields(RunConfig)} | {"lambda", "c"}


def _parse_grid(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    parts = [p for p in str(text).replace(" ", "").split(",") if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError as e:
        raise ConfigError(f"bad lambda grid {text!r}") from e


def load_config_file(path) -> dict:
    """Read a flat JSON object of config keys (same names as the long flags)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a flat key-value object")
    out = {}
    for key, value in doc.items():
        k = key.replace("-", "_")
        if k not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, (dict, list)) and k != "lambda_grid":
            raise ConfigError(f"config key {key!r} must be a scalar")
        out["lam" if k == "lambda" else k] = value
    if "lambda_grid" in out:
        out["lambda_grid"] = _parse_grid(out["lambda_grid"])
    return out


# --------------------------------------------------------------------------
# datasets and models


def load_dataset(cfg: RunConfig) -> tuple[data.Dataset, data.Dataset]:
    if cfg.dataset == "synthetic":
        return data.load_synthetic(seed=cfg.seed, n=cfg.n)
    if cfg.dataset == "adult":
        return data.load_adult(cfg.adult_dir)
    root = Path(cfg.dataset)
    if not root.is_dir():
        raise data.DataError(f"dataset must be 'synthetic', 'adult', or a directory; got {cfg.dataset!r}")
    name = root.name
    return data.read_csv(root / "train.csv", name=name), data.read_csv(root / "test.csv", name=name)


def train_model(cfg: RunConfig, train: data.Dataset, lam: float):
    if cfg.algo == "squeeze":
        gcfg = gbdt.GbdtConfig(
            lam=lam,
            C=cfg.C,
            rounds=cfg.rounds if cfg.rounds is not None else 300,
            learning_rate=cfg.learning_rate,
            max_depth=cfg.depth if cfg.depth is not None else 4,
            seed=cfg.seed,
        )
        return gbdt.train_shapsqueeze(train, gcfg)
    ecfg = adaboost.EnforceConfig(
        lam=lam,
        rounds=cfg.rounds if cfg.rounds is not None else 100,
        weak_max_depth=cfg.depth if cfg.depth is not None else 3,
        score_mode=cfg.score_mode,
        seed=cfg.seed,
    )
    return adaboost.train_shapenforce(train, ecfg)


def score(model, X) -> np.ndarray:
    if isinstance(model, gbdt.GbdtModel):
        return gbdt.predict_proba(model, X)
    return adaboost.predict_score(model, X)


def load_model(path):
    text = Path(path).read_text(encoding="utf-8")
    fmt = json.loads(text).get("format")
    if fmt == gbdt.FORMAT:
        return gbdt.GbdtModel.from_json(text)
    if fmt == adaboost.FORMAT:
        return adaboost.ShapEnforceModel.from_json(text)
    raise data.DataError(f"{path}: unknown model format {fmt!r}")


def evaluate(cfg: RunConfig, model, test: data.Dataset, lam: float) -> FairnessReport:
    algo = "squeeze" if isinstance(model, gbdt.GbdtModel) else "enforce"
    population = "all" if algo == "squeeze" else "y_equals_1"
    return build_report(
        score(model, test.features), test,
        threshold=cfg.threshold, lam=lam, C=cfg.C if algo == "squeeze" else None,
        population=population, algo=algo, seed=cfg.seed,
    )


def _format(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def report_row(report: FairnessReport) -> dict:
    d = report.to_dict()
    return {k: _format(d[k]) for k in SWEEP_FIELDS}


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def read_sweep_csv(path) -> list[dict]:
    """Parse a sweep CSV; empty cells come back as ``None``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_FIELDS:
            raise data.DataError(f"{path}: unexpected sweep header {reader.fieldnames}")
        return [{k: (float(v) if v != "" else None) for k, v in row.items()} for row in reader]


# --------------------------------------------------------------------------
# commands


def _out_dir(cfg: RunConfig) -> Path:
    if cfg.out is None:
        raise ConfigError("--out is required")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_data(cfg: RunConfig) -> int:
    if cfg.dataset not in ("synthetic", "adult"):
        raise ConfigError("gen-data supports --dataset synthetic or adult")
    out = _out_dir(cfg)
    train, test = load_dataset(cfg)
    data.write_csv(train, out / "train.csv")
    data.write_csv(test, out / "test.csv")
    log.info("wrote %d train / %d test rows to %s", train.n_rows, test.n_rows, out)
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    train, test = load_dataset(cfg)
    model = train_model(cfg, train, cfg.lam)
    (out / "model.json").write_text(model.to_json(), encoding="utf-8")
    report = evaluate(cfg, model, test, cfg.lam)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    print(report.to_json())
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    train, test = load_dataset(cfg)
    reports_dir = out / "reports"
    reports_dir.mkdir(exist_ok=True)
    rows = []
    failed = 0
    for lam in cfg.lambda_grid:
        try:
            model = train_model(cfg, train, lam)
            report = evaluate(cfg, model, test, lam)
        except Exception as e:  # noqa: BLE001 - a failed point is recorded and the sweep continues
            log.error("lambda=%s failed: %s", lam, e)
            failed += 1
            rows.append({k: (_format(lam) if k == "lambda" else "") for k in SWEEP_FIELDS})
            continue
        (reports_dir / f"lambda_{lam:g}.json").write_text(report.to_json(), encoding="utf-8")
        rows.append(report_row(report))
        log.info("lambda=%g beta=%.4f spd=%.4f eod=%.4f auc=%.4f", lam, report.auditor_beta,
                 report.spd, report.eod, report.auc)
    write_sweep_csv(rows, out / "sweep.csv")
    return EXIT_RUNTIME if failed == len(rows) else EXIT_OK


def cmd_audit(cfg: RunConfig) -> int:
    if cfg.model is None:
        raise ConfigError("--model is required")
    model = load_model(cfg.model)
    _, test = load_dataset(cfg)
    lam = model.config.lam if model.config is not None else cfg.lam
    report = evaluate(cfg, model, test, lam)
    if cfg.out is not None:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out).write_text(report.to_json(), encoding="utf-8")
    print(report.to_json())
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    """Collect report JSON files into the sweep CSV layout, sorted by lambda."""
    if not cfg.inputs:
        raise ConfigError("report needs at least one report JSON file")
    reports = [FairnessReport.from_json(Path(p).read_text(encoding="utf-8")) for p in cfg.inputs]
    rows = [report_row(r) for r in sorted(reports, key=lambda r: r.lam)]
    if cfg.out is not None:
        write_sweep_csv(rows, cfg.out)
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
    "report": cmd_report,
}


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat JSON file of defaults; flags override it")
    common.add_argument("--dataset", help="synthetic, adult, or a directory with train.csv/test.csv")
    common.add_argument("--algo", choices=ALGOS)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--lambda-grid", dest="lambda_grid")
    common.add_argument("--c", type=float)
    common.add_argument("--threshold", type=float)
    common.add_argument("--rounds", type=int)
    common.add_argument("--depth", type=int)
    common.add_argument("--learning-rate", dest="learning_rate", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--n", type=int, help="synthetic sample count before the 75/25 split")
    common.add_argument("--adult-dir", dest="adult_dir")
    common.add_argument("--score-mode", dest="score_mode", choices=adaboost.SCORE_MODES)
    common.add_argument("--out")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="shapfair", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("gen-data", parents=[common], help="write train/test interchange CSVs")
    sub.add_parser("train", parents=[common], help="train one model and write model.json + report.json")
    sub.add_parser("sweep", parents=[common], help="train across a lambda grid and write sweep.csv")
    p = sub.add_parser("audit", parents=[common], help="audit a saved model on the test split")
    p.add_argument("--model")
    p = sub.add_parser("report", parents=[common], help="tabulate report JSON files as sweep CSV")
    p.add_argument("inputs", nargs="+")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is None:
            continue
        values[f.name] = v
    if "lambda_grid" in values:
        values["lambda_grid"] = _parse_grid(values["lambda_grid"])
    if "inputs" in values:
        values["inputs"] = tuple(values["inputs"])
    try:
        cfg = replace(RunConfig(), **values)
    except TypeError as e:
        raise ConfigError(str(e)) from e
    return cfg.validate()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help exits 0; argument errors exit EXIT_CONFIG via _Parser.error
        return e.code if isinstance(e.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - mapped onto the documented exit code
        log.error("%s: %s", type(e).__name__, e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
