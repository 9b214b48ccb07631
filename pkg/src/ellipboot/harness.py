"""Monte Carlo coverage and volume study over mixtures, sample sizes and methods."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import mixtures
from .errors import ConfigError, NumericFailureError
from .regions import BUILDERS, METHODS, contains, volume
from .resampling import MIN_BOOT, SeedSpec

log = logging.getLogger(__name__)

REPORT_FIELDS = (
    "distribution",
    "n",
    "method",
    "alpha",
    "trials",
    "coverage",
    "mc_se",
    "avg_sq_radius",
    "avg_volume",
    "failure_count",
)
_INT_FIELDS = {"n", "trials", "failure_count"}
_STR_FIELDS = {"distribution", "method"}

# trials handed to a worker at once
_CHUNK = 50


@dataclass
class StudyConfig:
    distributions: list[str] = field(default_factory=lambda: ["biv-normal-indep"])
    sample_sizes: list[int] = field(default_factory=lambda: [10, 20])
    alpha: float = 0.90
    methods: list[str] = field(default_factory=lambda: ["BP", "SBP", "AN", "BT"])
    trials: int = 2000
    B: int = 1000
    C: int = 500
    master_seed: int = 42
    workers: int = 1
    output_path: str | None = None
    output_format: str = "csv"

    def __post_init__(self) -> None:
        self.methods = [m.upper() for m in self.methods]
        self.distributions = list(self.distributions)
        self.sample_sizes = [int(n) for n in self.sample_sizes]

    def validate(self) -> StudyConfig:
        bad = [d for d in self.distributions if d not in mixtures.CATALOG]
        if bad:
            raise ConfigError(f"unknown distribution(s) {', '.join(bad)}; valid names: {', '.join(mixtures.CATALOG)}")
        if not self.distributions:
            raise ConfigError("no distributions requested")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown method(s) {', '.join(bad) or '(none)'}; valid: {', '.join(METHODS)}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.B < MIN_BOOT:
            raise ConfigError(f"B must be at least {MIN_BOOT}")
        if "RBP" in self.methods and self.C < MIN_BOOT:
            raise ConfigError(f"C must be at least {MIN_BOOT} when RBP is requested")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"output format must be csv or json, got {self.output_format!r}")
        if not self.master_seed >= 0:
            raise ConfigError("seed must be nonnegative")
        for d in self.distributions:
            p = mixtures.builtin(d).p
            small = [n for n in self.sample_sizes if n < p + 2]
            if small:
                raise ConfigError(f"sample size(s) {small} too small for {d} (need n >= {p + 2})")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> StudyConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass(frozen=True)
class CoverageRow:
    distribution: str
    n: int
    method: str
    alpha: float
    trials: int
    coverage: float
    mc_se: float
    avg_sq_radius: float
    avg_volume: float
    failure_count: int


@dataclass
class CoverageReport:
    rows: list[CoverageRow] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    def get(self, distribution: str, n: int, method: str) -> CoverageRow:
        for r in self.rows:
            if (r.distribution, r.n, r.method) == (distribution, n, method.upper()):
                return r
        raise KeyError((distribution, n, method))

    def same_results(self, other: CoverageReport) -> bool:
        return self.rows == other.rows


def trial_seed(master_seed: int, distribution: str, n: int, trial: int) -> SeedSpec:
    """Stream for one trial, keyed by catalog position, sample size and trial index."""
    return SeedSpec(master_seed).child(mixtures.CATALOG.index(distribution), n, trial)


def _run_trials(cfg: StudyConfig, distribution: str, n: int, start: int, stop: int) -> np.ndarray:
    """Per-trial results, shape ``(stop - start, n_methods, 4)``: covered, r2, volume, failed."""
    spec = mixtures.builtin(distribution)
    theta = mixtures.true_mean(spec)
    out = np.zeros((stop - start, len(cfg.methods), 4))
    for i, t in enumerate(range(start, stop)):
        seed = trial_seed(cfg.master_seed, distribution, n, t)
        sample = mixtures.draw(spec, n, seed.child(0))
        boot_seed = seed.child(1)
        for j, method in enumerate(cfg.methods):
            try:
                if method == "RBP":
                    region = BUILDERS[method](sample, cfg.alpha, cfg.B, cfg.C, seed=boot_seed)
                else:
                    region = BUILDERS[method](sample, cfg.alpha, cfg.B, seed=boot_seed)
            except NumericFailureError as exc:
                log.debug("trial %d of %s n=%d: %s failed: %s", t, distribution, n, method, exc)
                out[i, j] = (0.0, np.nan, np.nan, 1.0)
                continue
            out[i, j] = (float(contains(region, theta)), region.sq_radius, volume(region), 0.0)
    return out


def _job(args):
    return _run_trials(*args)


def _aggregate(cfg: StudyConfig, distribution: str, n: int, res: np.ndarray) -> list[CoverageRow]:
    rows = []
    for j, method in enumerate(cfg.methods):
        r = res[:, j, :]
        ok = r[:, 3] == 0.0
        used = int(ok.sum())
        if used:
            cov = math.fsum(r[ok, 0]) / used
            se = math.sqrt(cov * (1.0 - cov) / used)
            rad = math.fsum(r[ok, 1]) / used
            vol = math.fsum(r[ok, 2]) / used
        else:
            cov = se = rad = vol = float("nan")
        rows.append(
            CoverageRow(distribution, n, method, cfg.alpha, cfg.trials, cov, se, rad, vol, cfg.trials - used)
        )
    return rows


def run_study(cfg: StudyConfig) -> CoverageReport:
    """Run every (distribution, n) cell; the report does not depend on ``workers``."""
    cfg.validate()
    t0 = time.perf_counter()
    cells = [(d, n) for d in cfg.distributions for n in cfg.sample_sizes]
    jobs = [
        (cfg, d, n, lo, min(lo + _CHUNK, cfg.trials)) for d, n in cells for lo in range(0, cfg.trials, _CHUNK)
    ]
    if cfg.workers == 1:
        parts = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            # map preserves submission order, so aggregation is scheduler independent
            parts = list(pool.map(_job, jobs))
    report = CoverageReport()
    k = 0
    for d, n in cells:
        per_cell = [parts[k + i] for i in range(len(range(0, cfg.trials, _CHUNK)))]
        k += len(per_cell)
        report.rows.extend(_aggregate(cfg, d, n, np.concatenate(per_cell)))
        log.info("finished %s n=%d", d, n)
    report.elapsed_seconds = time.perf_counter() - t0
    return report


def _fmt(name: str, value) -> str:
    if name in _STR_FIELDS:
        return str(value)
    if name in _INT_FIELDS:
        return str(int(value))
    return "nan" if math.isnan(value) else f"{value:#.6g}"


def format_csv_rows(report: CoverageReport) -> list[list[str]]:
    return [[_fmt(f, getattr(r, f)) for f in REPORT_FIELDS] for r in report.rows]


def emit_report(report: CoverageReport, fmt: str, path: str | os.PathLike) -> None:
    """Write the report as CSV (6 significant digits) or JSON."""
    path = Path(path)
    try:
        if fmt == "csv":
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(REPORT_FIELDS)
                w.writerows(format_csv_rows(report))
        elif fmt == "json":
            doc = {"rows": [asdict(r) for r in report.rows], "elapsed_seconds": report.elapsed_seconds}
            path.write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n")
        else:
            raise ConfigError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def read_report(path: str | os.PathLike) -> CoverageReport:
    """Read a report written by ``emit_report`` (format chosen by content)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return CoverageReport([CoverageRow(**r) for r in doc["rows"]], doc.get("elapsed_seconds", 0.0))
    reader = csv.DictReader(text.splitlines())
    if tuple(reader.fieldnames or ()) != REPORT_FIELDS:
        raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
    rows = []
    for rec in reader:
        vals = {
            k: (v if k in _STR_FIELDS else int(v) if k in _INT_FIELDS else float(v)) for k, v in rec.items()
        }
        rows.append(CoverageRow(**vals))
    return CoverageReport(rows)
