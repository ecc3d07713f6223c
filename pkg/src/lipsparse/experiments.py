"""Simulation driver: generate, fit every method along its path, select on the
validation set, score on the test set, aggregate over seeds."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import metrics
from .losses import LossKind, LossSpec
from .pathfit import Eta0Rule, PathSpec, fit_path, select_by_validation
from .prox import RegKind, RegSpec
from .simgen import Example, ExperimentConfig, GeneratedProblem, generate
from .solver import SolverConfig
from .theory_params import slope_weights

__all__ = [
    "Method",
    "MethodSpec",
    "RunOptions",
    "RunRecord",
    "method_spec",
    "run_cell",
    "run_example",
    "rate_check",
    "loglog_slope",
    "aggregate",
    "write_results_csv",
    "write_summary_json",
    "CSV_COLUMNS",
    "SCHEMA_VERSION",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "schema_version", "example", "p", "n", "method", "seed",
    "eta_selected", "l2_error", "task_metric", "iters", "wall_ms", "status",
)


class Method(str, Enum):
    A_L1 = "a_l1"
    B_SLOPE = "b_slope"
    C_L2 = "c_l2"
    D_GROUP_L1L2 = "d_group_l1l2"
    E_GROUP_L1LINF = "e_group_l1linf"
    LASSO = "lasso"
    RIDGE = "ridge"
    L1_LAD = "l1_lad"
    SLOPE_LAD = "slope_lad"


REGRESSION_ONLY = {Method.LASSO, Method.RIDGE, Method.L1_LAD, Method.SLOPE_LAD}
GROUP_ONLY = {Method.D_GROUP_L1L2, Method.E_GROUP_L1LINF}


@dataclass(frozen=True)
class RunOptions:
    """Fitting knobs shared by every cell of a sweep."""

    loss: str = "hinge"  # classification examples: hinge or logistic
    tau: float = 0.2
    theta: float = 0.5
    n_points: int = 50
    max_iter: int = 10000
    rel_tol: float = 1e-8
    ridge_eps: float = 1e-6
    jobs: int = 1

    @property
    def solver(self) -> SolverConfig:
        return SolverConfig(max_iter=self.max_iter, rel_tol=self.rel_tol)


@dataclass(frozen=True)
class MethodSpec:
    label: Method
    loss: LossSpec
    reg: RegSpec | None  # None: ridge path, the grid value is the l2 coefficient
    eta0_rule: Eta0Rule


@dataclass
class RunRecord:
    example: str
    p: int
    n: int
    method: str
    seed: int
    eta_selected: float = math.nan
    l2_error: float = math.nan
    task_metric: float = math.nan
    iters: int = 0
    wall_ms: float = 0.0
    status: str = "ok"

    def key(self) -> tuple:
        return (self.example, self.p, self.n, self.seed, self.method)


def _task_loss(cfg: ExperimentConfig, opts: RunOptions) -> LossSpec:
    if cfg.example is Example.HETEROSCEDASTIC_REGRESSION:
        return LossSpec(LossKind.SMOOTHED_QUANTILE, tau=opts.tau, theta=opts.theta)
    if opts.loss == "hinge":
        return LossSpec(LossKind.SMOOTHED_HINGE, tau=opts.tau)
    if opts.loss == "logistic":
        return LossSpec(LossKind.LOGISTIC)
    raise ValueError(f"classification loss must be 'hinge' or 'logistic', got {opts.loss!r}")


def method_spec(label, cfg: ExperimentConfig, opts: RunOptions, groups=None) -> MethodSpec:
    """Bind a method label to its (loss, penalty, eta_0 rule) triple."""
    label = Method(label)
    regression = cfg.example is Example.HETEROSCEDASTIC_REGRESSION
    if label in REGRESSION_ONLY and not regression:
        raise ValueError(f"method {label.value} only applies to the regression example")
    if label in GROUP_ONLY and groups is None:
        raise ValueError(f"method {label.value} needs grouped data")
    task = _task_loss(cfg, opts)
    lad = LossSpec(LossKind.SMOOTHED_QUANTILE, tau=opts.tau, theta=0.5)
    ls = LossSpec(LossKind.LEAST_SQUARES)
    slope = RegSpec(RegKind.SLOPE, 1.0, weights=slope_weights(cfg.p, cfg.p))
    table = {
        Method.A_L1: (task, RegSpec(RegKind.L1, 1.0), Eta0Rule.L1_COLSUM),
        Method.B_SLOPE: (task, slope, Eta0Rule.L1_COLSUM),
        Method.C_L2: (task, None, Eta0Rule.ROW_NORM_SQ),
        Method.L1_LAD: (lad, RegSpec(RegKind.L1, 1.0), Eta0Rule.L1_COLSUM),
        Method.SLOPE_LAD: (lad, slope, Eta0Rule.L1_COLSUM),
        Method.LASSO: (ls, RegSpec(RegKind.L1, 1.0), Eta0Rule.LASSO_XTY),
        Method.RIDGE: (ls, None, Eta0Rule.RIDGE_SPECTRAL),
    }
    if groups is not None:
        table[Method.D_GROUP_L1L2] = (task, RegSpec(RegKind.GROUP_L1L2, 1.0, groups=groups), Eta0Rule.L1_COLSUM)
        table[Method.E_GROUP_L1LINF] = (
            task, RegSpec(RegKind.GROUP_L1LINF, 1.0, groups=groups), Eta0Rule.GROUP_LINF_RULE,
        )
    loss, reg, rule = table[label]
    return MethodSpec(label, loss, reg, rule)


def _reference(problem: GeneratedProblem, loss: LossSpec, opts: RunOptions, cache: dict):
    if problem.config.example is Example.HETEROSCEDASTIC_REGRESSION:
        return metrics.OracleBeta.known(problem.beta_true)
    if loss not in cache:
        cache[loss] = metrics.estimate_beta_star(problem.test, problem.support, loss, opts.ridge_eps)
    return cache[loss]


def _fit_method(problem: GeneratedProblem, spec: MethodSpec, opts: RunOptions, cache: dict, rec: RunRecord) -> None:
    cfg = problem.config
    regression = cfg.example is Example.HETEROSCEDASTIC_REGRESSION
    path = fit_path(problem.train, spec.loss, spec.reg, PathSpec(opts.n_points, spec.eta0_rule), opts.solver)
    if not path.fits:
        raise RuntimeError(path.diagnostic or "empty path")
    rec.iters = int(sum(f.n_iter for f in path.fits))
    if regression:
        idx = select_by_validation(path, problem.validation, "prediction_error", beta_star=problem.beta_true)
    else:
        idx = select_by_validation(path, problem.validation, "misclassification")
    beta = path.fits[idx].beta
    rec.eta_selected = float(path.etas[idx])
    ref = _reference(problem, spec.loss, opts, cache)
    if regression:
        rec.task_metric = metrics.prediction_error(beta, ref, problem.test.X)
    else:
        rec.task_metric = metrics.misclassification(beta, problem.test)
    try:
        rec.l2_error = metrics.l2_estimation_error(beta, ref)
    except metrics.ZeroEstimateError as exc:
        rec.status = f"zero_estimate: {exc}"
    if path.diagnostic:
        rec.status = f"truncated: {path.diagnostic}"


def run_cell(cfg: ExperimentConfig, methods: Sequence, opts: RunOptions) -> list[RunRecord]:
    """One generated problem (fixed p and seed), every method on it.

    A failing method is recorded with status ``error: ...`` and does not
    affect the other methods.
    """
    problem = generate(cfg)
    cache: dict = {}
    records = []
    for label in methods:
        label = Method(label)
        rec = RunRecord(cfg.example.value, cfg.p, cfg.n, label.value, cfg.seed)
        t0 = time.perf_counter()
        try:
            spec = method_spec(label, cfg, opts, problem.groups)
            _fit_method(problem, spec, opts, cache, rec)
        except Exception as exc:  # noqa: BLE001 - per-cell isolation
            log.warning("method %s failed at p=%d seed=%d: %s", label.value, cfg.p, cfg.seed, exc)
            rec.status = f"error: {type(exc).__name__}: {exc}"
        rec.wall_ms = (time.perf_counter() - t0) * 1e3
        records.append(rec)
    return records


def _run_cell_args(args):
    return run_cell(*args)


def run_example(
    cfg: ExperimentConfig,
    methods: Sequence,
    p_sweep: Sequence[int],
    n_seeds: int,
    opts: RunOptions = RunOptions(),
) -> list[RunRecord]:
    """Sweep over ``p`` and seeds ``cfg.seed, cfg.seed + 1, ...``.

    Cells run in a process pool when ``opts.jobs > 1``; the output is sorted by
    cell key either way.
    """
    if n_seeds < 1 or not p_sweep or not methods:
        raise ValueError("need at least one seed, one p value and one method")
    order = {Method(m).value: k for k, m in enumerate(methods)}
    jobs = []
    for p in p_sweep:
        for s in range(n_seeds):
            jobs.append((cfg.with_(p=int(p), seed=cfg.seed + s), list(methods), opts))
    if opts.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts.jobs) as pool:
            chunks = list(pool.map(_run_cell_args, jobs))
    else:
        chunks = [run_cell(*job) for job in jobs]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (r.p, r.n, r.seed, order[r.method]))
    return records


def loglog_slope(ns: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(n)``."""
    ns = np.asarray(ns, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if ns.size < 2 or np.unique(ns).size < 2:
        raise ValueError("need at least two distinct sample sizes")
    if np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        raise ValueError("errors must be finite and positive")
    return float(np.polyfit(np.log(ns), np.log(errors), 1)[0])


def rate_check(
    method,
    n_sweep: Sequence[int],
    base_cfg: ExperimentConfig,
    n_seeds: int,
    opts: RunOptions = RunOptions(),
) -> tuple[float, list[float]]:
    """Fit ``method`` for every ``n`` and return the log-log slope of the mean L2 error.

    Returns ``(slope, mean_errors)``; the sparse-rate prediction is a slope of -1/2.
    """
    if len(n_sweep) < 4:
        raise ValueError("a rate check needs at least 4 sample sizes")
    means = []
    for n in n_sweep:
        recs = run_example(base_cfg.with_(n=int(n)), [method], [base_cfg.p], n_seeds, opts)
        errs = [r.l2_error for r in recs if math.isfinite(r.l2_error)]
        if not errs:
            raise RuntimeError(f"every fit failed at n={n}")
        means.append(float(np.mean(errs)))
    return loglog_slope(n_sweep, means), means


_METRICS = ("eta_selected", "l2_error", "task_metric", "iters")


def aggregate(records: Iterable[RunRecord]) -> list[dict]:
    """Mean and sample standard deviation per (example, method, p, n).

    Non-finite values (failed fits) are left out and counted separately; a
    single value has standard deviation 0.
    """
    records = list(records)
    if not records:
        raise ValueError("nothing to aggregate")
    cells: dict[tuple, list[RunRecord]] = {}
    for r in records:
        cells.setdefault((r.example, r.method, r.p, r.n), []).append(r)
    summary = []
    for (example, method, p, n), rs in sorted(cells.items()):
        row = {"example": example, "method": method, "p": p, "n": n, "n_runs": len(rs)}
        for name in _METRICS:
            vals = np.array(sorted(float(getattr(r, name)) for r in rs))
            vals = vals[np.isfinite(vals)]
            row[f"{name}_count"] = int(vals.size)
            row[f"{name}_mean"] = float(vals.mean()) if vals.size else math.nan
            row[f"{name}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else (0.0 if vals.size else math.nan)
        summary.append(row)
    return summary


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def write_results_csv(records: Iterable[RunRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            d = asdict(r)
            d["schema_version"] = SCHEMA_VERSION
            writer.writerow([_fmt(d[c]) for c in CSV_COLUMNS])


def write_summary_json(summary: list[dict], path, config: dict | None = None) -> None:
    def clean(v):
        return None if isinstance(v, float) and not math.isfinite(v) else v

    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": config or {},
        "summary": [{k: clean(v) for k, v in row.items()} for row in summary],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
