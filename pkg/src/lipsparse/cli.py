"""``lipsparse`` command line.

Exit codes: 0 success, 1 usage or data error, 2 solver stopped at the
iteration cap without converging.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np
import yaml

from . import experiments as ex
from .core import GroupPartition, load_csv
from .losses import LossKind, LossSpec
from .lpexport import build_group_linf_svm_lp, build_l1_lad_lp, build_l1_svm_lp, write_lp_file
from .pathfit import Eta0Rule, PathSpec, fit_path, select_by_validation, validation_scores
from .prox import RegKind, RegSpec
from .simgen import Example, ExperimentConfig
from .solver import SolverConfig, fista_solve
from .theory_params import (
    TheoryInputs,
    least_squares_level,
    lipschitz_eta,
    lipschitz_loss_level,
    predicted_rate,
    slope_weights,
)

SCHEMA_VERSION = 1
SEED_ENV = "LIPSPARSE_SEED"
EXIT_OK, EXIT_ERROR, EXIT_MAXITER = 0, 1, 2

LOSSES = {
    "hinge": LossKind.SMOOTHED_HINGE,
    "logistic": LossKind.LOGISTIC,
    "quantile": LossKind.SMOOTHED_QUANTILE,
    "ls": LossKind.LEAST_SQUARES,
}
REGS = {
    "l1": RegKind.L1,
    "slope": RegKind.SLOPE,
    "group_l2": RegKind.GROUP_L1L2,
    "group_linf": RegKind.GROUP_L1LINF,
    "none": RegKind.NONE,
}
LP_FORMS = {"l1svm": build_l1_svm_lp, "groupsvm": build_group_linf_svm_lp, "l1lad": build_l1_lad_lp}
GROUP_FORMS = {"groupsvm"}

log = logging.getLogger("lipsparse")


class CliError(Exception):
    """Usage or data problem; reported on stderr with exit code 1."""


def _notice(msg: str) -> None:
    print(f"notice: {msg}", file=sys.stderr)


# -- simulate config schema ---------------------------------------------------
# key -> (type, default, help); every key is also a --flag of `simulate`.


def _list_of(kind):
    def parse(text):
        if isinstance(text, list):
            return [kind(t) for t in text]
        return [kind(t) for t in str(text).split(",") if t.strip()]

    parse.__name__ = f"list[{kind.__name__}]"
    return parse


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_TYPES = {int: int, float: float, bool: _bool, str: str}


def _schema() -> dict:
    schema = {}
    for f in fields(ExperimentConfig):
        default = f.default.value if isinstance(f.default, Example) else f.default
        typ = str if f.name == "example" else _TYPES[type(f.default)]
        schema[f.name] = (typ, default, f"problem parameter {f.name}")
    schema["example"] = (str, "sparse_classification", "one of " + ", ".join(e.value for e in Example))
    for f in fields(ex.RunOptions):
        if f.name == "jobs":
            continue
        schema[f.name] = (_TYPES[type(f.default)], f.default, f"fitting option {f.name}")
    schema["methods"] = (_list_of(str), ["a_l1", "b_slope", "c_l2"], "comma-separated method labels")
    schema["p_sweep"] = (_list_of(int), [500], "comma-separated list of p values")
    schema["n_seeds"] = (int, 2, "number of seeds (seed, seed+1, ...)")
    schema["jobs"] = (int, os.cpu_count() or 1, "worker processes")
    schema["out_dir"] = (str, "results", "output directory")
    return schema


SIMULATE_SCHEMA = _schema()
FULL_SCALE = {"p_sweep": [1000, 5000, 20000, 50000, 100000], "n_val": 10000, "n_test": 10000}


def load_simulate_config(path) -> dict:
    """Read a YAML mapping and reject unknown keys."""
    p = Path(path)
    if not p.is_file():
        raise CliError(f"config file not found: {p}")
    raw = yaml.safe_load(p.read_text()) or {}
    if not isinstance(raw, dict):
        raise CliError(f"{p}: top level must be a mapping")
    unknown = sorted(set(raw) - set(SIMULATE_SCHEMA))
    if unknown:
        raise CliError(f"{p}: unknown config keys: {', '.join(unknown)}")
    out = {}
    for key, value in raw.items():
        try:
            out[key] = SIMULATE_SCHEMA[key][0](value)
        except (TypeError, ValueError) as exc:
            raise CliError(f"{p}: bad value for {key}: {exc}") from exc
    return out


def resolve_simulate(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then ``--full-scale``, then the environment seed, then flags."""
    values = {k: v[1] for k, v in SIMULATE_SCHEMA.items()}
    from_file = load_simulate_config(args.config) if args.config else {}
    values.update(from_file)
    if getattr(args, "full_scale", False):
        values.update(FULL_SCALE)
    if "seed" not in from_file and os.environ.get(SEED_ENV):
        try:
            values["seed"] = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise CliError(f"{SEED_ENV} must be an integer") from exc
    for key in SIMULATE_SCHEMA:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    return values


# -- shared helpers -----------------------------------------------------------


def _read_groups(args, p: int) -> GroupPartition | None:
    if getattr(args, "groups", None):
        path = Path(args.groups)
        if not path.is_file():
            raise CliError(f"groups file not found: {path}")
        return GroupPartition.from_lists(json.loads(path.read_text()), p)
    if getattr(args, "group_size", None):
        return GroupPartition.contiguous(p, args.group_size)
    return None


def _load(path, args):
    path = Path(path)
    if not path.is_file():
        raise CliError(f"data file not found: {path}")
    data = load_csv(path)
    groups = _read_groups(args, data.p)
    return load_csv(path, groups) if groups is not None else data


def _loss_spec(args) -> LossSpec:
    return LossSpec(LOSSES[args.loss], tau=args.tau, theta=args.theta, l2_ridge=args.l2)


def _reg_spec(args, data, lam: float) -> RegSpec:
    kind = REGS[args.reg]
    weights = None
    if kind is RegKind.SLOPE:
        if args.weights:
            weights = np.array(_list_of(float)(args.weights))
        else:
            weights = slope_weights(data.p, data.p)
            _notice(f"no --weights given; using sqrt(log(2 p e / j)) slope weights for p={data.p}")
    groups = data.groups
    if kind in (RegKind.GROUP_L1L2, RegKind.GROUP_L1LINF) and groups is None:
        raise CliError(f"--reg {args.reg} needs --groups or --group-size")
    return RegSpec(kind, lam, weights=weights, groups=groups)


def _solver_cfg(args) -> SolverConfig:
    return SolverConfig(max_iter=args.max_iter, rel_tol=args.tol)


def _write_json(obj, out) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands --------------------------------------------------------------


def cmd_fit(args) -> int:
    data = _load(args.data, args)
    fit = fista_solve(data, _loss_spec(args), _reg_spec(args, data, args.lam), _solver_cfg(args))
    _write_json(
        {
            "schema_version": SCHEMA_VERSION,
            "beta": (fit.beta + 0.0).tolist(),  # drops negative zeros
            "objective": fit.objective,
            "iters": fit.n_iter,
            "converged": fit.converged,
        },
        args.out,
    )
    if not fit.converged:
        print(f"warning: stopped at max_iter={args.max_iter} without converging", file=sys.stderr)
        return EXIT_MAXITER
    return EXIT_OK


def cmd_path(args) -> int:
    data = _load(args.data, args)
    loss = _loss_spec(args)
    template = None if args.reg == "ridge" else _reg_spec(args, data, 1.0)
    spec = PathSpec(args.n_points, args.eta0_rule, explicit_eta0=args.eta0)
    path = fit_path(data, loss, template, spec, _solver_cfg(args))
    metric = args.metric or ("misclassification" if loss.is_classification else "pinball")
    if args.select and not args.val:
        raise CliError("--select needs --val")
    # metric on the validation set when given, else on the training set
    scored = _load(args.val, args) if args.val else data
    if args.select:
        select_by_validation(path, scored, metric, theta=args.theta)
        scores = path.scores
    else:
        scores = validation_scores(path, scored, metric, theta=args.theta)
    header = ["eta", "objective", "nnz", "iters", "converged", "metric"]
    if args.select:
        header.append("selected")
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["schema_version"] + header)
        for i, (eta, fit) in enumerate(zip(path.etas, path.fits)):
            row = [SCHEMA_VERSION, repr(float(eta)), repr(fit.objective), fit.nnz, fit.n_iter, fit.converged]
            row.append(repr(float(scores[i])))
            if args.select:
                row.append(i == path.selected_index)
            writer.writerow(row)
    finally:
        if args.out:
            fh.close()
    if path.diagnostic:
        print(f"warning: {path.diagnostic}", file=sys.stderr)
    if not all(f.converged for f in path.fits):
        print("warning: some grid points stopped at max_iter", file=sys.stderr)
        return EXIT_MAXITER
    return EXIT_OK


def cmd_simulate(args) -> int:
    v = resolve_simulate(args)
    try:
        cfg = ExperimentConfig(**{f.name: v[f.name] for f in fields(ExperimentConfig)})
        opts = ex.RunOptions(**{f.name: v[f.name] for f in fields(ex.RunOptions)})
        methods = [ex.Method(m) for m in v["methods"]]
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    records = ex.run_example(cfg, methods, v["p_sweep"], v["n_seeds"], opts)
    out = Path(v["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    ex.write_results_csv(records, out / "results.csv")
    failed = [r for r in records if r.status != "ok"]
    for r in failed:
        print(f"warning: p={r.p} seed={r.seed} {r.method}: {r.status}", file=sys.stderr)
    summary = ex.aggregate(records)
    config_echo = {k: v[k] for k in SIMULATE_SCHEMA if k not in ("jobs", "out_dir")}
    ex.write_summary_json(summary, out / "summary.json", config_echo)
    if len(failed) == len(records):
        print("error: every cell failed", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_export_lp(args) -> int:
    if args.form not in LP_FORMS:
        raise CliError(f"unknown form {args.form!r}; valid forms: {', '.join(LP_FORMS)}")
    data = _load(args.data, args)
    if args.form in GROUP_FORMS and data.groups is None:
        raise CliError(f"form {args.form} needs group metadata (--groups or --group-size)")
    model = LP_FORMS[args.form](data, args.lam)
    if args.out:
        write_lp_file(model, args.out)
    else:
        from .lpexport import format_lp

        sys.stdout.write(format_lp(model))
    return EXIT_OK


def cmd_theory(args) -> int:
    G = args.G if args.G is not None else args.p
    if args.M is None:
        _notice("M (sub-Gaussian scale) not given; using M=1")
    M = 1.0 if args.M is None else args.M
    m_star = args.mstar if args.mstar is not None else args.sstar
    inp = TheoryInputs(
        n=args.n, p=args.p, k_star=args.kstar, G=G, s_star=args.sstar, m_star=m_star,
        gamma=args.gamma, alpha=args.alpha, delta=args.delta, L=args.L, M=M, sigma=args.sigma,
    )
    out = {
        "schema_version": SCHEMA_VERSION,
        "inputs": {k: getattr(inp, k) for k in inp.__dataclass_fields__},
        "eta": lipschitz_eta(inp),
        "lambda_l1": lipschitz_loss_level("l1", inp),
        "lambda_group": lipschitz_loss_level("group", inp),
        "slope_weights": slope_weights(inp.p, inp.p).tolist(),
        "slope_levels": lipschitz_loss_level("slope", inp).tolist(),
        "ls_lambda_lasso": least_squares_level("lasso", inp),
        "ls_lambda_group": least_squares_level("group_lasso", inp),
        "rate_sparse": predicted_rate("sparse", inp.n, inp.p, inp.k_star),
        "rate_group": predicted_rate("group", inp.n, G=inp.G, s_star=inp.s_star, m_star=inp.m_star),
    }
    _write_json(out, args.out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


class _DefaultsFormatter(argparse.ArgumentDefaultsHelpFormatter):
    # leave help strings that already describe their default alone
    def _get_help_string(self, action):
        if "(default:" in (action.help or ""):
            return action.help
        return super()._get_help_string(action)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _fit_flags(sp, lam: bool = True) -> None:
    sp.add_argument("data", help="CSV file, last column is the response")
    sp.add_argument("--loss", choices=sorted(LOSSES), default="hinge", help="loss function")
    sp.add_argument("--tau", type=float, default=0.2, help="smoothing parameter")
    sp.add_argument("--theta", type=float, default=0.5, help="quantile level")
    sp.add_argument("--l2", type=float, default=0.0, help="extra ridge coefficient")
    if lam:
        sp.add_argument("--lambda", dest="lam", type=float, default=0.1, help="penalty level")
    sp.add_argument("--weights", default=None, help="comma-separated nonincreasing slope weights")
    sp.add_argument("--groups", default=None, help="JSON file holding a list of index lists")
    sp.add_argument("--group-size", type=int, default=None, help="contiguous groups of this size")
    sp.add_argument("--max-iter", type=int, default=20000, help="iteration cap")
    sp.add_argument("--tol", type=float, default=1e-8, help="relative objective tolerance")
    sp.add_argument("--out", default=None, help="output file (stdout if omitted)")


def build_parser() -> argparse.ArgumentParser:
    fmt = _DefaultsFormatter
    parser = _Parser(prog="lipsparse", description="Sparse estimation with Lipschitz losses.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("fit", help="fit one model", formatter_class=fmt)
    _fit_flags(sp)
    sp.add_argument("--reg", choices=list(REGS), default="l1", help="penalty")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("path", help="fit a regularization path", formatter_class=fmt)
    _fit_flags(sp, lam=False)
    sp.add_argument("--reg", choices=list(REGS) + ["ridge"], default="l1", help="penalty (ridge: l2 path)")
    sp.add_argument("--n-points", type=int, default=50, help="grid size")
    sp.add_argument("--eta0-rule", choices=[r.value for r in Eta0Rule], default="l1_colsum", help="grid start rule")
    sp.add_argument("--eta0", type=float, default=None, help="grid start for the explicit rule")
    sp.add_argument("--select", action="store_true", help="select a grid point on --val")
    sp.add_argument("--val", default=None, help="validation CSV")
    sp.add_argument(
        "--metric", choices=["misclassification", "pinball"], default=None,
        help="path metric (default: misclassification for classification losses, pinball otherwise)",
    )
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("simulate", help="run a simulation sweep", formatter_class=fmt)
    sp.add_argument("--config", default=None, help="YAML config file; flags override its values")
    sp.add_argument(
        "--full-scale", action="store_true",
        help="use the full p sweep up to 100000 with 10000 validation and test samples (large memory)",
    )
    for key, (typ, default, help_text) in SIMULATE_SCHEMA.items():
        shown = ",".join(map(str, default)) if isinstance(default, list) else default
        env = f"; env {SEED_ENV} when unset" if key == "seed" else ""
        sp.add_argument(
            f"--{key.replace('_', '-')}", dest=key, type=typ, default=None,
            help=f"{help_text} (default: {shown}{env})",
        )
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("export-lp", help="write an LP formulation", formatter_class=fmt)
    sp.add_argument("data", help="CSV file, last column is the response")
    sp.add_argument("--form", default="l1svm", help=f"one of {', '.join(LP_FORMS)}")
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0, help="penalty level")
    sp.add_argument("--groups", default=None, help="JSON file holding a list of index lists")
    sp.add_argument("--group-size", type=int, default=None, help="contiguous groups of this size")
    sp.add_argument("--out", default=None, help="output file (stdout if omitted)")
    sp.set_defaults(func=cmd_export_lp)

    sp = sub.add_parser("theory", help="print theory-driven levels", formatter_class=fmt)
    sp.add_argument("--n", type=int, required=True, help="sample size")
    sp.add_argument("--p", type=int, required=True, help="number of features")
    sp.add_argument("--kstar", type=int, default=1, help="sparsity k*")
    sp.add_argument("--G", type=int, default=None, help="number of groups (default: p)")
    sp.add_argument("--sstar", type=int, default=1, help="relevant groups s*")
    sp.add_argument("--mstar", type=int, default=None, help="relevant-group size m* (default: s*)")
    sp.add_argument("--gamma", type=float, default=1.0, help="gamma >= 1")
    sp.add_argument("--alpha", type=float, default=2.0, help="alpha >= 2")
    sp.add_argument("--delta", type=float, default=0.1, help="confidence level in (0, 1)")
    sp.add_argument("--L", type=float, default=1.0, help="loss Lipschitz constant")
    sp.add_argument("--M", type=float, default=None, help="sub-Gaussian scale (default: 1 with a notice)")
    sp.add_argument("--sigma", type=float, default=1.0, help="noise scale (least squares)")
    sp.add_argument("--out", default=None, help="output file (stdout if omitted)")
    sp.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
