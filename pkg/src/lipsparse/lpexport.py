"""LP reformulations of hinge/LAD problems, an LP-format writer/reader and a
brute-force vertex-enumeration solver for tiny instances.

Objectives follow the unnormalised LP form ``sum_i xi_i + lambda * (...)``;
compare with the ``(1/n)``-normalised solver objective by dividing by ``n``
(equivalently, the LP ``lambda`` equals ``n`` times the solver level).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset

__all__ = [
    "Constraint",
    "LpModel",
    "LpInfeasibleError",
    "LpUnboundedError",
    "build_l1_svm_lp",
    "build_group_linf_svm_lp",
    "build_l1_lad_lp",
    "format_lp",
    "write_lp_file",
    "parse_lp",
    "read_lp_file",
    "solve_tiny_lp",
    "tiny_lp_argmin",
]

SENSES = (">=", "<=", "=")
TERMS_PER_LINE = 6


class LpInfeasibleError(ValueError):
    pass


class LpUnboundedError(ValueError):
    pass


@dataclass
class Constraint:
    name: str
    coefs: dict[str, float]
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown constraint sense {self.sense!r}")


@dataclass
class LpModel:
    """Minimisation LP. ``bounds[name] = (lower, upper)``; ``None`` means infinite."""

    variables: list[str] = field(default_factory=list)
    bounds: dict[str, tuple[float | None, float | None]] = field(default_factory=dict)
    objective: dict[str, float] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)

    def add_var(self, name: str, lower: float | None = 0.0, upper: float | None = None) -> str:
        if name in self.bounds:
            raise ValueError(f"variable {name} declared twice")
        self.variables.append(name)
        self.bounds[name] = (lower, upper)
        return name

    def add_constraint(self, name: str, coefs: dict[str, float], sense: str, rhs: float) -> None:
        unknown = [v for v in coefs if v not in self.bounds]
        if unknown:
            raise ValueError(f"constraint {name} references undeclared variables {unknown}")
        self.constraints.append(Constraint(name, {v: c for v, c in coefs.items() if c != 0}, sense, float(rhs)))

    def set_objective(self, coefs: dict[str, float]) -> None:
        unknown = [v for v in coefs if v not in self.bounds]
        if unknown:
            raise ValueError(f"objective references undeclared variables {unknown}")
        self.objective = {v: float(c) for v, c in coefs.items() if c != 0}

    def evaluate(self, values: dict[str, float]) -> float:
        return float(sum(c * values[v] for v, c in self.objective.items()))


def _l1_margin_part(model: LpModel, data: Dataset, lam: float) -> tuple[list[str], list[str], list[str]]:
    n, p = data.n, data.p
    xi = [model.add_var(f"xi_{i + 1}") for i in range(n)]
    bp = [model.add_var(f"bp_{j + 1}") for j in range(p)]
    bm = [model.add_var(f"bm_{j + 1}") for j in range(p)]
    A, y = data.X.values, data.y
    for i in range(n):
        coefs = {xi[i]: 1.0}
        for j in range(p):
            a = float(y[i] * A[i, j])
            coefs[bp[j]] = a
            coefs[bm[j]] = -a
        model.add_constraint(f"margin_{i + 1}", coefs, ">=", 1.0)
    return xi, bp, bm


def build_l1_svm_lp(data: Dataset, lam: float) -> LpModel:
    """``min sum xi + lam sum (b+ + b-)`` s.t. ``xi_i + y_i x_i^T (b+ - b-) >= 1``, all vars >= 0."""
    data.check_binary()
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    model = LpModel()
    xi, bp, bm = _l1_margin_part(model, data, lam)
    obj = {v: 1.0 for v in xi}
    obj.update({v: lam for v in bp})
    obj.update({v: lam for v in bm})
    model.set_objective(obj)
    return model


def build_group_linf_svm_lp(data: Dataset, lam: float) -> LpModel:
    """Hinge loss with the group L1-Linf penalty; ``v_g`` bounds ``|beta_j|`` on group ``g``."""
    data.check_binary()
    if data.groups is None:
        raise ValueError("group formulation needs a dataset with groups")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    model = LpModel()
    xi, bp, bm = _l1_margin_part(model, data, lam)
    v = [model.add_var(f"v_{g + 1}") for g in range(data.groups.n_groups)]
    for j in range(data.p):
        g = int(data.groups.ids[j])
        model.add_constraint(f"link_{j + 1}", {v[g]: 1.0, bp[j]: -1.0, bm[j]: -1.0}, ">=", 0.0)
    obj = {x: 1.0 for x in xi}
    obj.update({x: lam for x in v})
    model.set_objective(obj)
    return model


def build_l1_lad_lp(data: Dataset, lam: float) -> LpModel:
    """``min sum xi + lam sum (b+ + b-)`` with ``xi_i >= |y_i - x_i^T (b+ - b-)|``."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    n, p = data.n, data.p
    model = LpModel()
    xi = [model.add_var(f"xi_{i + 1}") for i in range(n)]
    bp = [model.add_var(f"bp_{j + 1}") for j in range(p)]
    bm = [model.add_var(f"bm_{j + 1}") for j in range(p)]
    A, y = data.X.values, data.y
    for i in range(n):
        up = {xi[i]: 1.0}
        lo = {xi[i]: 1.0}
        for j in range(p):
            a = float(A[i, j])
            up[bp[j]], up[bm[j]] = a, -a
            lo[bp[j]], lo[bm[j]] = -a, a
        # xi_i >= y_i - x_i^T(b+ - b-)  and  xi_i >= x_i^T(b+ - b-) - y_i
        model.add_constraint(f"absp_{i + 1}", up, ">=", float(y[i]))
        model.add_constraint(f"absm_{i + 1}", lo, ">=", -float(y[i]))
    obj = {v: 1.0 for v in xi}
    obj.update({v: lam for v in bp})
    obj.update({v: lam for v in bm})
    model.set_objective(obj)
    return model


# -- LP text format -----------------------------------------------------------


def _num(x: float) -> str:
    s = "%.17g" % x
    return "0" if s in ("-0", "0") else s


def _terms(coefs: dict[str, float]) -> list[str]:
    out = []
    for name, c in coefs.items():
        sign = "-" if c < 0 else "+"
        out.append(f"{sign} {_num(abs(c))} {name}")
    return out


def _wrapped(head: str, terms: list[str], tail: str = "") -> list[str]:
    chunks = [terms[i : i + TERMS_PER_LINE] for i in range(0, len(terms), TERMS_PER_LINE)] or [[]]
    lines = []
    for k, chunk in enumerate(chunks):
        prefix = f" {head}" if k == 0 else "  "
        lines.append(" ".join([prefix] + chunk) if chunk else prefix)
    if tail:
        lines[-1] = f"{lines[-1]} {tail}"
    return lines


def format_lp(model: LpModel) -> str:
    lines = ["Minimize"]
    lines += _wrapped("obj:", _terms(model.objective))
    lines.append("Subject To")
    for con in model.constraints:
        lines += _wrapped(f"{con.name}:", _terms(con.coefs), f"{con.sense} {_num(con.rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        lo, up = model.bounds[v]
        if lo is None and up is None:
            lines.append(f" {v} free")
        elif up is None:
            lines.append(f" {v} >= {_num(lo)}")
        elif lo is None:
            lines.append(f" -inf <= {v} <= {_num(up)}")
        else:
            lines.append(f" {_num(lo)} <= {v} <= {_num(up)}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp_file(model: LpModel, path) -> None:
    Path(path).write_text(format_lp(model))


def _parse_terms(tokens: list[str]) -> dict[str, float]:
    coefs = {}
    if len(tokens) % 3:
        raise ValueError(f"malformed linear expression: {' '.join(tokens)}")
    for k in range(0, len(tokens), 3):
        sign, val, name = tokens[k : k + 3]
        if sign not in "+-":
            raise ValueError(f"expected a sign, got {sign!r}")
        coefs[name] = float(val) if sign == "+" else -float(val)
    return coefs


def parse_lp(text: str) -> LpModel:
    sections: dict[str, list[str]] = {}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if line in ("Minimize", "Subject To", "Bounds", "End"):
            current = line
            sections[current] = []
        elif line:
            if current is None:
                raise ValueError(f"content before the Minimize section: {raw!r}")
            sections[current].append(line)

    model = LpModel()
    for line in sections.get("Bounds", []):
        tok = line.split()
        if len(tok) == 2 and tok[1] == "free":
            model.add_var(tok[0], None, None)
        elif len(tok) == 3 and tok[1] == ">=":
            model.add_var(tok[0], float(tok[2]), None)
        elif len(tok) == 5 and tok[1] == tok[3] == "<=":
            lo = None if tok[0] == "-inf" else float(tok[0])
            model.add_var(tok[2], lo, float(tok[4]))
        else:
            raise ValueError(f"cannot parse bound line {line!r}")

    obj_tokens = " ".join(sections.get("Minimize", [])).split()
    if not obj_tokens or obj_tokens[0] != "obj:":
        raise ValueError("objective must start with 'obj:'")
    model.set_objective(_parse_terms(obj_tokens[1:]))

    tokens = " ".join(sections.get("Subject To", [])).split()
    starts = [k for k, t in enumerate(tokens) if t.endswith(":")] + [len(tokens)]
    for a, b in zip(starts[:-1], starts[1:]):
        body = tokens[a + 1 : b]
        if len(body) < 2 or body[-2] not in SENSES:
            raise ValueError(f"constraint {tokens[a]} has no sense/rhs")
        model.add_constraint(tokens[a][:-1], _parse_terms(body[:-2]), body[-2], float(body[-1]))
    return model


def read_lp_file(path) -> LpModel:
    return parse_lp(Path(path).read_text())


# -- brute-force solver -------------------------------------------------------


def _dense_form(model: LpModel):
    """Rows ``G x >= h`` (bounds included) and ``E x = e``."""
    idx = {v: k for k, v in enumerate(model.variables)}
    d = len(model.variables)
    G, h, E, e = [], [], [], []
    for con in model.constraints:
        row = np.zeros(d)
        for v, c in con.coefs.items():
            row[idx[v]] = c
        if con.sense == "=":
            E.append(row)
            e.append(con.rhs)
        else:
            sgn = 1.0 if con.sense == ">=" else -1.0
            G.append(sgn * row)
            h.append(sgn * con.rhs)
    for v in model.variables:
        lo, up = model.bounds[v]
        if lo is None:
            raise ValueError(f"tiny LP solver needs finite lower bounds; {v} is unbounded below")
        row = np.zeros(d)
        row[idx[v]] = 1.0
        G.append(row)
        h.append(lo)
        if up is not None:
            G.append(-row)
            h.append(-up)
    c = np.array([model.objective.get(v, 0.0) for v in model.variables])
    G = np.array(G).reshape(len(G), d)
    E = np.array(E).reshape(len(E), d)
    return c, G, np.array(h, dtype=float), E, np.array(e, dtype=float)


def _vertex_min(c, G, h, E, e, tol=1e-9, chunk=20000):
    d = c.size
    n_eq = E.shape[0]
    k = d - n_eq
    if k < 0 or k > G.shape[0]:
        return None
    best_val, best_x = math.inf, None
    combos = itertools.combinations(range(G.shape[0]), k)
    while True:
        batch = list(itertools.islice(combos, chunk))
        if not batch:
            break
        S = np.array(batch, dtype=np.intp).reshape(len(batch), k)
        M = np.concatenate([np.broadcast_to(E, (len(batch), n_eq, d)), G[S]], axis=1)
        r = np.concatenate([np.broadcast_to(e, (len(batch), n_eq)), h[S]], axis=1)
        sv = np.linalg.svd(M, compute_uv=False)
        ok = sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1.0)
        if not np.any(ok):
            continue
        X = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]
        scale = 1.0 + np.abs(X).max(axis=1)
        feas = np.all(X @ G.T >= h - tol * scale[:, None], axis=1)
        if n_eq:
            feas &= np.all(np.abs(X @ E.T - e) <= tol * scale[:, None], axis=1)
        if not np.any(feas):
            continue
        vals = X[feas] @ c
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_x = float(vals[j]), X[feas][j]
    return None if best_x is None else (best_val, best_x)


def tiny_lp_argmin(model: LpModel, max_dim: int = 12) -> tuple[float, dict[str, float]]:
    """Optimal value and an optimal vertex by enumerating basic solutions.

    Exponential in the number of variables; meant for verification only.
    """
    d = len(model.variables)
    if d > max_dim:
        raise ValueError(f"{d} variables exceed the enumeration limit of {max_dim}")
    c, G, h, E, e = _dense_form(model)
    found = _vertex_min(c, G, h, E, e)
    if found is None:
        raise LpInfeasibleError("LP has no feasible basic solution")
    # recession directions, normalised by sum(r) = 1 (all variables are bounded below)
    ray = _vertex_min(
        c,
        G,
        np.zeros_like(h),
        np.vstack([E, np.ones((1, d))]),
        np.append(np.zeros_like(e), 1.0),
    )
    if ray is not None and ray[0] < -1e-9:
        raise LpUnboundedError("LP objective is unbounded below")
    val, x = found
    return val, dict(zip(model.variables, x.tolist()))


def solve_tiny_lp(model: LpModel, max_dim: int = 12) -> float:
    return tiny_lp_argmin(model, max_dim)[0]
