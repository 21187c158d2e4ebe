"""Dense two-phase tableau simplex for small bounded linear programs.

Every variable has finite bounds ``lo <= v <= hi``. Variables are shifted so
that their lower bound is zero and each upper bound becomes an explicit row.
Pricing is Dantzig's rule until the iteration count in a phase exceeds
``2 * (rows + columns)``, after which Bland's rule guarantees termination.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import FormulationError, LoadError, SolverStalled

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11
MAX_ITER = 1_000_000

LE, EQ, GE = "<=", "=", ">="


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class Row:
    coeffs: dict          # variable index -> coefficient
    rel: str
    rhs: float


@dataclass
class LinearProgram:
    """minimize c.v subject to rows and lo <= v <= hi."""
    n_vars: int
    c: np.ndarray = None
    rows: list = field(default_factory=list)
    lo: np.ndarray = None
    hi: np.ndarray = None
    names: list = None

    def __post_init__(self):
        n = self.n_vars
        self.c = np.zeros(n) if self.c is None else np.asarray(self.c, dtype=float)
        self.lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float)
        self.hi = np.full(n, 64.0) if self.hi is None else np.asarray(self.hi, dtype=float)
        if self.c.shape != (n,) or self.lo.shape != (n,) or self.hi.shape != (n,):
            raise FormulationError("Shape", "objective and bounds must have one entry per variable")
        if not (np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi))):
            raise FormulationError("Unbounded", "every variable needs finite bounds")

    def add_row(self, coeffs, rel, rhs):
        if rel not in (LE, EQ, GE):
            raise FormulationError("Relation", f"unknown relation {rel!r}")
        if not np.isfinite(rhs):
            raise FormulationError("Rhs", "row right-hand side must be finite")
        coeffs = {int(k): float(v) for k, v in dict(coeffs).items() if v != 0}
        if any(not 0 <= k < self.n_vars for k in coeffs):
            raise FormulationError("Index", "row references an unknown variable")
        self.rows.append(Row(coeffs, rel, float(rhs)))

    def dense(self):
        """(A, rel list, b) with A of shape (rows, n_vars)."""
        A = np.zeros((len(self.rows), self.n_vars))
        for i, r in enumerate(self.rows):
            for k, v in r.coeffs.items():
                A[i, k] = v
        return A, [r.rel for r in self.rows], np.array([r.rhs for r in self.rows])

    def residuals(self, v):
        """Largest row and bound violation of point ``v``."""
        v = np.asarray(v, dtype=float)
        worst = max(0.0, float(np.max(self.lo - v, initial=0.0)), float(np.max(v - self.hi, initial=0.0)))
        for r in self.rows:
            lhs = sum(c * v[k] for k, c in r.coeffs.items())
            if r.rel == LE:
                worst = max(worst, lhs - r.rhs)
            elif r.rel == GE:
                worst = max(worst, r.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - r.rhs))
        return worst


@dataclass
class Solution:
    status: Status
    values: np.ndarray = None
    objective: float = float("nan")
    iterations: int = 0
    duals: np.ndarray = None          # per row; <= rows give y <= 0, >= rows y >= 0
    bound_duals: np.ndarray = None    # per variable upper bound (<= 0)
    reduced_costs: np.ndarray = None  # per variable lower bound (>= 0 at optimum)


class _Tableau:
    def __init__(self, T, basis):
        self.T = T
        self.basis = basis
        self.iterations = 0

    def pivot(self, r, c):
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = c

    def run(self, n_cols, budget):
        """Optimise the objective in the last row over columns < n_cols."""
        T = self.T
        m = T.shape[0] - 1
        local = 0
        bland_after = 2 * (m + n_cols)
        while True:
            if self.iterations >= budget:
                raise SolverStalled(f"no convergence after {self.iterations} simplex iterations")
            d = T[-1, :n_cols]
            bland = local >= bland_after
            neg = np.nonzero(d < -OPT_TOL)[0]
            if neg.size == 0:
                return True
            c = int(neg[0]) if bland else int(neg[np.argmin(d[neg])])
            col = T[:m, c]
            pos = np.nonzero(col > PIVOT_TOL)[0]
            if pos.size == 0:
                return False
            ratios = T[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            if bland:
                r = int(min(ties, key=lambda i: self.basis[i]))
            else:
                r = int(ties[np.argmax(col[ties])])
            self.pivot(r, c)
            self.iterations += 1
            local += 1


def solve(lp, max_iter=MAX_ITER):
    n = lp.n_vars
    A, rels, b = lp.dense()
    span = lp.hi - lp.lo
    if np.any(span < -FEAS_TOL):
        return Solution(Status.INFEASIBLE)
    span = np.maximum(span, 0.0)
    # shift v = lo + v'; upper bounds become rows v'_j <= span_j
    b = b - A @ lp.lo
    A_all = np.vstack([A, np.eye(n)])
    b_all = np.concatenate([b, span])
    rel_all = list(rels) + [LE] * n
    m = A_all.shape[0]
    sign = np.where(b_all < 0, -1.0, 1.0)
    A_all = A_all * sign[:, None]
    b_all = b_all * sign
    rel_all = [{LE: GE, GE: LE, EQ: EQ}[r] if s < 0 else r for r, s in zip(rel_all, sign)]

    n_slack = sum(r != EQ for r in rel_all)
    n_art = sum(r != LE for r in rel_all)
    n_cols = n + n_slack + n_art
    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :n] = A_all
    T[:m, -1] = b_all
    basis = [0] * m
    s = n
    a = n + n_slack
    art_cols = []
    for i, rel in enumerate(rel_all):
        if rel == LE:
            T[i, s] = 1.0
            basis[i] = s
            s += 1
        else:
            if rel == GE:
                T[i, s] = -1.0
                s += 1
            T[i, a] = 1.0
            basis[i] = a
            art_cols.append(a)
            a += 1
    # standard-form matrix for dual recovery
    A_std = T[:m, :n + n_slack].copy()

    tab = _Tableau(T, basis)
    if art_cols:
        T[-1, :] = 0.0
        T[-1, art_cols] = 1.0
        for i in range(m):
            if basis[i] >= n + n_slack:
                T[-1] -= T[i]
        tab.run(n_cols, max_iter)
        if -T[-1, -1] > FEAS_TOL:
            return Solution(Status.INFEASIBLE, iterations=tab.iterations)
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= n + n_slack:
                cand = np.nonzero(np.abs(T[i, :n + n_slack]) > 1e-9)[0]
                if cand.size:
                    tab.pivot(i, int(cand[np.argmax(np.abs(T[i, cand]))]))
                else:
                    keep[i] = False
        rows_kept = np.nonzero(keep[:m])[0]
        T = np.hstack([T[keep][:, :n + n_slack], T[keep][:, -1:]])
        basis = [basis[i] for i in rows_kept]
        done = tab.iterations
        tab = _Tableau(T, basis)
        tab.iterations = done
    else:
        rows_kept = np.arange(m)
    n_std = n + n_slack
    cost = np.zeros(n_std)
    cost[:n] = lp.c
    T = tab.T
    T[-1, :] = 0.0
    T[-1, :n_std] = cost
    for i, j in enumerate(tab.basis):
        T[-1] -= cost[j] * T[i]
    if not tab.run(n_std, max_iter):
        return Solution(Status.UNBOUNDED, iterations=tab.iterations)

    x = np.zeros(n_std)
    for i, j in enumerate(tab.basis):
        x[j] = T[i, -1]
    values = np.clip(lp.lo + x[:n], lp.lo, lp.hi)
    # duals: solve B^T y = c_B on the kept standard-form rows
    B = A_std[rows_kept][:, tab.basis]
    y_kept = np.linalg.lstsq(B.T, cost[tab.basis], rcond=None)[0]
    y = np.zeros(m)
    y[rows_kept] = y_kept
    y *= sign
    duals, bound_duals = y[:len(lp.rows)], y[len(lp.rows):]
    reduced = lp.c - A.T @ duals - bound_duals
    return Solution(Status.OPTIMAL, values, float(lp.c @ values), tab.iterations,
                    duals, bound_duals, reduced)


# --- text dump -------------------------------------------------------------------
# One statement per line, '#' starts a comment:
#   vars <n>
#   min <j>:<coef> ...
#   row <rel> <rhs> <j>:<coef> ...      rel is one of <=, =, >=
#   bound <j> <lo> <hi>

def dump_lp(lp):
    out = [f"vars {lp.n_vars}", "min " + " ".join(f"{j}:{float(v)!r}" for j, v in enumerate(lp.c) if v != 0)]
    for r in lp.rows:
        terms = " ".join(f"{k}:{v!r}" for k, v in sorted(r.coeffs.items()))
        out.append(f"row {r.rel} {r.rhs!r} {terms}".rstrip())
    for j in range(lp.n_vars):
        out.append(f"bound {j} {float(lp.lo[j])!r} {float(lp.hi[j])!r}")
    return "\n".join(out) + "\n"


def _terms(tokens, line_no):
    out = {}
    for t in tokens:
        k, sep, v = t.partition(":")
        if not sep:
            raise LoadError(f"bad term {t!r}", line_no)
        out[int(k)] = float(v)
    return out


def load_lp(text):
    lp = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "vars":
                lp = LinearProgram(int(rest[0]))
            elif lp is None:
                raise LoadError("'vars' must come first", line_no)
            elif head == "min":
                for k, v in _terms(rest, line_no).items():
                    lp.c[k] = v
            elif head == "row":
                lp.add_row(_terms(rest[2:], line_no), rest[0], float(rest[1]))
            elif head == "bound":
                j = int(rest[0])
                lp.lo[j], lp.hi[j] = float(rest[1]), float(rest[2])
            else:
                raise LoadError(f"unknown statement {head!r}", line_no)
        except (IndexError, ValueError, FormulationError) as exc:
            if isinstance(exc, LoadError):
                raise
            raise LoadError(str(exc), line_no) from exc
    if lp is None:
        raise LoadError("empty LP document")
    return lp
