"""Turn element constraints and adjacency edges into a concrete layout.

Each element contributes position and size variables; each adjacency edge an
equality row; each target value a pair of range rows. The width W is tied to
the last element of a topological order of the horizontal adjacency graph
(H likewise), and W + H is minimised.
"""
from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .codec import ElementConstraint
from .errors import FormulationError, SolverStalled
from .layout import (ANGLE_Q, COORD_Q, FLOORPLAN_TYPES, Edge, EdgeGroup, EdgeKind, Element, Layout, Mode,
                     h_adjacent, interiors_overlap, shared_boundary, v_adjacent)
from .lp import EQ, GE, LE, LinearProgram, Status, solve

EPS = 0.1
BOUNDS = (0.0, 64.0)
CHECK_TOL = 1e-6
MAX_GUESSES = 12      # side-selection placements tried per boundary problem


class Reason(str, enum.Enum):
    INFEASIBLE = "Infeasible"
    DEGENERATE_WIDTH = "DegenerateWidth"
    SOLVER_STALLED = "SolverStalled"
    FORMULATION = "FormulationError"
    UNBOUNDED = "Unbounded"
    VIOLATION = "ConstraintViolation"


@dataclass(frozen=True)
class Rejected:
    reason: Reason
    detail: str = ""


@dataclass
class ConstraintSet:
    """Continuous targets per element plus edges.

    ``targets`` holds (w, h) per element for floor plans or (x, y, w, h, a)
    for furniture. ``boundary`` optionally lists fixed exterior rectangles
    the elements must not overlap.
    """
    mode: Mode = Mode.FLOORPLAN
    types: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    hadj: list = field(default_factory=list)
    vadj: list = field(default_factory=list)
    descriptive: list = field(default_factory=list)   # Edge objects (wall / door)
    eps: float = EPS
    bounds: tuple = BOUNDS
    schema: tuple = FLOORPLAN_TYPES
    boundary: list | None = None

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if not 0 < self.eps < 1:
            raise FormulationError("Epsilon", f"epsilon {self.eps} outside (0, 1)")
        if len(self.types) != len(self.targets):
            raise FormulationError("Shape", "one type per target tuple required")

    @property
    def n(self):
        return len(self.targets)

    @classmethod
    def from_bins(cls, mode, constraints, edges=(), eps=EPS, schema=FLOORPLAN_TYPES, boundary=None):
        """From quantized :class:`ElementConstraint` values (dequantized to bin centres)."""
        mode = Mode(mode)
        targets = []
        for c in constraints:
            if mode is Mode.FLOORPLAN:
                targets.append(tuple(COORD_Q.dequantize(b) for b in c.bins))
            else:
                *coords, a = c.bins
                targets.append(tuple(COORD_Q.dequantize(b) for b in coords) + (ANGLE_Q.dequantize(a),))
        cs = cls(mode, [c.t for c in constraints], targets, eps=eps, schema=tuple(schema), boundary=boundary)
        for r in edges:
            cs.add_edge(r)
        return cs

    @classmethod
    def from_layout(cls, layout, eps=EPS, boundary=None):
        from .codec import element_constraints
        cons = element_constraints(layout, range(len(layout.elements)))
        return cls.from_bins(layout.mode, cons, layout.edges, eps, layout.types, boundary)

    def add_edge(self, r):
        kind = EdgeKind(r.kind)
        if kind is EdgeKind.HADJ:
            self.hadj.append((r.i, r.j))
        elif kind is EdgeKind.VADJ:
            self.vadj.append((r.i, r.j))
        else:
            self.descriptive.append(Edge(r.i, r.j, kind))

    def check(self):
        if self.n == 0:
            raise FormulationError("Empty", "no element constraints")
        for name, edges in (("horizontal", self.hadj), ("vertical", self.vadj)):
            for i, j in edges:
                if i == j or not (0 <= i < self.n and 0 <= j < self.n):
                    raise FormulationError("BadEdge", f"{name} edge ({i}, {j}) is invalid")


# --- graph helpers -------------------------------------------------------------------

def kahn_order(n, edges):
    """Topological order with smallest-index tie-break, or None on a cycle."""
    import heapq
    indeg = [0] * n
    out = defaultdict(list)
    for i, j in edges:
        out[i].append(j)
        indeg[j] += 1
    heap = [k for k in range(n) if indeg[k] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in out[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    return order if len(order) == n else None


def _reaches(edges, src, dst):
    nxt = defaultdict(list)
    for i, j in edges:
        nxt[i].append(j)
    seen, stack = {src}, [src]
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for v in nxt[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def break_cycles(n, edges):
    """Drop the most recently generated edge lying on a cycle until acyclic.
    Returns (kept, removed)."""
    kept = list(edges)
    removed = []
    while kahn_order(n, kept) is None:
        for k in range(len(kept) - 1, -1, -1):
            i, j = kept[k]
            if _reaches(kept, j, i):
                removed.append(kept.pop(k))
                break
    return kept, removed


def filter_constraints(cs):
    """Remove self-edges, duplicates, out-of-range indices and cycle-closing
    adjacency edges. Returns (clean set, list of (edge, reason))."""
    removed = []

    def clean(pairs, kind):
        seen, out = set(), []
        for i, j in pairs:
            e = Edge(i, j, kind)
            if i == j:
                removed.append((e, "self-edge"))
            elif not (0 <= i < cs.n and 0 <= j < cs.n):
                removed.append((e, "out-of-range"))
            elif (i, j) in seen:
                removed.append((e, "duplicate"))
            else:
                seen.add((i, j))
                out.append((i, j))
        return out

    hadj = clean(cs.hadj, EdgeKind.HADJ)
    vadj = clean(cs.vadj, EdgeKind.VADJ)
    hadj, cyc_h = break_cycles(cs.n, hadj)
    vadj, cyc_v = break_cycles(cs.n, vadj)
    removed += [(Edge(i, j, EdgeKind.HADJ), "cycle") for i, j in cyc_h]
    removed += [(Edge(i, j, EdgeKind.VADJ), "cycle") for i, j in cyc_v]
    desc = []
    seen = set()
    for r in cs.descriptive:
        key = (r.kind, frozenset((r.i, r.j)))
        if r.i == r.j:
            removed.append((r, "self-edge"))
        elif not (0 <= r.i < cs.n and 0 <= r.j < cs.n):
            removed.append((r, "out-of-range"))
        elif key in seen:
            removed.append((r, "duplicate"))
        else:
            seen.add(key)
            desc.append(r)
    out = ConstraintSet(cs.mode, list(cs.types), list(cs.targets), hadj, vadj, desc, cs.eps, cs.bounds,
                        cs.schema, cs.boundary)
    return out, removed


# --- formulation ----------------------------------------------------------------------

def var_x(i):
    return 4 * i


def var_y(i):
    return 4 * i + 1


def var_w(i):
    return 4 * i + 2


def var_h(i):
    return 4 * i + 3


def _size_target(cs, i):
    t = cs.targets[i]
    return (t[0], t[1]) if cs.mode is Mode.FLOORPLAN else (t[2], t[3])


def _target_vars(cs, i):
    if cs.mode is Mode.FLOORPLAN:
        return (var_w(i), var_h(i))
    return (var_x(i), var_y(i), var_w(i), var_h(i))


def formulate(cs, extent_rows=True, guess=None):
    """Build the perimeter-minimising LP. Variable layout: (x, y, w, h) per
    element, then W and H.

    With ``extent_rows`` every element must end inside the world and inside
    W x H (``x + w <= W``); otherwise W and H rest on the last topological
    element only. ``guess`` is a placement (x, y, w, h) per element used to
    pick the separating side of each exterior rectangle.
    """
    cs.check()
    n = cs.n
    lo, hi = cs.bounds
    iW, iH = 4 * n, 4 * n + 1
    c = np.zeros(4 * n + 2)
    c[iW] = c[iH] = 1.0
    lp = LinearProgram(4 * n + 2, c, lo=np.full(4 * n + 2, lo), hi=np.full(4 * n + 2, hi))
    eps = cs.eps
    for i, tgt in enumerate(cs.targets):
        for v, t in zip(_target_vars(cs, i), tgt):
            lp.add_row({v: 1.0}, GE, (1 - eps) * t)
            lp.add_row({v: 1.0}, LE, (1 + eps) * t)
        lp.add_row({var_x(i): 1.0, var_w(i): 1.0}, LE, hi)
        lp.add_row({var_y(i): 1.0, var_h(i): 1.0}, LE, hi)
    for i, j in cs.hadj:
        lp.add_row({var_x(i): 1.0, var_w(i): 1.0, var_x(j): -1.0}, EQ, 0.0)
    for i, j in cs.vadj:
        lp.add_row({var_y(i): 1.0, var_h(i): 1.0, var_y(j): -1.0}, EQ, 0.0)
    for edges, pos, size, ext in ((cs.hadj, var_x, var_w, iW), (cs.vadj, var_y, var_h, iH)):
        order = kahn_order(n, edges)
        if order is None:
            raise FormulationError("CyclicAdjacency", "adjacency edges contain a cycle")
        last = order[-1]
        lp.add_row({ext: 1.0, pos(last): -1.0, size(last): -1.0}, EQ, 0.0)
        if extent_rows:
            for i in range(n):
                if i != last:
                    lp.add_row({pos(i): 1.0, size(i): 1.0, ext: -1.0}, LE, 0.0)
    if cs.boundary:
        _boundary_rows(lp, cs, guess)
    return lp


def _boundary_rows(lp, cs, guess=None):
    """Keep every element on one side of every exterior rectangle: the side
    the guessed placement is furthest along, among sides with enough room
    left in the world for the element's smallest size."""
    lo, hi = cs.bounds
    if guess is None:
        guess = next(_boundary_guesses(cs))
    for i in range(cs.n):
        gx, gy, gw, gh = guess[i]
        tw, th = _size_target(cs, i)
        wmin, hmin = (1 - cs.eps) * tw, (1 - cs.eps) * th
        for e in cs.boundary:
            seps = {
                "left": (e.x - (gx + gw), e.x - lo >= wmin),
                "right": (gx - e.x2, hi - e.x2 >= wmin),
                "below": (e.y - (gy + gh), e.y - lo >= hmin),
                "above": (gy - e.y2, hi - e.y2 >= hmin),
            }
            room = [k for k, (_, ok) in seps.items() if ok] or list(seps)
            side = max(room, key=lambda k: seps[k][0])
            if side == "left":
                lp.add_row({var_x(i): 1.0, var_w(i): 1.0}, LE, e.x)
            elif side == "right":
                lp.add_row({var_x(i): 1.0}, GE, e.x2)
            elif side == "below":
                lp.add_row({var_y(i): 1.0, var_h(i): 1.0}, LE, e.y)
            else:
                lp.add_row({var_y(i): 1.0}, GE, e.y2)


def _overlap_area(place, rects):
    total = 0.0
    for x, y, w, h in place:
        for e in rects:
            total += max(0.0, min(x + w, e.x2) - max(x, e.x)) * max(0.0, min(y + h, e.y2) - max(y, e.y))
    return total


def _boundary_guesses(cs, limit=MAX_GUESSES):
    """Candidate placements for side selection: the boundary-free solution
    translated next to each exterior rectangle, least overlap first."""
    free = ConstraintSet(cs.mode, cs.types, cs.targets, cs.hadj, cs.vadj, [], cs.eps, cs.bounds, cs.schema)
    try:
        sol = solve(formulate(free))
    except (FormulationError, SolverStalled):
        sol = None
    n = cs.n
    if sol is None or sol.status is not Status.OPTIMAL:
        yield [(0.0, 0.0) + _size_target(cs, i) for i in range(n)]
        return
    v = sol.values
    block = [(v[var_x(i)], v[var_y(i)], v[var_w(i)], v[var_h(i)]) for i in range(n)]
    bx0 = min(b[0] for b in block)
    by0 = min(b[1] for b in block)
    bw = max(b[0] + b[2] for b in block) - bx0
    bh = max(b[1] + b[3] for b in block) - by0
    lo, hi = cs.bounds
    anchors = [(lo, lo)]
    for e in cs.boundary:
        anchors += [(e.x2, e.y), (e.x2, e.y2 - bh), (e.x - bw, e.y), (e.x - bw, e.y2 - bh),
                    (e.x, e.y2), (e.x2 - bw, e.y2), (e.x, e.y - bh), (e.x2 - bw, e.y - bh)]
    seen, cands = set(), []
    for ax, ay in anchors:
        ax = float(min(max(ax, lo), max(lo, hi - bw)))
        ay = float(min(max(ay, lo), max(lo, hi - bh)))
        if (ax, ay) in seen:
            continue
        seen.add((ax, ay))
        place = [(x - bx0 + ax, y - by0 + ay, w, h) for x, y, w, h in block]
        cands.append((_overlap_area(place, cs.boundary), ay, ax, place))
    cands.sort(key=lambda c: c[:3])
    for c in cands[:limit]:
        yield c[3]


def _compact(lp, cs, sol):
    """Among perimeter-optimal solutions prefer the one nearest the origin."""
    n = cs.n
    second = LinearProgram(lp.n_vars, np.zeros(lp.n_vars), list(lp.rows), lp.lo.copy(), lp.hi.copy())
    best = sol.objective
    second.add_row({4 * n: 1.0, 4 * n + 1: 1.0}, LE, best + 1e-9 * max(1.0, abs(best)))
    for i in range(n):
        second.c[var_x(i)] = second.c[var_y(i)] = 1.0
    out = solve(second)
    return out if out.status is Status.OPTIMAL else sol


# --- optimisation ----------------------------------------------------------------------

def optimize(cs, extent_rows=True, compact=True):
    """Solve and post-check. Returns a Layout or a :class:`Rejected`."""
    guesses = _boundary_guesses(cs) if cs.boundary else [None]
    try:
        for guess in guesses:
            lp = formulate(cs, extent_rows, guess)
            sol = solve(lp)
            if sol.status is not Status.INFEASIBLE:
                break
        if sol.status is Status.OPTIMAL and compact:
            sol = _compact(lp, cs, sol)
    except FormulationError as exc:
        return Rejected(Reason.FORMULATION, str(exc))
    except SolverStalled as exc:
        return Rejected(Reason.SOLVER_STALLED, str(exc))
    if sol.status is Status.INFEASIBLE:
        return Rejected(Reason.INFEASIBLE)
    if sol.status is Status.UNBOUNDED:
        return Rejected(Reason.UNBOUNDED)
    v = sol.values
    n = cs.n
    bad = recheck(cs, v)
    if bad:
        return Rejected(Reason.VIOLATION, bad)
    W, H = v[4 * n], v[4 * n + 1]
    if max(v[var_x(i)] + v[var_w(i)] for i in range(n)) > W + CHECK_TOL or \
            max(v[var_y(i)] + v[var_h(i)] for i in range(n)) > H + CHECK_TOL:
        return Rejected(Reason.DEGENERATE_WIDTH, f"W={W:.6g}, H={H:.6g}")
    return build_layout(cs, v)


def recheck(cs, v):
    """Direct constraint check of a solution vector; returns '' when clean."""
    lo, hi = cs.bounds
    for i, tgt in enumerate(cs.targets):
        for var, t in zip(_target_vars(cs, i), tgt):
            if not (1 - cs.eps) * t - CHECK_TOL <= v[var] <= (1 + cs.eps) * t + CHECK_TOL:
                return f"element {i}: value {v[var]:.6g} outside range of target {t:.6g}"
        if v[var_x(i)] < lo - CHECK_TOL or v[var_x(i)] + v[var_w(i)] > hi + CHECK_TOL:
            return f"element {i}: outside world bounds"
        if v[var_y(i)] < lo - CHECK_TOL or v[var_y(i)] + v[var_h(i)] > hi + CHECK_TOL:
            return f"element {i}: outside world bounds"
    for i, j in cs.hadj:
        if abs(v[var_x(i)] + v[var_w(i)] - v[var_x(j)]) > CHECK_TOL:
            return f"horizontal edge ({i}, {j}) not met"
    for i, j in cs.vadj:
        if abs(v[var_y(i)] + v[var_h(i)] - v[var_y(j)]) > CHECK_TOL:
            return f"vertical edge ({i}, {j}) not met"
    if cs.boundary:
        for i in range(cs.n):
            el = Element(0, v[var_x(i)], v[var_y(i)], v[var_w(i)], v[var_h(i)])
            for e in cs.boundary:
                if interiors_overlap(el, e, CHECK_TOL):
                    return f"element {i} overlaps the boundary"
    return ""


def build_layout(cs, v):
    lo, hi = cs.bounds
    els = []
    for i, t in enumerate(cs.types):
        x, y, w, h = (float(np.clip(v[k], lo, hi)) for k in (var_x(i), var_y(i), var_w(i), var_h(i)))
        a = float(cs.targets[i][4]) if cs.mode is Mode.FURNITURE else None
        els.append(Element(int(t), x, y, w, h, a))
    edges = [Edge(i, j, EdgeKind.HADJ) for i, j in cs.hadj] + [Edge(i, j, EdgeKind.VADJ) for i, j in cs.vadj]
    edges += list(cs.descriptive)
    if cs.boundary:
        els += list(cs.boundary)
    return Layout(cs.mode, cs.schema, els, edges)


def drop_invalid_descriptive(layout, tol=CHECK_TOL):
    """Remove wall/door edges whose elements do not share a boundary.
    Returns (layout, number dropped)."""
    keep, dropped = [], 0
    for r in layout.edges:
        if r.kind.group is EdgeGroup.DESCRIPTIVE and \
                shared_boundary(layout.elements[r.i], layout.elements[r.j], tol) <= tol:
            dropped += 1
            continue
        keep.append(r)
    return Layout(layout.mode, layout.types, layout.elements, keep), dropped


def perimeter(layout):
    x0, y0, x1, y1 = layout.bbox()
    return (x1 - x0) + (y1 - y0)


# --- run accounting ----------------------------------------------------------------

@dataclass
class RunReport:
    """Sample accounting for one sample -> optimize run.

    attempted = ungrammatical + grammatical, and grammatical equals the sum
    of feasible, infeasible, degenerate, stalled and formulation failures.
    """
    attempted: int = 0
    ungrammatical: int = 0
    truncated: int = 0
    grammatical: int = 0
    feasible: int = 0
    infeasible: int = 0
    degenerate: int = 0
    stalled: int = 0
    formulation_errors: int = 0
    violations: int = 0
    filtered_edges: int = 0
    dropped_descriptive: int = 0

    def record(self, outcome):
        self.grammatical += 1
        if isinstance(outcome, Layout):
            self.feasible += 1
            return
        key = {
            Reason.INFEASIBLE: "infeasible",
            Reason.UNBOUNDED: "infeasible",
            Reason.DEGENERATE_WIDTH: "degenerate",
            Reason.SOLVER_STALLED: "stalled",
            Reason.FORMULATION: "formulation_errors",
            Reason.VIOLATION: "violations",
        }[outcome.reason]
        setattr(self, key, getattr(self, key) + 1)

    def consistent(self):
        rejected = self.infeasible + self.degenerate + self.stalled + self.formulation_errors + self.violations
        return (self.attempted == self.ungrammatical + self.grammatical
                and self.grammatical == self.feasible + rejected
                and self.truncated <= self.ungrammatical)

    def to_json(self):
        d = asdict(self)
        d["consistent"] = self.consistent()
        return json.dumps(d, indent=2, sort_keys=True)
