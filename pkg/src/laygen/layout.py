"""Layout graph types, value quantization and structural validation.

A layout is a list of typed axis-aligned rectangles plus typed edges between
them. Floor plans use horizontal/vertical adjacency edges (constraining) and
wall/door edges (descriptive). Furniture layouts carry an orientation per
element and no constraining edges.
"""
from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import RangeError, SchemaError

WORLD = (0.0, 64.0)
TOL = 1e-6

FLOORPLAN_TYPES = ("exterior", "bedroom", "bathroom", "kitchen", "living", "balcony", "corridor")
FURNITURE_TYPES = ("bed", "wardrobe", "table", "chair", "sofa", "desk", "shelf")


class Mode(str, enum.Enum):
    FLOORPLAN = "floorplan"
    FURNITURE = "furniture"


class EdgeGroup(str, enum.Enum):
    CONSTRAINING = "constraining"
    DESCRIPTIVE = "descriptive"


class EdgeKind(str, enum.Enum):
    HADJ = "hadj"
    VADJ = "vadj"
    WALL = "wall"
    DOOR = "door"

    @property
    def group(self):
        if self in (EdgeKind.HADJ, EdgeKind.VADJ):
            return EdgeGroup.CONSTRAINING
        return EdgeGroup.DESCRIPTIVE

    @property
    def shortened(self):
        """Adjacency edges use the grouped sequence style."""
        return self.group is EdgeGroup.CONSTRAINING


@dataclass(frozen=True)
class ElementType:
    id: int
    name: str


@dataclass(frozen=True)
class Element:
    t: int
    x: float
    y: float
    w: float
    h: float
    a: float | None = None

    @property
    def x2(self):
        return self.x + self.w

    @property
    def y2(self):
        return self.y + self.h

    @property
    def cx(self):
        return self.x + 0.5 * self.w

    @property
    def cy(self):
        return self.y + 0.5 * self.h

    @property
    def area(self):
        return self.w * self.h


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    kind: EdgeKind


@dataclass(frozen=True)
class Layout:
    mode: Mode = Mode.FLOORPLAN
    types: tuple = FLOORPLAN_TYPES
    elements: tuple = ()
    edges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "edges", tuple(self.edges))
        n = len(self.elements)
        furniture = self.mode is Mode.FURNITURE
        if not furniture and self.types.count("exterior") != 1:
            raise SchemaError("floor-plan schema needs exactly one 'exterior' type")
        lo, hi = WORLD
        for k, e in enumerate(self.elements):
            if not 0 <= e.t < len(self.types):
                raise SchemaError(f"element {k}: type id {e.t} outside schema")
            if e.w <= 0 or e.h <= 0:
                raise SchemaError(f"element {k}: non-positive size")
            if e.x < lo - TOL or e.y < lo - TOL or e.x2 > hi + TOL or e.y2 > hi + TOL:
                raise SchemaError(f"element {k}: outside world bounds")
            if (e.a is not None) != furniture:
                raise SchemaError(f"element {k}: angle present iff furniture mode")
        for r in self.edges:
            if r.i == r.j or not (0 <= r.i < n and 0 <= r.j < n):
                raise SchemaError(f"bad edge {r}")
            if furniture and r.kind.group is EdgeGroup.CONSTRAINING:
                raise SchemaError("furniture layouts have no constraining edges")

    @property
    def exterior_type(self):
        return self.types.index("exterior") if "exterior" in self.types else None

    def element_type(self, k):
        t = self.elements[k].t
        return ElementType(t, self.types[t])

    def edges_of(self, kind):
        kind = EdgeKind(kind)
        return [r for r in self.edges if r.kind is kind]

    def is_exterior(self, k):
        return self.elements[k].t == self.exterior_type

    def bbox(self):
        if not self.elements:
            return (0.0, 0.0, 0.0, 0.0)
        x0 = min(e.x for e in self.elements)
        y0 = min(e.y for e in self.elements)
        x1 = max(e.x2 for e in self.elements)
        y1 = max(e.y2 for e in self.elements)
        return (x0, y0, x1, y1)

    def to_dict(self):
        elems = []
        for e in self.elements:
            d = {"t": e.t, "x": e.x, "y": e.y, "w": e.w, "h": e.h}
            if e.a is not None:
                d["a"] = e.a
            elems.append(d)
        return {
            "mode": self.mode.value,
            "types": list(self.types),
            "elements": elems,
            "edges": [{"i": r.i, "j": r.j, "k": r.kind.value} for r in self.edges],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            elements = [Element(int(e["t"]), e["x"], e["y"], e["w"], e["h"], e.get("a"))
                        for e in d["elements"]]
            edges = [Edge(int(r["i"]), int(r["j"]), EdgeKind(r["k"])) for r in d["edges"]]
            return cls(Mode(d["mode"]), tuple(d["types"]), elements, edges)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"malformed layout document: {exc!r}") from exc

    def to_json(self):
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Quantizer:
    bits: int = 6
    lo: float = 0.0
    hi: float = 64.0

    @property
    def levels(self):
        return 2 ** self.bits

    @property
    def bin_width(self):
        return (self.hi - self.lo) / self.levels

    def quantize(self, v):
        if not (self.lo <= v <= self.hi):
            raise RangeError(f"value {v} outside [{self.lo}, {self.hi}]")
        b = int(math.floor((v - self.lo) / (self.hi - self.lo) * self.levels))
        return min(b, self.levels - 1)

    def dequantize(self, b):
        if not 0 <= b < self.levels:
            raise RangeError(f"bin {b} outside [0, {self.levels})")
        return self.lo + (b + 0.5) * self.bin_width


COORD_Q = Quantizer(6, 0.0, 64.0)
# orientation lives in [0, 2pi); 2pi itself never occurs
ANGLE_Q = Quantizer(5, 0.0, 2 * math.pi)


def quantize(v, q=COORD_Q):
    return q.quantize(v)


def dequantize(b, q=COORD_Q):
    return q.dequantize(b)


# --- geometry ---------------------------------------------------------------

def overlap_1d(a0, a1, b0, b1):
    return min(a1, b1) - max(a0, b0)


def shared_boundary(a, b, tol=TOL):
    """Length of the boundary segment shared by two touching rectangles (0 if none)."""
    if abs(a.x2 - b.x) <= tol or abs(b.x2 - a.x) <= tol:
        ov = overlap_1d(a.y, a.y2, b.y, b.y2)
        if ov > tol:
            return ov
    if abs(a.y2 - b.y) <= tol or abs(b.y2 - a.y) <= tol:
        ov = overlap_1d(a.x, a.x2, b.x, b.x2)
        if ov > tol:
            return ov
    return 0.0


def h_adjacent(a, b, tol=TOL):
    """Right side of ``a`` touches left side of ``b`` over a positive length."""
    return abs(a.x2 - b.x) <= tol and overlap_1d(a.y, a.y2, b.y, b.y2) > tol


def v_adjacent(a, b, tol=TOL):
    return abs(a.y2 - b.y) <= tol and overlap_1d(a.x, a.x2, b.x, b.x2) > tol


def interiors_overlap(a, b, tol=TOL):
    return overlap_1d(a.x, a.x2, b.x, b.x2) > tol and overlap_1d(a.y, a.y2, b.y, b.y2) > tol


# --- rooms ------------------------------------------------------------------

class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True

    def groups(self):
        out = {}
        for k in range(len(self.parent)):
            out.setdefault(self.find(k), []).append(k)
        return sorted(out.values(), key=lambda g: g[0])


def merge_rooms(layout):
    """Partition elements into rooms: same-type elements joined by an
    adjacency edge and not separated by a wall."""
    walls = {frozenset((r.i, r.j)) for r in layout.edges_of(EdgeKind.WALL)}
    uf = UnionFind(len(layout.elements))
    for r in layout.edges:
        if r.kind.group is not EdgeGroup.CONSTRAINING:
            continue
        if layout.elements[r.i].t != layout.elements[r.j].t:
            continue
        if frozenset((r.i, r.j)) in walls:
            continue
        uf.union(r.i, r.j)
    return [set(g) for g in uf.groups()]


# --- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # "adjacency" | "descriptive" | "overlap" | "hole"
    elements: tuple = ()
    detail: str = ""


def coverage_holes(layout, grid=64):
    """Uncovered grid cells enclosed by the layout (not reachable from the
    bounding-box border). Returns a list of (col, row) cells."""
    if not layout.elements:
        return []
    lo, hi = WORLD
    step = (hi - lo) / grid
    centers = lo + (np.arange(grid) + 0.5) * step
    covered = np.zeros((grid, grid), dtype=bool)  # [col, row]
    for e in layout.elements:
        cx = (centers > e.x) & (centers < e.x2)
        cy = (centers > e.y) & (centers < e.y2)
        covered |= np.outer(cx, cy)
    x0, y0, x1, y1 = layout.bbox()
    inx = (centers > x0) & (centers < x1)
    iny = (centers > y0) & (centers < y1)
    inside = np.outer(inx, iny)
    free = inside & ~covered
    if not free.any():
        return []
    labels, n = ndimage.label(free)
    cols, rows = np.nonzero(inside)
    c0, c1, r0, r1 = cols.min(), cols.max(), rows.min(), rows.max()
    border = set(np.unique(np.concatenate([
        labels[c0, r0:r1 + 1], labels[c1, r0:r1 + 1],
        labels[c0:c1 + 1, r0], labels[c0:c1 + 1, r1]])).tolist())
    holes = []
    for lab in range(1, n + 1):
        if lab in border:
            continue
        cs, rs = np.nonzero(labels == lab)
        holes.extend(zip(cs.tolist(), rs.tolist()))
    return sorted(holes)


def validate_layout(layout, tol=TOL):
    out = []
    els = layout.elements
    for r in layout.edges:
        a, b = els[r.i], els[r.j]
        if r.kind is EdgeKind.HADJ and not h_adjacent(a, b, tol):
            out.append(Violation("adjacency", (r.i, r.j), "hadj"))
        elif r.kind is EdgeKind.VADJ and not v_adjacent(a, b, tol):
            out.append(Violation("adjacency", (r.i, r.j), "vadj"))
        elif r.kind.group is EdgeGroup.DESCRIPTIVE and shared_boundary(a, b, tol) <= tol:
            out.append(Violation("descriptive", (r.i, r.j), r.kind.value))
    for i in range(len(els)):
        for j in range(i + 1, len(els)):
            if interiors_overlap(els[i], els[j], tol):
                out.append(Violation("overlap", (i, j)))
    if layout.mode is Mode.FLOORPLAN:
        holes = coverage_holes(layout)
        if holes:
            out.append(Violation("hole", (), f"{len(holes)} uncovered cells"))
    return out


# --- door graph -------------------------------------------------------------

@dataclass
class DoorGraph:
    """Rooms plus one exterior node (index ``exterior``, the last node).

    Exterior-typed rooms are kept as isolated placeholder nodes; doors that
    touch them attach to the exterior node instead.
    """
    rooms: list
    room_types: list
    adjacency: list
    exterior: int
    exterior_rooms: set = field(default_factory=set)

    @property
    def n_nodes(self):
        return len(self.adjacency)

    def distances_from(self, src):
        dist = [-1] * self.n_nodes
        dist[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in sorted(self.adjacency[u]):
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def interior_rooms(self):
        return [k for k in range(len(self.rooms)) if k not in self.exterior_rooms]


def door_graph(layout):
    rooms = merge_rooms(layout)
    owner = {}
    for k, room in enumerate(rooms):
        for e in room:
            owner[e] = k
    ext_t = layout.exterior_type
    room_types = [layout.elements[min(r)].t for r in rooms]
    ext_rooms = {k for k, t in enumerate(room_types) if t == ext_t}
    exterior = len(rooms)
    adjacency = [set() for _ in range(len(rooms) + 1)]
    for r in layout.edges_of(EdgeKind.DOOR):
        a, b = owner[r.i], owner[r.j]
        a = exterior if a in ext_rooms else a
        b = exterior if b in ext_rooms else b
        if a != b:
            adjacency[a].add(b)
            adjacency[b].add(a)
    return DoorGraph(rooms, room_types, adjacency, exterior, ext_rooms)


def subset_layout(layout, keep):
    """Layout restricted to elements ``keep`` (in that order); edges between
    kept elements are re-indexed, all others dropped."""
    remap = {old: new for new, old in enumerate(keep)}
    elements = [layout.elements[k] for k in keep]
    edges = [Edge(remap[r.i], remap[r.j], r.kind) for r in layout.edges if r.i in remap and r.j in remap]
    return Layout(layout.mode, layout.types, elements, edges)


def interior_layout(layout):
    ext = layout.exterior_type
    return subset_layout(layout, [k for k, e in enumerate(layout.elements) if e.t != ext])


def boundary_layout(layout):
    """Only the exterior-typed rectangles, as used for boundary conditioning."""
    ext = layout.exterior_type
    return subset_layout(layout, [k for k, e in enumerate(layout.elements) if e.t == ext])
