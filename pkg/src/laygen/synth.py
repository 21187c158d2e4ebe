"""Procedural floor-plan and furniture layouts for training and evaluation.

Floor plans come from a recursive guillotine partition of an integer-sized
frame at the origin, so the elements tile their bounding rectangle and all
coordinates are whole grid units.
"""
from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .codec import canonicalize
from .errors import GenError, LoadError, SchemaError
from .layout import (ANGLE_Q, FLOORPLAN_TYPES, FURNITURE_TYPES, Edge, EdgeKind, Element, Layout, Mode,
                     h_adjacent, interiors_overlap, merge_rooms, shared_boundary, v_adjacent)

DEFAULT_WEIGHTS = {"bedroom": 3.0, "bathroom": 2.0, "kitchen": 1.5, "living": 1.5, "balcony": 1.0,
                   "corridor": 1.0}


@dataclass
class GenConfig:
    seed: int = 0
    n_layouts: int = 100
    mode: str = "floorplan"
    min_elements: int = 3
    max_elements: int = 10
    min_size: int = 5               # smallest element side, in grid units (= bins)
    exterior_frac: float = 0.25     # upper share of elements turned exterior
    wall_prob: float = 0.3
    extra_door_prob: float = 0.0    # chance of each extra door beyond the spanning tree
    inaccessible_prob: float = 0.0  # chance of dropping each tree door
    type_weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    min_pieces: int = 0
    max_pieces: int = 8

    def __post_init__(self):
        if self.min_size < 2:
            raise GenError("min_size must be at least 2 bins")
        if self.min_elements < 1 or self.max_elements < self.min_elements:
            raise GenError(f"bad element count range [{self.min_elements}, {self.max_elements}]")
        if self.min_pieces < 0 or self.max_pieces < self.min_pieces:
            raise GenError(f"bad piece count range [{self.min_pieces}, {self.max_pieces}]")
        unknown = set(self.type_weights) - set(FLOORPLAN_TYPES)
        if unknown:
            raise GenError(f"unknown room types in weights: {sorted(unknown)}")

    @classmethod
    def from_file(cls, path):
        """Read the ``[gen]`` section of an INI-style file. ``type_weights``
        is written as ``bedroom:3, bathroom:2, ...``."""
        parser = configparser.ConfigParser()
        try:
            if not parser.read(path):
                raise LoadError(f"cannot read config {path}")
        except configparser.Error as exc:
            raise LoadError(f"{path}: {exc}") from exc
        if "gen" not in parser:
            raise LoadError(f"{path}: missing [gen] section")
        sec = parser["gen"]
        kwargs = {}
        for f in fields(cls):
            if f.name not in sec:
                continue
            raw = sec[f.name]
            try:
                if f.name == "type_weights":
                    kwargs[f.name] = {k.strip(): float(v) for k, v in
                                      (item.split(":") for item in raw.split(",") if item.strip())}
                elif f.name == "mode":
                    kwargs[f.name] = raw.strip()
                elif f.type in ("int", int):
                    kwargs[f.name] = int(raw)
                else:
                    kwargs[f.name] = float(raw)
            except ValueError as exc:
                raise LoadError(f"{path}: bad value for {f.name}: {raw!r}") from exc
        unknown = set(sec) - {f.name for f in fields(cls)}
        if unknown:
            raise LoadError(f"{path}: unknown keys {sorted(unknown)}")
        return cls(**kwargs)


# --- floor plans -----------------------------------------------------------------

def _guillotine(rng, w, h, n, s):
    """Split a w x h frame into n integer rectangles with sides >= s, or None."""
    leaves = [(0, 0, w, h)]
    while len(leaves) < n:
        cands = [k for k, (_, _, lw, lh) in enumerate(leaves) if lw >= 2 * s or lh >= 2 * s]
        if not cands:
            return None
        areas = np.array([leaves[k][2] * leaves[k][3] for k in cands], dtype=float)
        k = cands[rng.choice(len(cands), p=areas / areas.sum())]
        x, y, lw, lh = leaves.pop(k)
        vertical = lw >= 2 * s and (lh < 2 * s or rng.random() < lw / (lw + lh))
        if vertical:
            c = int(rng.integers(s, lw - s + 1))
            leaves += [(x, y, c, lh), (x + c, y, lw - c, lh)]
        else:
            c = int(rng.integers(s, lh - s + 1))
            leaves += [(x, y, lw, c), (x, y + c, lw, lh - c)]
    return leaves


def _neighbours(rects):
    n = len(rects)
    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if shared_boundary(rects[i], rects[j]) > 0:
                adj[i].add(j)
                adj[j].add(i)
    return adj


def _connected(nodes, adj):
    nodes = set(nodes)
    if not nodes:
        return False
    seen = {next(iter(nodes))}
    stack = list(seen)
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v in nodes and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == nodes


def _pick_exterior(rng, rects, adj, frame, frac):
    n = len(rects)
    if n < 2:
        return set()
    fw, fh = frame
    border = [k for k, r in enumerate(rects) if r.x == 0 or r.y == 0 or r.x2 == fw or r.y2 == fh]
    target = int(rng.integers(1, max(1, int(frac * n)) + 1))
    ext = set()
    for k in rng.permutation(border):
        if len(ext) >= target:
            break
        trial = ext | {int(k)}
        if _connected(set(range(n)) - trial, adj):
            ext = trial
    if not ext:
        raise GenError("no exterior element keeps the interior connected")
    return ext


def _assign_types(rng, rects, ext, weights):
    names = list(FLOORPLAN_TYPES)
    interior = [k for k in range(len(rects)) if k not in ext]
    areas = {k: rects[k].area for k in interior}
    median = float(np.median(list(areas.values()))) if areas else 0.0
    largest = max(interior, key=lambda k: areas[k]) if interior else None
    types = {k: names.index("exterior") for k in ext}
    for k in interior:
        r = rects[k]
        aspect = max(r.w, r.h) / min(r.w, r.h)
        small = areas[k] <= median
        cand, wts = [], []
        for name, w in weights.items():
            if name == "bathroom" or name == "balcony":
                w *= 2.0 if small else 0.3
            elif name == "living":
                w *= 3.0 if k == largest else 0.5
            elif name == "corridor":
                w *= 3.0 if aspect >= 2.5 else 0.2
            elif name == "bedroom" and small:
                w *= 0.7
            if w > 0:
                cand.append(names.index(name))
                wts.append(w)
        if not cand:
            raise GenError("type weights leave no room type")
        p = np.array(wts) / sum(wts)
        types[k] = int(cand[rng.choice(len(cand), p=p)])
    return types


def _door_edges(rng, layout, cfg):
    """Doors along a random spanning tree of the room graph, grown from the
    exterior through a single front door."""
    els = layout.elements
    ext_t = layout.exterior_type
    rooms = merge_rooms(layout)
    owner = {e: k for k, room in enumerate(rooms) for e in room}
    ext_rooms = {k for k, room in enumerate(rooms) if els[min(room)].t == ext_t}
    if not ext_rooms:
        return []
    node = {k: ("ext" if k in ext_rooms else k) for k in range(len(rooms))}
    # element pairs realising each room-graph edge
    links = {}
    for i in range(len(els)):
        for j in range(i + 1, len(els)):
            a, b = node[owner[i]], node[owner[j]]
            if a == b or shared_boundary(els[i], els[j]) < 1:
                continue
            links.setdefault(frozenset((a, b)), []).append((i, j))
    reached = {"ext"}
    tree = []
    frontier = sorted((key for key in links if "ext" in key), key=lambda s: sorted(map(str, s)))
    if frontier:
        front = frontier[int(rng.integers(len(frontier)))]
        tree.append(front)
        reached |= front
    while True:
        cands = [key for key in links if "ext" not in key and len(key & reached) == 1]
        if not cands:
            break
        cands.sort(key=lambda s: sorted(s))
        key = cands[int(rng.integers(len(cands)))]
        tree.append(key)
        reached |= key
    chosen = [key for key in tree if rng.random() >= cfg.inaccessible_prob]
    if cfg.extra_door_prob > 0:
        rest = sorted((key for key in links if key not in tree and "ext" not in key), key=lambda s: sorted(s))
        chosen += [key for key in rest if rng.random() < cfg.extra_door_prob]
    doors = []
    for key in chosen:
        pairs = links[key]
        i, j = pairs[int(rng.integers(len(pairs)))]
        doors.append(Edge(i, j, EdgeKind.DOOR))
    return doors


def adjacency_edges(elements):
    out = []
    for i, a in enumerate(elements):
        for j, b in enumerate(elements):
            if i == j:
                continue
            if h_adjacent(a, b):
                out.append(Edge(i, j, EdgeKind.HADJ))
            if v_adjacent(a, b):
                out.append(Edge(i, j, EdgeKind.VADJ))
    return out


def generate_floorplan(cfg, rng):
    n = int(rng.integers(cfg.min_elements, cfg.max_elements + 1))
    s = cfg.min_size
    if n * s * s > 64 * 64 or (n > 1 and s > 32):
        raise GenError(f"{n} elements of side >= {s} do not fit the 64 x 64 world")
    lo = min(64, max(s, int(math.ceil(s * math.sqrt(n) * 1.5))))
    for _ in range(200):
        fw, fh = int(rng.integers(lo, 65)), int(rng.integers(lo, 65))
        leaves = _guillotine(rng, fw, fh, n, s)
        if leaves is not None:
            break
    else:
        raise GenError(f"could not partition a frame into {n} elements of side >= {s}")
    rects = [Element(0, float(x), float(y), float(w), float(h)) for x, y, w, h in leaves]
    adj = _neighbours(rects)
    ext = _pick_exterior(rng, rects, adj, (fw, fh), cfg.exterior_frac)
    types = _assign_types(rng, rects, ext, cfg.type_weights)
    elements = [Element(types[k], r.x, r.y, r.w, r.h) for k, r in enumerate(rects)]
    edges = adjacency_edges(elements)
    ext_t = FLOORPLAN_TYPES.index("exterior")
    for i in range(len(elements)):
        for j in sorted(adj[i]):
            if j > i and elements[i].t == elements[j].t != ext_t and rng.random() < cfg.wall_prob:
                edges.append(Edge(i, j, EdgeKind.WALL))
    layout = Layout(Mode.FLOORPLAN, FLOORPLAN_TYPES, elements, edges)
    layout = Layout(Mode.FLOORPLAN, FLOORPLAN_TYPES, elements, edges + _door_edges(rng, layout, cfg))
    return canonicalize(layout)


# --- furniture ---------------------------------------------------------------------

def generate_furniture(cfg, rng, room=None):
    """Non-overlapping oriented boxes inside ``room`` = (x, y, w, h)."""
    if room is None:
        rw, rh = int(rng.integers(16, 65)), int(rng.integers(16, 65))
        room = (0, 0, rw, rh)
    rx, ry, rw, rh = room
    n = int(rng.integers(cfg.min_pieces, cfg.max_pieces + 1))
    pieces = []
    attempts = 0
    while len(pieces) < n and attempts < 50 * (n + 1):
        attempts += 1
        w = int(rng.integers(2, max(3, min(16, rw) + 1)))
        h = int(rng.integers(2, max(3, min(16, rh) + 1)))
        if w > rw or h > rh:
            continue
        x = rx + int(rng.integers(0, rw - w + 1))
        y = ry + int(rng.integers(0, rh - h + 1))
        a = ANGLE_Q.dequantize(int(rng.integers(ANGLE_Q.levels)))
        e = Element(int(rng.integers(len(FURNITURE_TYPES))), float(x), float(y), float(w), float(h), a)
        if any(interiors_overlap(e, p) for p in pieces):
            continue
        pieces.append(e)
    return canonicalize(Layout(Mode.FURNITURE, FURNITURE_TYPES, pieces, []))


# --- corpora ------------------------------------------------------------------------

def generate_corpus(cfg):
    """``cfg.n_layouts`` layouts, each from its own stream split off the seed."""
    gen = generate_floorplan if Mode(cfg.mode) is Mode.FLOORPLAN else generate_furniture
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_layouts)
    return [gen(cfg, np.random.default_rng(s)) for s in streams]


def split_corpus(layouts, fractions=(0.9, 0.05, 0.05)):
    """Train / validation / test split by index."""
    n = len(layouts)
    a = int(round(fractions[0] * n))
    b = a + int(round(fractions[1] * n))
    return list(layouts[:a]), list(layouts[a:b]), list(layouts[b:])


def save_corpus(path, layouts):
    with open(path, "w") as fh:
        for lay in layouts:
            fh.write(lay.to_json() + "\n")


def load_corpus(path):
    out = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(Layout.from_dict(json.loads(line)))
            except (json.JSONDecodeError, SchemaError, AttributeError) as exc:
                raise LoadError(f"{path}:{line_no}: {exc}", line_no) from exc
    return out
