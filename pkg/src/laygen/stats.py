"""Corpus-level layout statistics and their normalised comparison.

Every statistic is computed per layout, averaged over the corpus, and then
compared with a reference corpus: histograms through the 1-D earth mover's
distance, plain numbers through the Euclidean distance. Histogram
statistics are split by element type (or by axis) into sub-histograms
whose distances are averaged.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError
from .layout import EdgeGroup, Mode, door_graph

N_BINS = 32
CAP = 100.0

# fixed histogram ranges
LOC = (0.0, 64.0)
AREA = (0.0, 1024.0)
ASPECT = (0.0, 8.0)
DIST = (0.0, 64.0)
SIGNED = (-64.0, 64.0)
COUNT = (-0.5, N_BINS - 0.5)    # integer counts 0..31
ANGLE = (0.0, 2 * math.pi)
ANGLE_DIFF = (0.0, math.pi)


@dataclass
class Histogram:
    lo: float
    hi: float
    counts: np.ndarray = None
    total: float = 0.0      # running sum of raw samples, for means

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(N_BINS)
        self.counts = np.asarray(self.counts, dtype=float)

    @property
    def edges(self):
        return np.linspace(self.lo, self.hi, len(self.counts) + 1)

    @property
    def width(self):
        return (self.hi - self.lo) / len(self.counts)

    @property
    def mass(self):
        return float(self.counts.sum())

    def mean(self):
        return self.total / self.mass if self.mass else float("nan")

    def add(self, values):
        v = np.atleast_1d(np.asarray(values, dtype=float))
        if v.size == 0:
            return self
        k = np.floor((v - self.lo) / self.width).astype(int)
        np.add.at(self.counts, np.clip(k, 0, len(self.counts) - 1), 1.0)
        self.total += float(v.sum())
        return self

    def normalized(self):
        m = self.mass
        return Histogram(self.lo, self.hi, self.counts / m if m else self.counts.copy(), self.total / m if m else 0.0)


def histogram(values, rng):
    return Histogram(*rng).add(values)


def emd(h1, h2):
    """Earth mover's distance between two histograms on identical bins:
    sum_k |CDF1(k) - CDF2(k)| * bin width, after normalising each to unit mass."""
    if len(h1.counts) != len(h2.counts) or not np.allclose([h1.lo, h1.hi], [h2.lo, h2.hi]):
        raise SchemaError("histograms have different bin edges")
    p = h1.counts / h1.mass if h1.mass else h1.counts
    q = h2.counts / h2.mass if h2.mass else h2.counts
    return float(np.abs(np.cumsum(p) - np.cumsum(q)).sum() * h1.width)


# --- graphs ---------------------------------------------------------------------------

def rnn_graph(layout, r_frac=0.15):
    """Undirected graph joining pieces whose centres lie within r_frac times
    the bounding-box diagonal."""
    els = layout.elements
    x0, y0, x1, y1 = layout.bbox()
    r = r_frac * math.hypot(x1 - x0, y1 - y0)
    adj = [set() for _ in els]
    for i, a in enumerate(els):
        for j in range(i + 1, len(els)):
            b = els[j]
            if math.hypot(a.cx - b.cx, a.cy - b.cy) <= r + 1e-12:
                adj[i].add(j)
                adj[j].add(i)
    return adj


def bfs(adj, src):
    dist = [-1] * len(adj)
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for v in sorted(adj[u]):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


@dataclass
class TopoGraph:
    """Nodes with types, adjacency, and an optional exterior node index."""
    types: list
    adj: list
    exterior: int | None = None


def topo_graph(layout):
    if layout.mode is Mode.FURNITURE:
        return TopoGraph([e.t for e in layout.elements], rnn_graph(layout))
    g = door_graph(layout)
    # exterior-typed rooms are placeholders merged into the exterior node
    keep = g.interior_rooms()
    index = {k: n for n, k in enumerate(keep)}
    index[g.exterior] = len(keep)
    adj = [set() for _ in range(len(keep) + 1)]
    for u, nbrs in enumerate(g.adjacency):
        if u not in index:
            continue
        for v in nbrs:
            if v in index:
                adj[index[u]].add(index[v])
    return TopoGraph([g.room_types[k] for k in keep], adj, len(keep))


# --- per-family statistics ----------------------------------------------------------

@dataclass
class Stat:
    """Corpus average of one statistic: stacked sub-histograms or a vector."""
    name: str
    family: str          # "t" | "r" | "a"
    kind: str            # "hist" | "scalar"
    value: object        # list[Histogram] or np.ndarray

    def to_dict(self):
        if self.kind == "hist":
            return {"name": self.name, "family": self.family, "kind": self.kind,
                    "hists": [{"lo": h.lo, "hi": h.hi, "counts": h.counts.tolist(), "total": h.total}
                              for h in self.value]}
        return {"name": self.name, "family": self.family, "kind": self.kind,
                "value": np.asarray(self.value).tolist()}

    @classmethod
    def from_dict(cls, d):
        if d["kind"] == "hist":
            value = [Histogram(h["lo"], h["hi"], np.array(h["counts"]), h["total"]) for h in d["hists"]]
        else:
            value = np.array(d["value"], dtype=float)
        return cls(d["name"], d["family"], d["kind"], value)


class _HistAverager:
    """Mean of per-layout normalised histograms, one slot per sub-histogram;
    layouts with no samples in a slot do not count toward that slot."""

    def __init__(self, rngs):
        self.rngs = rngs
        self.sums = [Histogram(*r) for r in rngs]
        self.n = [0] * len(rngs)

    def add_layout(self, hists):
        for k, h in enumerate(hists):
            if h.mass:
                nh = h.normalized()
                self.sums[k].counts += nh.counts
                self.sums[k].total += nh.total
                self.n[k] += 1

    def result(self):
        out = []
        for h, n in zip(self.sums, self.n):
            out.append(Histogram(h.lo, h.hi, h.counts / n if n else h.counts.copy(), h.total / n if n else 0.0))
        return out


def _type_ids(corpus, exclude_exterior=True):
    if not corpus:
        return []
    types = corpus[0].types
    ext = corpus[0].exterior_type if corpus[0].mode is Mode.FLOORPLAN else None
    return [t for t in range(len(types)) if not (exclude_exterior and t == ext)]


def topo_stats(corpus):
    tids = _type_ids(corpus)
    T = len(tids)
    pos = {t: k for k, t in enumerate(tids)}
    floor = bool(corpus) and corpus[0].mode is Mode.FLOORPLAN
    counts = np.zeros(T)
    conn = np.zeros((T, T))
    dist_sum = np.zeros((T, T))
    dist_n = np.zeros((T, T))
    inacc = np.zeros(T)
    h_count = _HistAverager([COUNT] * T)
    h_ext = _HistAverager([COUNT] * T)
    h_deg = _HistAverager([COUNT] * T)
    for layout in corpus:
        g = topo_graph(layout)
        nodes = [k for k, t in enumerate(g.types) if t in pos]
        c = np.zeros(T)
        for k in nodes:
            c[pos[g.types[k]]] += 1
        counts += c
        h_count.add_layout([histogram([c[a]], COUNT) for a in range(T)])
        lc = np.zeros((T, T))
        for u in nodes:
            for v in g.adj[u]:
                if v in nodes and u < v:
                    a, b = sorted((pos[g.types[u]], pos[g.types[v]]))
                    lc[a, b] += 1
        conn += lc
        ls, ln = np.zeros((T, T)), np.zeros((T, T))
        dists = {u: bfs(g.adj, u) for u in nodes}
        for u in nodes:
            for v in nodes:
                if u < v and dists[u][v] > 0:
                    a, b = sorted((pos[g.types[u]], pos[g.types[v]]))
                    ls[a, b] += dists[u][v]
                    ln[a, b] += 1
        has = ln > 0
        dist_sum[has] += ls[has] / ln[has]
        dist_n[has] += 1
        deg = [[] for _ in range(T)]
        for u in nodes:
            deg[pos[g.types[u]]].append(len(g.adj[u]))
        h_deg.add_layout([histogram(d, COUNT) for d in deg])
        if floor and g.exterior is not None:
            dext = bfs(g.adj, g.exterior)
            ext = [[] for _ in range(T)]
            for u in nodes:
                if dext[u] >= 0:
                    ext[pos[g.types[u]]].append(dext[u])
                else:
                    inacc[pos[g.types[u]]] += 1
            h_ext.add_layout([histogram(e, COUNT) for e in ext])
    n = max(len(corpus), 1)
    mean_dist = np.divide(dist_sum, dist_n, out=np.zeros_like(dist_sum), where=dist_n > 0)
    iu = np.triu_indices(T)
    out = [
        Stat("s_t^r", "t", "scalar", counts / n),
        Stat("s_t^h", "t", "hist", h_count.result()),
        Stat("s_t^t", "t", "scalar", (conn / n)[iu]),
        Stat("s_t^d", "t", "scalar", mean_dist[iu]),
        Stat("s_t^c", "t", "hist", h_deg.result()),
    ]
    if floor:
        out.insert(4, Stat("s_t^e", "t", "hist", h_ext.result()))
        out.append(Stat("s_t^u", "t", "scalar", inacc / n))
    return out


def _elements(layout):
    if layout.mode is Mode.FLOORPLAN:
        ext = layout.exterior_type
        return [(k, e) for k, e in enumerate(layout.elements) if e.t != ext]
    return list(enumerate(layout.elements))


def shape_stats(corpus):
    tids = _type_ids(corpus)
    T = len(tids)
    pos = {t: k for k, t in enumerate(tids)}
    furniture = bool(corpus) and corpus[0].mode is Mode.FURNITURE
    loc = _HistAverager([LOC] * (2 * T))
    area = _HistAverager([AREA] * T)
    aspect = _HistAverager([ASPECT] * T)
    orient = _HistAverager([ANGLE] * T)
    for layout in corpus:
        cx, cy, ar, asp, ori = ([[] for _ in range(T)] for _ in range(5))
        for _, e in _elements(layout):
            a = pos[e.t]
            cx[a].append(e.cx)
            cy[a].append(e.cy)
            ar[a].append(e.area)
            asp[a].append(e.w / e.h)
            if furniture:
                ori[a].append(e.a % (2 * math.pi))
        loc.add_layout([histogram(v, LOC) for v in cx + cy])
        area.add_layout([histogram(v, AREA) for v in ar])
        aspect.add_layout([histogram(v, ASPECT) for v in asp])
        if furniture:
            orient.add_layout([histogram(v, ANGLE) for v in ori])
    out = [
        Stat("s_r^c", "r", "hist", loc.result()),
        Stat("s_r^a", "r", "hist", area.result()),
        Stat("s_r^s", "r", "hist", aspect.result()),
    ]
    if furniture:
        out.append(Stat("s_r^o", "r", "hist", orient.result()))
    return out


def gap(a, b):
    """Larger of the per-axis signed separations; negative iff the
    interiors overlap."""
    sx = max(a.x, b.x) - min(a.x2, b.x2)
    sy = max(a.y, b.y) - min(a.y2, b.y2)
    return max(sx, sy)


def aligned_center(a, b):
    return min(abs(a.cx - b.cx), abs(a.cy - b.cy))


def aligned_side(a, b):
    return min(abs(a.x - b.x), abs(a.x2 - b.x2), abs(a.y - b.y), abs(a.y2 - b.y2))


def _angle_diff(a, b):
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def _pair_hists(pairs, furniture):
    vals = {k: [] for k in ("cx", "cy", "g", "a", "s", "o", "w", "h")}
    for a, b in pairs:
        vals["cx"].append(abs(a.cx - b.cx))
        vals["cy"].append(abs(a.cy - b.cy))
        vals["g"].append(gap(a, b))
        vals["a"].append(aligned_center(a, b))
        vals["s"].append(aligned_side(a, b))
        if furniture:
            vals["o"].append(_angle_diff(a.a, b.a))
            vals["w"].append(abs(a.w - b.w))
            vals["h"].append(abs(a.h - b.h))
    return vals


def align_stats(corpus):
    furniture = bool(corpus) and corpus[0].mode is Mode.FURNITURE
    specs = [("s_a^c", ("cx", "cy"), (DIST, DIST)), ("s_a^g", ("g",), (SIGNED,)),
             ("s_a^a", ("a",), (DIST,)), ("s_a^s", ("s",), (DIST,))]
    if furniture:
        specs += [("s_s^o", ("o",), (ANGLE_DIFF,)), ("s_s^w", ("w",), (DIST,)), ("s_s^h", ("h",), (DIST,))]
    groups = {"all": {n: _HistAverager(r) for n, _, r in specs}}
    if not furniture:
        groups["desc"] = {n: _HistAverager(r) for n, _, r in specs}
    for layout in corpus:
        els = _elements(layout)
        pairs = [(a, b) for i, (_, a) in enumerate(els) for (_, b) in els[i + 1:]]
        sets = {"all": _pair_hists(pairs, furniture)}
        if "desc" in groups:
            keep = {k for k, _ in els}
            linked = {tuple(sorted((r.i, r.j))) for r in layout.edges if r.kind.group is EdgeGroup.DESCRIPTIVE}
            dp = [(layout.elements[i], layout.elements[j]) for i, j in sorted(linked) if i in keep and j in keep]
            sets["desc"] = _pair_hists(dp, furniture)
        for g, avgs in groups.items():
            for name, keys, rngs in specs:
                avgs[name].add_layout([histogram(sets[g][k], r) for k, r in zip(keys, rngs)])
    out = []
    for g, avgs in groups.items():
        for name, _, _ in specs:
            out.append(Stat(name if g == "all" else name + "|desc", "a", "hist", avgs[name].result()))
    return out


def compute_stats(corpus):
    corpus = list(corpus)
    return topo_stats(corpus) + shape_stats(corpus) + align_stats(corpus)


# --- comparison -------------------------------------------------------------------

def distance(s1, s2):
    if s1.name != s2.name or s1.kind != s2.kind:
        raise SchemaError(f"cannot compare {s1.name} with {s2.name}")
    if s1.kind == "hist":
        if len(s1.value) != len(s2.value):
            raise SchemaError(f"{s1.name}: sub-histogram counts differ")
        if not s1.value:
            return 0.0
        return float(np.mean([emd(a, b) for a, b in zip(s1.value, s2.value)]))
    a, b = np.asarray(s1.value, dtype=float), np.asarray(s2.value, dtype=float)
    if a.shape != b.shape:
        raise SchemaError(f"{s1.name}: shapes {a.shape} and {b.shape} differ")
    return float(np.linalg.norm(a - b))


def ratio(num, den, cap=CAP):
    """num / den with 0/0 -> 1 and x/0 -> cap. Returns (value, capped)."""
    if den == 0.0:
        return (1.0, False) if num == 0.0 else (cap, True)
    return num / den, False


@dataclass
class StatReport:
    """Per-statistic distance ratios, family means and their average."""
    ratios: dict = field(default_factory=dict)
    distances: dict = field(default_factory=dict)
    capped: list = field(default_factory=list)
    s_t: float = float("nan")
    s_r: float = float("nan")
    s_a: float = float("nan")
    s_avg: float = float("nan")
    cap: float = CAP

    def to_dict(self):
        return {"s_t": self.s_t, "s_r": self.s_r, "s_a": self.s_a, "s_avg": self.s_avg, "cap": self.cap,
                "capped": self.capped, "ratios": self.ratios, "distances": self.distances}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self):
        return ("s_t      s_r      s_a      s_avg\n"
                f"{self.s_t:<8.4f} {self.s_r:<8.4f} {self.s_a:<8.4f} {self.s_avg:<8.4f}")


def aggregate(ours, theirs, gt, cap=CAP):
    """Mean over each family of dist(theirs, gt) / dist(ours, gt)."""
    o = {s.name: s for s in ours}
    t = {s.name: s for s in theirs}
    g = {s.name: s for s in gt}
    if not (o.keys() == t.keys() == g.keys()):
        raise SchemaError("statistic sets differ between corpora")
    rep = StatReport(cap=cap)
    fam = {"t": [], "r": [], "a": []}
    for name, sg in g.items():
        num = distance(t[name], sg)
        den = distance(o[name], sg)
        r, capped = ratio(num, den, cap)
        rep.ratios[name] = r
        rep.distances[name] = {"theirs": num, "ours": den}
        if capped:
            rep.capped.append(name)
        fam[sg.family].append(r)
    rep.s_t, rep.s_r, rep.s_a = (float(np.mean(fam[f])) if fam[f] else float("nan") for f in "tra")
    rep.s_avg = float(np.mean([v for v in (rep.s_t, rep.s_r, rep.s_a) if not math.isnan(v)]))
    return rep


def save_stats(path, stats):
    with open(path, "w") as fh:
        json.dump([s.to_dict() for s in stats], fh)


def load_stats(path):
    with open(path) as fh:
        return [Stat.from_dict(d) for d in json.load(fh)]
