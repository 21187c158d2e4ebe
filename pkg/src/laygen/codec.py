"""Invertible token encodings of element constraints and edge lists.

Element tokens share one id space: value bins ``[0, 64)``, then one id per
element type, then the special tokens. Edge sequences are lists of element
indices plus two negative sentinels (stop / group end).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DecodeError, LoadError
from .layout import ANGLE_Q, COORD_Q, Edge, EdgeKind, Mode

N_BINS = COORD_Q.levels

EDGE_STOP = -1
EDGE_END = -2
# type channel values for edge sequences
SRC, TGT, SPECIAL = 0, 1, 2

MAX_ELEMENT_LEN = 256
MAX_EDGE_LEN = 512


@dataclass(frozen=True)
class Vocab:
    n_types: int

    @property
    def type_base(self):
        return N_BINS

    def type_token(self, t):
        return N_BINS + t

    def is_type(self, tok):
        return N_BINS <= tok < N_BINS + self.n_types

    @property
    def stop(self):
        return N_BINS + self.n_types

    @property
    def group_end(self):
        return self.stop + 1

    @property
    def start(self):
        return self.stop + 2

    @property
    def pad(self):
        return self.stop + 3

    @property
    def size(self):
        return self.stop + 4


@dataclass(frozen=True)
class TokenSequence:
    values: tuple
    types: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        object.__setattr__(self, "types", tuple(int(t) for t in self.types))
        if len(self.values) != len(self.types):
            raise ValueError("values and types differ in length")

    @property
    def positions(self):
        return tuple(range(1, len(self.values) + 1))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class ElementConstraint:
    """Type id plus quantized target bins (w, h) or (x, y, w, h, angle)."""
    t: int
    bins: tuple

    def as_tuple(self):
        return (self.t, *self.bins)


# --- slot schemas -------------------------------------------------------------

def tuple_arity(mode):
    return 3 if Mode(mode) is Mode.FLOORPLAN else 6


def slot_levels(mode):
    """Number of valid bins per non-type slot."""
    if Mode(mode) is Mode.FLOORPLAN:
        return (COORD_Q.levels, COORD_Q.levels)
    return (COORD_Q.levels,) * 4 + (ANGLE_Q.levels,)


# --- elements -----------------------------------------------------------------

def order_elements(layout):
    """Left to right, then by y; ties broken by (w, h, type)."""
    els = layout.elements
    return sorted(range(len(els)), key=lambda k: (els[k].x, els[k].y, els[k].w, els[k].h, els[k].t))


def element_constraints(layout, order=None):
    if order is None:
        order = order_elements(layout)
    out = []
    for k in order:
        e = layout.elements[k]
        if layout.mode is Mode.FLOORPLAN:
            bins = (COORD_Q.quantize(e.w), COORD_Q.quantize(e.h))
        else:
            bins = (COORD_Q.quantize(e.x), COORD_Q.quantize(e.y), COORD_Q.quantize(e.w),
                    COORD_Q.quantize(e.h), ANGLE_Q.quantize(e.a % ANGLE_Q.hi))
        out.append(ElementConstraint(e.t, bins))
    return out


def encode_tuples(tuples, vocab, max_len=MAX_ELEMENT_LEN):
    """Flatten (type, bin, bin, ...) tuples. Types cycle 0..k-1; STOP gets type 0."""
    values, types = [], []
    for tup in tuples:
        values.append(vocab.type_token(tup[0]))
        types.append(0)
        for s, b in enumerate(tup[1:], start=1):
            values.append(int(b))
            types.append(s)
    values.append(vocab.stop)
    types.append(0)
    if len(values) > max_len:
        raise CapacityError(f"sequence of {len(values)} tokens exceeds {max_len}")
    return TokenSequence(values, types)


def encode_constraints(constraints, vocab, max_len=MAX_ELEMENT_LEN):
    return encode_tuples([c.as_tuple() for c in constraints], vocab, max_len)


def encode_elements(layout, vocab=None, max_len=MAX_ELEMENT_LEN):
    vocab = vocab or Vocab(len(layout.types))
    return encode_constraints(element_constraints(layout), vocab, max_len)


def decode_tuples(values, vocab, levels):
    """Inverse of :func:`encode_tuples` for tuples whose non-type slots have
    ``levels`` bins each. Trailing PAD tokens are ignored."""
    values = list(values)
    while values and values[-1] == vocab.pad:
        values.pop()
    k = len(levels) + 1
    out, cur = [], []
    for off, tok in enumerate(values):
        slot = off % k
        if tok == vocab.stop:
            if slot != 0:
                raise DecodeError("stop token inside a tuple", off)
            if off != len(values) - 1:
                raise DecodeError("tokens after stop", off + 1)
            return out
        if slot == 0:
            if not vocab.is_type(tok):
                raise DecodeError(f"expected a type token, got {tok}", off)
            cur = [tok - vocab.type_base]
        else:
            if not 0 <= tok < levels[slot - 1]:
                raise DecodeError(f"expected a bin below {levels[slot - 1]}, got {tok}", off)
            cur.append(tok)
            if slot == k - 1:
                out.append(tuple(cur))
    raise DecodeError("missing stop token", len(values))


def decode_elements(seq, mode=Mode.FLOORPLAN, vocab=None, n_types=7):
    vocab = vocab or Vocab(n_types)
    values = seq.values if isinstance(seq, TokenSequence) else seq
    tuples = decode_tuples(values, vocab, slot_levels(mode))
    return [ElementConstraint(t[0], tuple(t[1:])) for t in tuples]


# --- edges --------------------------------------------------------------------

def edge_pairs(layout, kind):
    return sorted({(r.i, r.j) for r in layout.edges_of(kind)})


def encode_edge_pairs(pairs, shortened, max_len=MAX_EDGE_LEN):
    pairs = sorted(pairs)
    values, types = [], []
    if shortened:
        prev = None
        for i, j in pairs:
            if i != prev:
                if prev is not None:
                    values.append(EDGE_END)
                    types.append(SPECIAL)
                values.append(i)
                types.append(SRC)
                prev = i
            values.append(j)
            types.append(TGT)
        if prev is not None:
            values.append(EDGE_END)
            types.append(SPECIAL)
    else:
        for i, j in pairs:
            values += [i, j]
            types += [SRC, TGT]
    values.append(EDGE_STOP)
    types.append(SPECIAL)
    if len(values) > max_len:
        raise CapacityError(f"edge sequence of {len(values)} tokens exceeds {max_len}")
    return TokenSequence(values, types)


def encode_edges(layout, kind, shortened=None, max_len=MAX_EDGE_LEN):
    """Edges of one type, sorted by (source, target). Element indices refer
    to ``layout.elements`` and must already be in canonical order."""
    kind = EdgeKind(kind)
    if shortened is None:
        shortened = kind.shortened
    return encode_edge_pairs(edge_pairs(layout, kind), shortened, max_len)


def edge_types(values, shortened):
    """Recompute the source/target/special channel for an edge token list."""
    types = []
    expect_src = True
    for v in values:
        if v < 0:
            types.append(SPECIAL)
            expect_src = True
        elif shortened:
            types.append(SRC if expect_src else TGT)
            expect_src = False
        else:
            types.append(SRC if expect_src else TGT)
            expect_src = not expect_src
    return types


def decode_edge_pairs(values, shortened, n_elements):
    values = list(values.values if isinstance(values, TokenSequence) else values)
    pairs = []

    def check(idx, off):
        if idx >= n_elements:
            raise DecodeError(f"element index {idx} >= {n_elements}", off)

    src = None
    n_targets = 0
    pending = None
    for off, tok in enumerate(values):
        if tok == EDGE_STOP:
            if (shortened and src is not None) or (not shortened and pending is not None):
                raise DecodeError("dangling source before stop", off)
            if off != len(values) - 1:
                raise DecodeError("tokens after stop", off + 1)
            return pairs
        if shortened:
            if tok == EDGE_END:
                if src is None:
                    raise DecodeError("group end without a group", off)
                if n_targets == 0:
                    raise DecodeError("dangling source with no targets", off)
                src = None
                continue
            if tok < 0:
                raise DecodeError(f"unknown special {tok}", off)
            check(tok, off)
            if src is None:
                src, n_targets = tok, 0
            else:
                if tok == src:
                    raise DecodeError("self-edge", off)
                pairs.append((src, tok))
                n_targets += 1
        else:
            if tok < 0:
                raise DecodeError(f"unexpected special {tok}", off)
            check(tok, off)
            if pending is None:
                pending = tok
            else:
                if tok == pending:
                    raise DecodeError("self-edge", off)
                pairs.append((pending, tok))
                pending = None
    raise DecodeError("missing stop token", len(values))


def decode_edges(tokens, kind, shortened=None, n_elements=None):
    kind = EdgeKind(kind)
    if shortened is None:
        shortened = kind.shortened
    if n_elements is None:
        n_elements = float("inf")
    return [Edge(i, j, kind) for i, j in decode_edge_pairs(tokens, shortened, n_elements)]


# --- token cache ----------------------------------------------------------------
# Binary layout: b"LGTK", u32 version, u32 count, then per sequence a u32
# length followed by that many little-endian u16 tokens. Negative edge
# sentinels are stored as 0x10000 + value (0xFFFF stop, 0xFFFE group end).

_MAGIC = b"LGTK"


def save_token_cache(path, sequences):
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<II", 1, len(sequences)))
        for seq in sequences:
            vals = seq.values if isinstance(seq, TokenSequence) else seq
            arr = np.array([v + 0x10000 if v < 0 else v for v in vals], dtype="<u2")
            fh.write(struct.pack("<I", len(arr)))
            fh.write(arr.tobytes())


def load_token_cache(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise LoadError("not a token cache file")
    try:
        _, count = struct.unpack_from("<II", data, 4)
        off = 12
        out = []
        for k in range(count):
            (n,) = struct.unpack_from("<I", data, off)
            off += 4
            if off + 2 * n > len(data):
                raise LoadError(f"sequence {k} is truncated")
            arr = np.frombuffer(data, dtype="<u2", count=n, offset=off).astype(np.int64)
            off += 2 * n
            out.append([int(v) - 0x10000 if v >= 0xFFFE else int(v) for v in arr])
    except struct.error as exc:
        raise LoadError(f"truncated token cache: {exc}") from exc
    return out


def canonicalize(layout):
    """Reorder elements into canonical order, re-indexing edges; wall and door
    edges are stored with the smaller index first."""
    from .layout import EdgeGroup, subset_layout
    out = subset_layout(layout, order_elements(layout))
    edges = []
    for r in out.edges:
        if r.kind.group is EdgeGroup.DESCRIPTIVE and r.i > r.j:
            r = Edge(r.j, r.i, r.kind)
        edges.append(r)
    edges = sorted(set(edges), key=lambda r: (list(EdgeKind).index(r.kind), r.i, r.j))
    return type(out)(out.mode, out.types, out.elements, edges)


def boundary_tuples(layout):
    """(type, x, y, w, h) bins of every exterior rectangle, canonical order."""
    ext = layout.exterior_type
    out = []
    for k in order_elements(layout):
        e = layout.elements[k]
        if e.t == ext:
            out.append((e.t, COORD_Q.quantize(e.x), COORD_Q.quantize(e.y), COORD_Q.quantize(e.w),
                        COORD_Q.quantize(e.h)))
    return out


def room_tuples(layout):
    """(type, w, h) bins of each non-exterior room's bounding box, sorted."""
    from .layout import merge_rooms
    ext = layout.exterior_type
    out = []
    for room in merge_rooms(layout):
        els = [layout.elements[k] for k in room]
        if els[0].t == ext:
            continue
        x0 = min(e.x for e in els)
        y0 = min(e.y for e in els)
        w = max(e.x2 for e in els) - x0
        h = max(e.y2 for e in els) - y0
        out.append((els[0].t, COORD_Q.quantize(min(w, 64.0)), COORD_Q.quantize(min(h, 64.0)), x0, y0))
    out.sort(key=lambda r: (r[3], r[4], r[0]))
    return [r[:3] for r in out]
