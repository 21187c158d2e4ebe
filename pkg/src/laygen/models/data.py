"""Training examples and padded batches for the element and edge models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..codec import (EDGE_END, EDGE_STOP, MAX_EDGE_LEN, MAX_ELEMENT_LEN, Vocab, boundary_tuples, canonicalize,
                     element_constraints, encode_edges, encode_tuples, room_tuples, tuple_arity)
from ..errors import CapacityError
from ..layout import interior_layout
from .config import Condition

# extra type id for the START token of edge sequences
EDGE_START_TYPE = 3


@dataclass(frozen=True)
class ElementExample:
    tokens: tuple            # target sequence, ending in STOP
    cond: tuple | None = None
    cond_types: tuple | None = None


@dataclass(frozen=True)
class EdgeExample:
    elem_tuples: tuple       # (type, bin, ...) per element, canonical order
    tokens: tuple            # edge tokens, ending in EDGE_STOP
    cond: tuple | None = None
    cond_types: tuple | None = None


def condition_tuples(layout, condition):
    condition = Condition(condition)
    if condition is Condition.BOUNDARY:
        return boundary_tuples(layout)
    if condition is Condition.ELEMENTS:
        return room_tuples(layout)
    return None


def target_layout(layout, condition):
    """Canonical layout the models generate. Boundary conditioning drops the
    exterior rectangles, which are given as input instead."""
    layout = canonicalize(layout)
    if Condition(condition) is Condition.BOUNDARY:
        layout = canonicalize(interior_layout(layout))
    return layout


def encode_condition(tuples, vocab, max_len=MAX_ELEMENT_LEN):
    if tuples is None:
        return None, None
    seq = encode_tuples(tuples, vocab, max_len)
    return seq.values, seq.types


def element_example(layout, condition="none", max_len=MAX_ELEMENT_LEN):
    vocab = Vocab(len(layout.types))
    tgt = target_layout(layout, condition)
    seq = encode_tuples([c.as_tuple() for c in element_constraints(tgt)], vocab, max_len)
    cond, ctyp = encode_condition(condition_tuples(layout, condition), vocab, max_len)
    return ElementExample(seq.values, cond, ctyp)


def edge_example(layout, kind, condition="none", max_len=MAX_EDGE_LEN):
    vocab = Vocab(len(layout.types))
    tgt = target_layout(layout, condition)
    tuples = tuple(c.as_tuple() for c in element_constraints(tgt, range(len(tgt.elements))))
    seq = encode_edges(tgt, kind, max_len=max_len)
    cond, ctyp = encode_condition(condition_tuples(layout, condition), vocab, MAX_ELEMENT_LEN)
    return EdgeExample(tuples, seq.values, cond, ctyp)


# --- batching -------------------------------------------------------------------

def _pad(rows, fill, dtype=np.int64):
    n = max((len(r) for r in rows), default=0)
    out = np.full((len(rows), max(n, 1)), fill, dtype=dtype)
    for b, r in enumerate(rows):
        out[b, :len(r)] = r
    return out


def condition_batch(conds, cond_types, vocab):
    if conds is None or any(c is None for c in conds):
        return None
    tok = _pad(conds, vocab.pad)
    typ = _pad(cond_types, 0)
    valid = _pad([[1] * len(c) for c in conds], 0).astype(bool)
    pos = np.where(valid, np.arange(1, tok.shape[1] + 1)[None], 0)
    return {"tok": tok, "pos": pos, "typ": typ, "valid": valid}


def element_inputs(prefixes, vocab, arity):
    """Shifted decoder inputs: START then each prefix. The type channel of
    position p names the slot of the token predicted there (p mod arity)."""
    inp = _pad([(vocab.start, *p) for p in prefixes], vocab.pad)
    n = inp.shape[1]
    pos = np.broadcast_to(np.arange(n), inp.shape).copy()
    typ = pos % arity
    return inp, pos, typ


def make_element_batch(examples, vocab, arity, max_len=MAX_ELEMENT_LEN):
    for ex in examples:
        if len(ex.tokens) > max_len:
            raise CapacityError(f"sequence of {len(ex.tokens)} tokens exceeds {max_len}")
    inp, pos, typ = element_inputs([ex.tokens[:-1] for ex in examples], vocab, arity)
    tgt = _pad([ex.tokens for ex in examples], vocab.pad)
    return {
        "inp": inp, "pos": pos, "typ": typ, "tgt": tgt, "mask": tgt != vocab.pad,
        "cond": condition_batch([ex.cond for ex in examples], [ex.cond_types for ex in examples], vocab),
    }


def element_token_batch(elem_tuples, vocab, arity):
    """Flattened element tuples (no STOP) for the element-embedding network."""
    rows, types = [], []
    for tuples in elem_tuples:
        seq = encode_tuples(tuples, vocab, max_len=10 ** 9)
        rows.append(seq.values[:-1])
        types.append(seq.types[:-1])
    m = [len(t) for t in elem_tuples]
    mmax = max(max(m, default=0), 1)
    width = mmax * arity
    tok = np.full((len(rows), width), vocab.pad, dtype=np.int64)
    typ = np.zeros_like(tok)
    for b, (r, t) in enumerate(zip(rows, types)):
        tok[b, :len(r)] = r
        typ[b, :len(t)] = t
    valid = tok != vocab.pad
    pos = np.where(valid, np.arange(1, width + 1)[None], 0)
    elem_valid = np.arange(mmax)[None] < np.array(m)[:, None]
    return {"tok": tok, "pos": pos, "typ": typ, "valid": valid, "elem_valid": elem_valid, "mmax": mmax,
            "m": np.array(m)}


def pointer_index(tokens, mmax):
    """Map edge tokens onto rows of the [elements | STOP | END | START] table."""
    t = np.asarray(tokens, dtype=np.int64)
    out = t.copy()
    out[t == EDGE_STOP] = mmax
    out[t == EDGE_END] = mmax + 1
    return out


def edge_inputs(prefixes, type_rows, mmax):
    """(B, S) pointer-table indices, positions and type channel for prefixes."""
    n = max(len(p) for p in prefixes) + 1
    idx = np.full((len(prefixes), n), mmax + 2, dtype=np.int64)
    typ = np.full_like(idx, EDGE_START_TYPE)
    for b, (p, ty) in enumerate(zip(prefixes, type_rows)):
        idx[b, 1:len(p) + 1] = pointer_index(p, mmax)
        typ[b, 1:len(p) + 1] = ty
    pos = np.broadcast_to(np.arange(n), idx.shape).copy()
    return idx, pos, typ


def make_edge_batch(examples, vocab, arity, shortened, max_len=MAX_EDGE_LEN):
    from ..codec import edge_types
    for ex in examples:
        if len(ex.tokens) > max_len:
            raise CapacityError(f"edge sequence of {len(ex.tokens)} tokens exceeds {max_len}")
        m = len(ex.elem_tuples)
        if any(v >= m for v in ex.tokens):
            raise IndexError(f"edge token references an element >= {m}")
    elems = element_token_batch([ex.elem_tuples for ex in examples], vocab, arity)
    mmax = elems["mmax"]
    prefixes = [ex.tokens[:-1] for ex in examples]
    idx, pos, typ = edge_inputs(prefixes, [edge_types(p, shortened) for p in prefixes], mmax)
    tgt = np.full(idx.shape, -1, dtype=np.int64)
    for b, ex in enumerate(examples):
        tgt[b, :len(ex.tokens)] = pointer_index(ex.tokens, mmax)
    mask = tgt >= 0
    tgt[~mask] = 0
    return {
        "elems": elems, "idx": idx, "pos": pos, "typ": typ, "tgt": tgt, "mask": mask,
        "cond": condition_batch([ex.cond for ex in examples], [ex.cond_types for ex in examples], vocab),
    }
