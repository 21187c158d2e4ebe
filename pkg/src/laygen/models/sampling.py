"""Batched autoregressive sampling with grammar masks.

Each sample draws from its own generator spawned from the master seed, so a
batch is reproducible and sample ``b`` does not depend on the batch size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..codec import EDGE_END, EDGE_STOP, TokenSequence, edge_types, encode_tuples, slot_levels
from ..errors import GenError
from .data import condition_batch, edge_inputs, element_inputs, element_token_batch


@dataclass(frozen=True)
class Strategy:
    kind: str = "nucleus"       # greedy | temperature | nucleus
    value: float = 0.9
    temperature: float = 1.0

    @classmethod
    def parse(cls, text, temperature=1.0):
        """``greedy``, ``temperature:T`` or ``nucleus:P``."""
        name, _, arg = str(text).partition(":")
        if name == "greedy":
            return cls("greedy", 0.0, temperature)
        if name == "temperature":
            return cls("temperature", float(arg or temperature), float(arg or temperature))
        if name == "nucleus":
            return cls("nucleus", float(arg or 0.9), temperature)
        raise GenError(f"unknown sampling strategy {text!r}")


GREEDY = Strategy("greedy", 0.0)


@dataclass(frozen=True)
class Sample:
    tokens: TokenSequence
    truncated: bool = False


def choose(logits, allowed, strategy, rng):
    """Pick one index from ``logits`` restricted to the boolean ``allowed``."""
    if not allowed.any():
        raise GenError("grammar mask leaves no valid token")
    x = np.where(allowed, logits.astype(np.float64), -np.inf)
    if strategy.kind == "greedy":
        return int(np.argmax(x))
    x = x / max(strategy.temperature, 1e-8)
    p = np.exp(x - x.max())
    p /= p.sum()
    if strategy.kind == "nucleus":
        order = np.argsort(-p, kind="stable")
        cum = np.cumsum(p[order])
        keep = order[:int(np.searchsorted(cum, strategy.value)) + 1]
        q = np.zeros_like(p)
        q[keep] = p[keep]
        p = q / q.sum()
    return int(rng.choice(len(p), p=p))


def spawn_rngs(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _cond_batch(model, conditions, n):
    if not model.cfg.conditional:
        return None
    if conditions is None or len(conditions) != n:
        raise GenError("conditional model needs one condition per sample")
    vals, types = [], []
    for c in conditions:
        if isinstance(c, TokenSequence):
            vals.append(c.values)
            types.append(c.types)
        else:
            seq = encode_tuples(c, model.vocab, model.cfg.max_cond_len)
            vals.append(seq.values)
            types.append(seq.types)
    return condition_batch(vals, types, model.vocab)


# --- elements ------------------------------------------------------------------------

def element_slot_mask(vocab, levels, slot):
    allowed = np.zeros(vocab.size, dtype=bool)
    if slot == 0:
        allowed[vocab.type_base:vocab.type_base + vocab.n_types] = True
        allowed[vocab.stop] = True
    else:
        allowed[:levels[slot - 1]] = True
    return allowed


def sample_elements(model, n=1, conditions=None, seed=0, strategy=None, max_len=None):
    """Draw ``n`` element sequences. Per-slot masks keep every tuple well
    formed, so any sequence ending in STOP decodes."""
    strategy = strategy or Strategy()
    cfg, vocab = model.cfg, model.vocab
    max_len = min(max_len or cfg.max_seq_len, cfg.max_seq_len)
    levels = slot_levels(cfg.mode)
    masks = [element_slot_mask(vocab, levels, s) for s in range(cfg.arity)]
    rngs = spawn_rngs(seed, n)
    cond = _cond_batch(model, conditions, n)
    seqs = [[] for _ in range(n)]
    done = [False] * n
    for step in range(max_len):
        active = [b for b in range(n) if not done[b]]
        if not active:
            break
        inp, pos, typ = element_inputs([seqs[b] for b in active], vocab, cfg.arity)
        c = None if cond is None else {k: v[active] for k, v in cond.items()}
        logits = model.logits({"inp": inp, "pos": pos, "typ": typ, "cond": c}).data
        for row, b in enumerate(active):
            tok = choose(logits[row, len(seqs[b])], masks[len(seqs[b]) % cfg.arity], strategy, rngs[b])
            seqs[b].append(tok)
            if tok == vocab.stop:
                done[b] = True
    out = []
    for b in range(n):
        types = [i % cfg.arity for i in range(len(seqs[b]))]
        out.append(Sample(TokenSequence(seqs[b], types), truncated=not done[b]))
    return out


# --- edges ------------------------------------------------------------------------------

class EdgeGrammar:
    """Tracks one edge sequence and yields the allowed pointer columns.

    Sources appear in increasing order and never point to themselves. In
    the grouped style targets increase within a group and a group needs at
    least one target. In the plain style every pair has target > source
    and pairs increase lexicographically.
    """

    def __init__(self, m, shortened):
        self.m, self.shortened = m, shortened
        self.src = None          # source awaiting a target / open group
        self.last = (-1, -1)     # previous (source, target)
        self.n_tgt = 0
        self.done = False

    def allowed(self, mmax):
        m = self.m
        a = np.zeros(mmax + 2, dtype=bool)
        stop, end = mmax, mmax + 1
        ls, lt = self.last
        if self.shortened:
            if self.src is None:
                if m >= 2:
                    a[ls + 1:m] = True
                a[stop] = True
            else:
                a[lt + 1 if self.n_tgt else 0:m] = True
                a[self.src] = False
                a[end] = self.n_tgt > 0
        elif self.src is None:
            a[ls + 1:max(m - 1, ls + 1)] = True
            if ls >= 0 and lt < m - 1:
                a[ls] = True
            a[stop] = True
        else:
            lo = lt + 1 if self.src == ls else self.src + 1
            a[lo:m] = True
        return a

    def push(self, col, mmax):
        if col == mmax:
            self.done = True
            return EDGE_STOP
        if col == mmax + 1:
            self.src = None
            return EDGE_END
        if self.src is None:
            self.src, self.n_tgt = col, 0
            if self.shortened:
                self.last = (col, -1)
        else:
            self.n_tgt += 1
            self.last = (self.src, col)
            if not self.shortened:
                self.src = None
        return col


def sample_edges(model, element_tuples, conditions=None, seed=0, strategy=None, max_len=None):
    """Draw one edge sequence per element list in ``element_tuples``."""
    strategy = strategy or Strategy()
    cfg = model.cfg
    n = len(element_tuples)
    max_len = min(max_len or cfg.max_seq_len, cfg.max_seq_len)
    rngs = spawn_rngs(seed, n)
    cond = _cond_batch(model, conditions, n)
    elems = element_token_batch([tuple(tuple(t) for t in e) for e in element_tuples], model.vocab, cfg.arity)
    mmax = elems["mmax"]
    table = model.embed_elements(elems, cond)
    grammars = [EdgeGrammar(len(e), model.shortened) for e in element_tuples]
    seqs = [[] for _ in range(n)]
    for step in range(max_len):
        active = [b for b in range(n) if not grammars[b].done]
        if not active:
            break
        prefixes = [seqs[b] for b in active]
        idx, pos, typ = edge_inputs(prefixes, [edge_types(p, model.shortened) for p in prefixes], mmax)
        logits = model.pointer_logits(table[active], elems["elem_valid"][active], idx, pos, typ).data
        for row, b in enumerate(active):
            col = choose(logits[row, len(seqs[b])], grammars[b].allowed(mmax), strategy, rngs[b])
            seqs[b].append(grammars[b].push(col, mmax))
    return [Sample(TokenSequence(s, edge_types(s, model.shortened)), truncated=not g.done)
            for s, g in zip(seqs, grammars)]


def sample(model, condition=None, seed=0, strategy=None, elements=None):
    """Single-sequence convenience wrapper over the batched samplers."""
    conds = None if condition is None else [condition]
    if elements is not None:
        return sample_edges(model, [elements], conds, seed, strategy)[0]
    return sample_elements(model, 1, conds, seed, strategy)[0]
