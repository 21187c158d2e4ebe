"""Pointer model that emits edge sequences over a given element list.

An element-embedding network reads the element tokens and pools one vector
per element. The pointer decoder then scores every step against those
vectors plus learned STOP and group-end sentinels.
"""
from __future__ import annotations

import numpy as np

from ..autograd import broadcast_to, concat, embedding, gather_rows, masked_fill, mean, dropout
from ..codec import TokenSequence, Vocab, edge_types
from ..layout import EdgeKind
from .data import EdgeExample, make_edge_batch
from .nn import (NEG_INF, Params, causal_mask, condition_encoder, condition_encoder_params, decoder_block,
                 decoder_block_params, key_mask, linear, norm, token_embedding, token_embedding_params)

# rows of the sentinel table
STOP_ROW, END_ROW, START_ROW = 0, 1, 2
N_EDGE_TYPES = 4


class EdgeModel:
    def __init__(self, cfg, seed=0, dtype=np.float32):
        self.cfg = cfg
        self.vocab = Vocab(cfg.n_types)
        self.kind = EdgeKind(cfg.edge_kind or "hadj")
        self.shortened = self.kind.shortened
        d = cfg.embed_dim
        P = self.params = Params(seed, dtype)
        if cfg.conditional:
            condition_encoder_params(P, cfg)
        token_embedding_params(P, "g.emb", cfg.vocab_size, cfg.max_elem_len, cfg.arity, d)
        for l in range(cfg.n_layers_encoder):
            decoder_block_params(P, f"g.{l}", d, cross=cfg.conditional)
        P.norm("g.ln", d)
        P.linear("g.head", d, d)
        P.normal("sent", (3, d))
        P.normal("ptr.pos", (cfg.max_seq_len + 1, d))
        P.normal("ptr.typ", (N_EDGE_TYPES, d))
        for l in range(cfg.n_layers_decoder):
            decoder_block_params(P, f"ptr.{l}", d, cross=True)
        P.norm("ptr.ln", d)
        P.linear("ptr.head", d, d)

    def embed_elements(self, elems, cond=None, training=False, rng=None):
        """(B, Mmax + 3, d) table: element embeddings, then STOP, END, START."""
        cfg, P = self.cfg, self.params
        memory = mem_mask = None
        if cfg.conditional:
            if cond is None:
                raise ValueError("conditional model needs a condition sequence")
            memory, mem_mask = condition_encoder(P, cfg, cond, training, rng)
        x = token_embedding(P, "g.emb", elems["tok"], elems["pos"], elems["typ"], cfg.dropout_p, training, rng)
        mask = key_mask(elems["valid"])
        for l in range(cfg.n_layers_encoder):
            x = decoder_block(P, f"g.{l}", x, cfg.n_heads, mask, memory, mem_mask)
        B, _, d = x.shape
        pooled = mean(x.reshape(B, elems["mmax"], cfg.arity, d), axis=2)
        n = linear(P, "g.head", norm(P, "g.ln", pooled))
        sent = broadcast_to(P["sent"].reshape(1, 3, d), (B, 3, d))
        return concat([n, sent], axis=1)

    def pointer_logits(self, table, elem_valid, idx, pos, typ, training=False, rng=None):
        """(B, S, Mmax + 2) scores of each step's query against elements and
        the two sentinels. Padding columns are blocked."""
        cfg, P = self.cfg, self.params
        mmax = elem_valid.shape[1]
        h = gather_rows(table, idx) + embedding(P["ptr.pos"], pos) + embedding(P["ptr.typ"], typ)
        h = dropout(h, cfg.dropout_p, training, rng)
        support = table[:, :mmax + 2]
        valid = np.concatenate([elem_valid, np.ones((elem_valid.shape[0], 2), dtype=bool)], axis=1)
        mem_mask = key_mask(valid)
        mask = causal_mask(h.shape[1])
        for l in range(cfg.n_layers_decoder):
            h = decoder_block(P, f"ptr.{l}", h, cfg.n_heads, mask, support, mem_mask)
        q = linear(P, "ptr.head", norm(P, "ptr.ln", h))
        scores = q @ support.transpose(0, 2, 1)
        return masked_fill(scores, ~valid[:, None, :], NEG_INF)

    def logits(self, batch, training=False, rng=None):
        table = self.embed_elements(batch["elems"], batch.get("cond"), training, rng)
        return self.pointer_logits(table, batch["elems"]["elem_valid"], batch["idx"], batch["pos"],
                                   batch["typ"], training, rng)


def edge_forward(model, element_tuples, edge_tokens, condition=None):
    """Pointer logits (len(edge_tokens), M + 2); columns are the M elements,
    then STOP and group end. Row i scores token i given the tokens before it."""
    tokens = tuple(edge_tokens.values if isinstance(edge_tokens, TokenSequence) else edge_tokens)
    tuples = tuple(tuple(t) for t in element_tuples)
    m = len(tuples)
    cond = ctyp = None
    if condition is not None:
        cond = tuple(condition.values if isinstance(condition, TokenSequence) else condition)
        ctyp = tuple(condition.types) if isinstance(condition, TokenSequence) else \
            tuple(i % model.cfg.cond_arity for i in range(len(cond)))
    ex = EdgeExample(tuples, tokens + (-1,), cond, ctyp)
    batch = make_edge_batch([ex], model.vocab, model.cfg.arity, model.shortened, model.cfg.max_seq_len + 1)
    s = len(tokens)
    for k in ("idx", "pos", "typ"):
        batch[k] = batch[k][:, :s]
    logits = model.logits(batch).data[0]
    mmax = batch["elems"]["mmax"]
    return logits[:, list(range(m)) + [mmax, mmax + 1]]
