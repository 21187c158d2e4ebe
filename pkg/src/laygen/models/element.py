"""Autoregressive model over flattened element-constraint tokens."""
from __future__ import annotations

import numpy as np

from ..codec import TokenSequence, Vocab
from ..errors import CapacityError
from .data import ElementExample, make_element_batch
from .nn import (Params, causal_mask, condition_encoder, condition_encoder_params, decoder_block,
                 decoder_block_params, linear, norm, token_embedding, token_embedding_params)


class ElementModel:
    def __init__(self, cfg, seed=0, dtype=np.float32):
        self.cfg = cfg
        self.vocab = Vocab(cfg.n_types)
        d = cfg.embed_dim
        P = self.params = Params(seed, dtype)
        token_embedding_params(P, "emb", cfg.vocab_size, cfg.max_seq_len, cfg.arity, d)
        if cfg.conditional:
            condition_encoder_params(P, cfg)
        for l in range(cfg.n_layers_decoder):
            decoder_block_params(P, f"dec.{l}", d, cross=cfg.conditional)
        P.norm("ln_f", d)
        P.linear("head", d, cfg.vocab_size)

    def logits(self, batch, training=False, rng=None):
        """(B, S, vocab) logits for a batch from :func:`make_element_batch`."""
        cfg, P = self.cfg, self.params
        if batch["inp"].shape[1] > cfg.max_seq_len:
            raise CapacityError(f"sequence of {batch['inp'].shape[1]} tokens exceeds {cfg.max_seq_len}")
        memory = mem_mask = None
        if cfg.conditional:
            if batch.get("cond") is None:
                raise ValueError("conditional model needs a condition sequence")
            memory, mem_mask = condition_encoder(P, cfg, batch["cond"], training, rng)
        h = token_embedding(P, "emb", batch["inp"], batch["pos"], batch["typ"], cfg.dropout_p, training, rng)
        mask = causal_mask(h.shape[1])
        for l in range(cfg.n_layers_decoder):
            h = decoder_block(P, f"dec.{l}", h, cfg.n_heads, mask, memory, mem_mask)
        return linear(P, "head", norm(P, "ln_f", h))


def _values(seq):
    return tuple(seq.values if isinstance(seq, TokenSequence) else seq)


def element_forward(model, seq, condition=None):
    """Logits (len(seq), vocab); row i scores token i given tokens before it."""
    values = _values(seq)
    if len(values) > model.cfg.max_seq_len:
        raise CapacityError(f"sequence of {len(values)} tokens exceeds {model.cfg.max_seq_len}")
    cond = ctyp = None
    if condition is not None:
        cond = _values(condition)
        ctyp = tuple(condition.types) if isinstance(condition, TokenSequence) else None
        if ctyp is None:
            ctyp = tuple(i % model.cfg.cond_arity for i in range(len(cond)))
    ex = ElementExample(values + (model.vocab.stop,), cond, ctyp)
    batch = make_element_batch([ex], model.vocab, model.cfg.arity, model.cfg.max_seq_len + 1)
    batch = {k: (v[:, :len(values)] if k in ("inp", "pos", "typ") else v) for k, v in batch.items()}
    return model.logits(batch).data[0]
