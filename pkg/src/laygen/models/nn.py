"""Parameter storage and transformer blocks built on the autograd core."""
from __future__ import annotations

import math

import numpy as np

from ..autograd import Tensor, dropout, embedding, gelu, layer_norm, masked_fill, softmax

NEG_INF = -1e9


class Params:
    """Flat ``name -> Tensor`` store with GPT-2 style initialisation."""

    def __init__(self, seed=0, dtype=np.float32):
        self.rng = np.random.default_rng(seed)
        self.dtype = np.dtype(dtype)
        self.tensors = {}

    def __getitem__(self, name):
        return self.tensors[name]

    def __contains__(self, name):
        return name in self.tensors

    def _add(self, name, arr):
        if name in self.tensors:
            raise KeyError(f"duplicate parameter {name}")
        self.tensors[name] = Tensor(arr.astype(self.dtype), requires_grad=True)

    def normal(self, name, shape, std=0.02):
        self._add(name, self.rng.normal(0.0, std, size=shape))

    def zeros(self, name, shape):
        self._add(name, np.zeros(shape))

    def ones(self, name, shape):
        self._add(name, np.ones(shape))

    def linear(self, name, d_in, d_out):
        self.normal(name + ".w", (d_in, d_out))
        self.zeros(name + ".b", (d_out,))

    def norm(self, name, d):
        self.ones(name + ".g", (d,))
        self.zeros(name + ".b", (d,))

    def arrays(self):
        return {k: t.data for k, t in self.tensors.items()}

    def grads(self):
        return {k: t.grad for k, t in self.tensors.items()}

    def zero_grad(self):
        for t in self.tensors.values():
            t.grad = None

    def load(self, arrays):
        missing = set(self.tensors) - set(arrays)
        if missing:
            raise KeyError(f"checkpoint lacks parameters: {sorted(missing)[:5]}")
        for k, t in self.tensors.items():
            if arrays[k].shape != t.shape:
                raise ValueError(f"{k}: checkpoint shape {arrays[k].shape} != {t.shape}")
            t.data = np.array(arrays[k], dtype=self.dtype)

    def astype(self, dtype):
        self.dtype = np.dtype(dtype)
        for t in self.tensors.values():
            t.data = t.data.astype(self.dtype)

    def count(self):
        return sum(t.data.size for t in self.tensors.values())


def linear(P, name, x):
    return x @ P[name + ".w"] + P[name + ".b"]


def norm(P, name, x):
    return layer_norm(x, P[name + ".g"], P[name + ".b"])


def causal_mask(n):
    """Boolean (1, 1, n, n) mask, True where attention is blocked."""
    return np.triu(np.ones((n, n), dtype=bool), 1)[None, None]


def key_mask(valid):
    """(B, S) validity -> (B, 1, 1, S) blocked mask."""
    return ~np.asarray(valid, dtype=bool)[:, None, None, :]


# --- attention ----------------------------------------------------------------

def attention_params(P, name, d):
    for part in ("q", "k", "v", "o"):
        P.linear(f"{name}.{part}", d, d)


def attention(P, name, xq, xkv, n_heads, mask=None):
    B, Sq, d = xq.shape
    Sk = xkv.shape[1]
    dh = d // n_heads
    q = linear(P, name + ".q", xq).reshape(B, Sq, n_heads, dh).transpose(0, 2, 1, 3)
    k = linear(P, name + ".k", xkv).reshape(B, Sk, n_heads, dh).transpose(0, 2, 3, 1)
    v = linear(P, name + ".v", xkv).reshape(B, Sk, n_heads, dh).transpose(0, 2, 1, 3)
    s = (q @ k) * (1.0 / math.sqrt(dh))
    if mask is not None:
        s = masked_fill(s, mask, NEG_INF)
    o = (softmax(s, -1) @ v).transpose(0, 2, 1, 3).reshape(B, Sq, d)
    return linear(P, name + ".o", o)


def mlp_params(P, name, d):
    P.linear(name + ".fc", d, 4 * d)
    P.linear(name + ".proj", 4 * d, d)


def mlp(P, name, x):
    return linear(P, name + ".proj", gelu(linear(P, name + ".fc", x)))


# --- blocks -------------------------------------------------------------------

def decoder_block_params(P, name, d, cross=False):
    P.norm(name + ".ln0", d)
    attention_params(P, name + ".self", d)
    P.norm(name + ".ln1", d)
    if cross:
        attention_params(P, name + ".cross", d)
        P.norm(name + ".ln2", d)
    mlp_params(P, name + ".mlp", d)


def decoder_block(P, name, h, n_heads, self_mask=None, memory=None, memory_mask=None):
    """n = LN(h); a = LN(n + SelfAttn(n)); b = LN(a + CrossAttn(a, memory));
    out = b + MLP(b). The cross-attention step is skipped without memory."""
    n = norm(P, name + ".ln0", h)
    a = norm(P, name + ".ln1", n + attention(P, name + ".self", n, n, n_heads, self_mask))
    b = a
    if memory is not None:
        b = norm(P, name + ".ln2", a + attention(P, name + ".cross", a, memory, n_heads, memory_mask))
    return b + mlp(P, name + ".mlp", b)


def encoder_block_params(P, name, d):
    P.norm(name + ".ln0", d)
    attention_params(P, name + ".attn", d)
    P.norm(name + ".ln1", d)
    mlp_params(P, name + ".mlp", d)


def encoder_block(P, name, h, n_heads, mask=None):
    """GPT-2 pre-norm block without a causal mask."""
    n = norm(P, name + ".ln0", h)
    h = h + attention(P, name + ".attn", n, n, n_heads, mask)
    return h + mlp(P, name + ".mlp", norm(P, name + ".ln1", h))


# --- token embeddings -----------------------------------------------------------------

def token_embedding_params(P, name, vocab, max_len, n_types, d):
    P.normal(name + ".val", (vocab, d))
    P.normal(name + ".pos", (max_len + 1, d))
    P.normal(name + ".typ", (n_types, d))


def token_embedding(P, name, values, positions, types, p=0.0, training=False, rng=None):
    """Sum of value, position and type embeddings followed by dropout."""
    x = (embedding(P[name + ".val"], values) + embedding(P[name + ".pos"], positions)
         + embedding(P[name + ".typ"], types))
    return dropout(x, p, training, rng)


def condition_encoder_params(P, cfg):
    d = cfg.embed_dim
    token_embedding_params(P, "cenc.emb", cfg.vocab_size, cfg.max_cond_len, cfg.cond_arity, d)
    for l in range(cfg.n_layers_condition_encoder):
        encoder_block_params(P, f"cenc.{l}", d)
    P.norm("cenc.ln", d)


def condition_encoder(P, cfg, cond, training=False, rng=None):
    """Unmasked encoder over the condition sequence. Returns (memory, blocked_mask)."""
    x = token_embedding(P, "cenc.emb", cond["tok"], cond["pos"], cond["typ"], cfg.dropout_p, training, rng)
    mask = key_mask(cond["valid"])
    for l in range(cfg.n_layers_condition_encoder):
        x = encoder_block(P, f"cenc.{l}", x, cfg.n_heads, mask)
    return norm(P, "cenc.ln", x), mask
