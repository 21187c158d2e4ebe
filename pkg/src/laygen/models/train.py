"""Teacher-forced training loop shared by the element and edge models."""
from __future__ import annotations

import csv
import math

import numpy as np

from ..autograd import AdamState, Tape, adam_step, cross_entropy, load_checkpoint, save_checkpoint
from ..errors import GenError, NumericError
from .config import ModelConfig
from .data import make_edge_batch, make_element_batch
from .edge import EdgeModel
from .element import ElementModel


def make_batch(model, examples):
    if isinstance(model, EdgeModel):
        return make_edge_batch(examples, model.vocab, model.cfg.arity, model.shortened, model.cfg.max_seq_len)
    return make_element_batch(examples, model.vocab, model.cfg.arity, model.cfg.max_seq_len)


def batch_nll(model, examples, batch_size=64):
    """Mean teacher-forced NLL per target token, dropout off."""
    total = count = 0.0
    for s in range(0, len(examples), batch_size):
        batch = make_batch(model, examples[s:s + batch_size])
        n = float(batch["mask"].sum())
        total += cross_entropy(model.logits(batch), batch["tgt"], batch["mask"]).item() * n
        count += n
    return total / max(count, 1.0)


def train(model, examples, steps=None, epochs=None, batch_size=32, seed=0, lr=1e-4, warmup_steps=500,
          loss_log=None, adam=None, callback=None):
    """Train in place with Adam. Runs ``steps`` updates, or ``epochs`` passes
    when ``steps`` is None. Returns the loss curve as (step, lr, nll) rows and
    optionally writes it as CSV to ``loss_log``. A ``callback(step, nll)``
    returning True stops training early."""
    examples = list(examples)
    if not examples:
        raise GenError("training set is empty")
    per_epoch = math.ceil(len(examples) / batch_size)
    if steps is None:
        steps = per_epoch * (epochs if epochs is not None else 1)
    rng = np.random.default_rng(seed)
    drop_rng = np.random.default_rng([seed, 1])
    adam = adam or AdamState(lr=lr, warmup_steps=warmup_steps)
    P = model.params
    history = []
    order = []
    for step in range(steps):
        if not order:
            order = list(rng.permutation(len(examples)))
        idx, order = order[:batch_size], order[batch_size:]
        batch = make_batch(model, [examples[i] for i in idx])
        P.zero_grad()
        with Tape() as tape:
            loss = cross_entropy(model.logits(batch, training=True, rng=drop_rng), batch["tgt"], batch["mask"])
        value = loss.item()
        if not math.isfinite(value):
            worst = max(float(np.abs(a).max()) for a in P.arrays().values())
            raise NumericError(f"non-finite loss {value} at step {step} (lr {adam.effective_lr(adam.step + 1):.3g}, "
                               f"max |param| {worst:.3g})")
        tape.backward(loss)
        cur_lr = adam.effective_lr(adam.step + 1)
        adam_step(P.arrays(), P.grads(), adam)
        history.append((step, cur_lr, value))
        if callback is not None and callback(step, value):
            break
    P.zero_grad()
    model.adam = adam
    if loss_log is not None:
        with open(loss_log, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "lr", "nll"])
            w.writerows(history)
    return history


def save_model(path, model, seed=None):
    meta = {"config": model.cfg.to_dict()}
    save_checkpoint(path, model.params.arrays(), meta, getattr(model, "adam", None), seed)


def load_model(path):
    params, meta, adam, _ = load_checkpoint(path)
    cfg = ModelConfig.from_dict(meta["config"])
    cls = EdgeModel if cfg.kind == "edge" else ElementModel
    dtype = next(iter(params.values())).dtype if params else np.float32
    model = cls(cfg, dtype=dtype)
    model.params.load(params)
    model.adam = adam
    return model
