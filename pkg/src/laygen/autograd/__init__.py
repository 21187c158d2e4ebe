"""Minimal numpy tensor library with reverse-mode autodiff and Adam."""
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .optim import AdamState, adam_step
from .tensor import (Tape, Tensor, add, broadcast_to, concat, cross_entropy, dropout, embedding, exp,
                     gather_rows, gelu, getitem, layer_norm, log, log_softmax, masked_fill, matmul, mean,
                     mul, neg, reshape, softmax, swapaxes, transpose, tsum)

__all__ = [
    "AdamState", "Tape", "Tensor", "adam_step", "add", "broadcast_to", "concat", "cross_entropy", "dropout",
    "embedding", "exp", "gather_rows", "gelu", "getitem", "grad_check", "layer_norm", "load_checkpoint", "log",
    "log_softmax", "masked_fill", "matmul", "mean", "mul", "neg", "reshape", "save_checkpoint", "softmax",
    "swapaxes", "transpose", "tsum",
]
