"""Finite-difference verification of tape gradients."""
import numpy as np

from ..errors import NumericError
from .tensor import Tape


def grad_check(f, inputs, eps=1e-5, max_coords=None, seed=0):
    """Largest ``|g_ad - g_fd| / max(1, |g_fd|)`` over checked coordinates.

    ``f`` takes no arguments and returns a scalar Tensor computed from the
    float64 tensors in ``inputs``. With ``max_coords`` set, that many
    coordinates per input are drawn at random instead of checking all.
    """
    if not isinstance(inputs, (list, tuple)):
        inputs = [inputs]
    for x in inputs:
        if x.dtype != np.float64:
            raise TypeError("grad_check needs float64 inputs")
        x.data = np.ascontiguousarray(x.data)
        x.requires_grad = True
        x.grad = None
    with Tape() as tape:
        y = f()
    if not np.isfinite(y.data).all():
        raise NumericError("non-finite function value")
    tape.backward(y)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x in inputs:
        g_ad = np.zeros_like(x.data) if x.grad is None else x.grad
        flat = x.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        for c in coords:
            old = flat[c]
            flat[c] = old + eps
            fp = float(f().data)
            flat[c] = old - eps
            fm = float(f().data)
            flat[c] = old
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise NumericError(f"non-finite value while perturbing coordinate {c}")
            g_fd = (fp - fm) / (2 * eps)
            err = abs(g_ad.reshape(-1)[c] - g_fd) / max(1.0, abs(g_fd))
            worst = max(worst, err)
    return worst
