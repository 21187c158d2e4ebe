"""Binary checkpoint container.

Layout (all little-endian)::

    b"LGCK"            magic
    u32                format version (1)
    u32                header length n
    n bytes            UTF-8 JSON header
    ...                raw array payloads, back to back

The header holds ``meta`` (free-form JSON, e.g. the model config), ``seed``,
optional Adam scalars, and an ``arrays`` list of ``{name, dtype, shape,
offset, nbytes}`` records whose offsets are relative to the payload start.
Adam moments are stored as arrays named ``adam.m/<param>`` and ``adam.v/<param>``.
"""
import json
import struct

import numpy as np

from ..errors import LoadError
from .optim import AdamState

MAGIC = b"LGCK"


def save_checkpoint(path, params, meta=None, adam=None, seed=None):
    arrays = dict(params)
    header = {"meta": meta or {}, "seed": seed, "arrays": []}
    if adam is not None:
        header["adam"] = {k: getattr(adam, k) for k in ("lr", "beta1", "beta2", "eps", "warmup_steps", "step")}
        for name in adam.m:
            arrays["adam.m/" + name] = adam.m[name]
            arrays["adam.v/" + name] = adam.v[name]
    blobs = []
    off = 0
    for name in sorted(arrays):
        a = np.asarray(arrays[name])
        le = a.astype(a.dtype.newbyteorder("<"), copy=False)
        raw = np.ascontiguousarray(le).tobytes()
        header["arrays"].append({"name": name, "dtype": le.dtype.str, "shape": list(a.shape),
                                 "offset": off, "nbytes": len(raw)})
        blobs.append(raw)
        off += len(raw)
    hdr = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", 1, len(hdr)) + hdr)
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path):
    """Return ``(params, meta, adam_state_or_None, seed)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise LoadError(f"{path}: not a checkpoint file")
    version, n = struct.unpack_from("<II", data, 4)
    if version != 1:
        raise LoadError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(data[12:12 + n].decode())
    base = 12 + n
    arrays = {}
    for rec in header["arrays"]:
        a = np.frombuffer(data, dtype=np.dtype(rec["dtype"]), count=int(np.prod(rec["shape"], dtype=np.int64)),
                          offset=base + rec["offset"])
        arrays[rec["name"]] = a.reshape(rec["shape"]).astype(a.dtype.newbyteorder("="))
    adam = None
    if "adam" in header:
        adam = AdamState(**header["adam"])
        for name in list(arrays):
            if name.startswith("adam.m/"):
                adam.m[name[7:]] = arrays.pop(name)
            elif name.startswith("adam.v/"):
                adam.v[name[7:]] = arrays.pop(name)
    return arrays, header["meta"], adam, header["seed"]
