"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementations in ``_pykernels`` are used. Setting the environment
variable ``SSFOURIER_PURE=1`` forces the numpy fallback. Both backends return
bit-identical arrays.
"""

import os

import numpy as np

from . import _pykernels

_impl = _pykernels
if os.environ.get("SSFOURIER_PURE") != "1":
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND

# trajectories per work unit; fixed so results do not depend on worker count
CHUNK = 1 << 16


def available_backends():
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


def get_backend(name=None):
    if name is None:
        return _impl
    return available_backends()[name]


def stream_keys(seed, start, count):
    """Per-trajectory stream keys for trajectories start..start+count-1."""
    base = _pykernels.mix64(np.array([seed % (1 << 64)], dtype=np.uint64) + _pykernels.GOLDEN)[0]
    idx = np.arange(start, start + count, dtype=np.uint64)
    return _pykernels.mix64(base + (idx + np.uint64(1)) * _pykernels.GOLDEN)


def stopping_words(ratios, transl, weights, threshold, cap, with_words=True, backend=None):
    return get_backend(backend).stopping_words(ratios, transl, weights, threshold, cap, with_words)


def walk_stop(steps, cum, keys, t, backend=None):
    return get_backend(backend).walk_stop(steps, cum, keys, t)


def walk_window(steps, cum, keys, lo, hi, backend=None):
    return get_backend(backend).walk_window(steps, cum, keys, lo, hi)
