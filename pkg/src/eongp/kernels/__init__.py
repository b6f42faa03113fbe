"""Hot loops with a compiled backend and a pure-Python fallback.

The compiled extension ``_ckernels`` is preferred. Set the environment
variable ``EONGP_KERNELS=python`` to force the fallback.

Both backends take contiguous float64 / int64 arrays; the wrappers here do
the conversion so callers can pass any array-like.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("EONGP_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def backends():
    """Available kernel modules keyed by name, for tests and benchmarks."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found


def biquad(x, b0, b1, b2, a1, a2, z1=0.0, z2=0.0):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _impl.biquad(x, b0, b1, b2, a1, a2, z1, z2)


def levenshtein(ref, hyp):
    ref = np.ascontiguousarray(ref, dtype=np.int64)
    hyp = np.ascontiguousarray(hyp, dtype=np.int64)
    return _impl.levenshtein(ref, hyp)


def goertzel_power(x, frequency, sample_rate):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _impl.goertzel_power(x, float(frequency), float(sample_rate))
