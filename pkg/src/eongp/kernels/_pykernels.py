"""Pure-Python versions of the compiled kernels.

Used when the extension is not built, or when ``EONGP_KERNELS=python``.
"""

import math

import numpy as np


def biquad(x, b0, b1, b2, a1, a2, z1=0.0, z2=0.0):
    """Direct form II transposed second-order section.

    Returns the filtered signal and the final state ``(z1, z2)``.
    """
    out = np.empty(len(x), dtype=np.float64)
    for i, xi in enumerate(np.asarray(x, dtype=np.float64).tolist()):
        yi = b0 * xi + z1
        z1 = b1 * xi - a1 * yi + z2
        z2 = b2 * xi - a2 * yi
        out[i] = yi
    return out, z1, z2


def levenshtein(ref, hyp):
    """Token-level edit distance between two integer sequences."""
    ref = list(ref)
    hyp = list(hyp)
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        cur = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (r != h))
        prev = cur
    return prev[-1]


def goertzel_power(x, frequency, sample_rate):
    """Squared magnitude of the DTFT of ``x`` at ``frequency`` (any real frequency)."""
    coeff = 2.0 * math.cos(2.0 * math.pi * frequency / sample_rate)
    s1 = s2 = 0.0
    for xi in np.asarray(x, dtype=np.float64).tolist():
        s1, s2 = xi + coeff * s1 - s2, s1
    return s1 * s1 + s2 * s2 - coeff * s1 * s2
