"""Independent reference implementations used only by the tests.

Each one is written the slow, obvious way so it shares no code path with
the package.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


def brute_force_edit_distance(ref, hyp) -> int:
    """Minimum cost over every alignment path, enumerated without memoization."""
    ref, hyp = tuple(ref), tuple(hyp)

    def walk(i, j):
        if i == len(ref) and j == len(hyp):
            return 0
        options = []
        if i < len(ref) and j < len(hyp):
            options.append((ref[i] != hyp[j]) + walk(i + 1, j + 1))
        if i < len(ref):
            options.append(1 + walk(i + 1, j))
        if j < len(hyp):
            options.append(1 + walk(i, j + 1))
        return min(options)

    return walk(0, 0)


@lru_cache(maxsize=None)
def all_sequences(alphabet: tuple, max_len: int) -> tuple:
    out = []
    for n in range(max_len + 1):
        out.extend(itertools.product(alphabet, repeat=n))
    return tuple(out)


def pearson_indicator_mcc(true, pred, positive) -> float:
    a = np.array([t == positive for t in true], dtype=float)
    b = np.array([p == positive for p in pred], dtype=float)
    if a.std() == 0 or b.std() == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def nmi_from_labels(true, pred) -> float:
    """Mutual information from raw label lists, normalized by sqrt(H(T) H(P))."""
    n = len(true)
    pt, pp, joint = {}, {}, {}
    for t, p in zip(true, pred):
        pt[t] = pt.get(t, 0) + 1
        pp[p] = pp.get(p, 0) + 1
        joint[(t, p)] = joint.get((t, p), 0) + 1
    mi = sum(c / n * math.log((c / n) / (pt[t] / n * pp[p] / n)) for (t, p), c in joint.items())
    ht = -sum(c / n * math.log(c / n) for c in pt.values())
    hp = -sum(c / n * math.log(c / n) for c in pp.values())
    if ht == 0 or hp == 0:
        return 0.0
    return mi / math.sqrt(ht * hp)


def dft_bin_power(x, k) -> float:
    n = len(x)
    t = np.arange(n)
    return float(abs(np.sum(x * np.exp(-2j * np.pi * k * t / n))) ** 2)


def direct_form_filter(b, a, x):
    """y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2], zero initial state."""
    y = np.zeros(len(x))
    for n in range(len(x)):
        acc = b[0] * x[n]
        if n >= 1:
            acc += b[1] * x[n - 1] - a[1] * y[n - 1]
        if n >= 2:
            acc += b[2] * x[n - 2] - a[2] * y[n - 2]
        y[n] = acc
    return y


def numeric_gradient(f, params, eps=1e-6):
    """Central differences over every entry of every array in ``params`` (modified in place, then restored)."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + eps
            up = f()
            p[idx] = old - eps
            down = f()
            p[idx] = old
            g[idx] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def spectral_peak_hz(x, sr) -> float:
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    return float(np.argmax(spec) * sr / len(x))


def edit_distance_table(alphabet: tuple, max_len: int):
    """All-pairs edit distance by breadth-first search over the single-edit graph.

    Nodes are every sequence up to ``max_len``; edges are one insertion,
    deletion or substitution. Some optimal edit path (deletions, then
    substitutions, then insertions) never exceeds the longer endpoint, so
    restricting the graph to ``max_len`` keeps distances exact.
    Returns (sequences, index, dist) with dist[i, j] the distance.
    """
    seqs = all_sequences(alphabet, max_len)
    index = {s: i for i, s in enumerate(seqs)}
    n = len(seqs)
    adj = np.zeros((n, n), dtype=bool)
    for s, i in index.items():
        for k in range(len(s)):
            adj[i, index[s[:k] + s[k + 1 :]]] = True
            for a in alphabet:
                if a != s[k]:
                    adj[i, index[s[:k] + (a,) + s[k + 1 :]]] = True
    adj |= adj.T  # insertions are reversed deletions
    dist = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    frontier = np.eye(n, dtype=bool)
    reached = frontier.copy()
    step = 0
    while not reached.all():
        step += 1
        frontier = ((frontier.astype(np.float32) @ adj.astype(np.float32)) > 0) & ~reached
        dist[frontier] = step
        reached |= frontier
    return seqs, index, dist
