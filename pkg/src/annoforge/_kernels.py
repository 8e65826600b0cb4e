"""Hot numeric kernels: numba-jitted fast path with a pure-numpy fallback.

The backend is chosen once at import time.  Set ``ANNOFORGE_NUMBA=0`` (or
``false``/``off``) to force the numpy fallback; anything else uses numba
when it is importable.  Integer kernels (Hamming distances) are bit-exact
across backends; float kernels agree to normal floating-point tolerance.

``benchmarks/kernel_bench.py`` compares the two backends head to head.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("ANNOFORGE_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "false", "off", "no")

if _WANT_NUMBA:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ----------------------------------------------------------------------
# numpy reference implementations
# ----------------------------------------------------------------------

def _popcount_words(words: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(words)
    # numpy < 2.0: count set bits through a uint8 view
    bits = np.unpackbits(np.ascontiguousarray(words).view(np.uint8), axis=-1)
    return bits.reshape(*words.shape, 64).sum(axis=-1)


def hamming_distances_np(codes: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Hamming distance from ``query`` to every row of packed ``codes``."""
    x = np.bitwise_xor(codes, query[np.newaxis, :])
    return _popcount_words(x).sum(axis=1).astype(np.int64)


def hamming_pairs_np(codes: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Hamming distance for each (left[i], right[i]) row-index pair."""
    x = np.bitwise_xor(codes[left], codes[right])
    return _popcount_words(x).sum(axis=1).astype(np.int64)


def kmeans_assign_np(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per point.

    Returns (labels, squared distance to the assigned centroid).
    """
    # ||x-c||^2 = ||x||^2 - 2 x.c + ||c||^2, computed blockwise to bound memory
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)
    c_sq = np.einsum("kd,kd->k", centroids, centroids)
    block = max(1, min(n, 65536 // max(1, centroids.shape[0])) * 16)
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        chunk = points[lo:hi]
        d2 = chunk @ centroids.T
        d2 *= -2.0
        d2 += c_sq[np.newaxis, :]
        d2 += np.einsum("nd,nd->n", chunk, chunk)[:, np.newaxis]
        lab = np.argmin(d2, axis=1)
        labels[lo:hi] = lab
        dists[lo:hi] = np.maximum(d2[np.arange(hi - lo), lab], 0.0)
    return labels, dists


def min_sq_dist_np(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Squared distance from each point to its nearest centroid."""
    return kmeans_assign_np(points, centroids)[1]


# ----------------------------------------------------------------------
# numba fast path
# ----------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _popcount64(v):
        v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
        v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
        v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        return (v * np.uint64(0x0101010101010101)) >> np.uint64(56)

    @njit(cache=True)
    def _hamming_distances_nb(codes, query):
        n, w = codes.shape
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            acc = np.uint64(0)
            for j in range(w):
                acc += _popcount64(codes[i, j] ^ query[j])
            out[i] = np.int64(acc)
        return out

    @njit(cache=True)
    def _hamming_pairs_nb(codes, left, right):
        m = left.shape[0]
        w = codes.shape[1]
        out = np.empty(m, dtype=np.int64)
        for i in range(m):
            a = left[i]
            b = right[i]
            acc = np.uint64(0)
            for j in range(w):
                acc += _popcount64(codes[a, j] ^ codes[b, j])
            out[i] = np.int64(acc)
        return out

    @njit(cache=True)
    def _kmeans_assign_nb(points, centroids):
        n, d = points.shape
        k = centroids.shape[0]
        labels = np.empty(n, dtype=np.int64)
        dists = np.empty(n, dtype=np.float64)
        for i in range(n):
            best = -1
            best_d = np.inf
            for c in range(k):
                acc = 0.0
                for j in range(d):
                    diff = points[i, j] - centroids[c, j]
                    acc += diff * diff
                if acc < best_d:
                    best_d = acc
                    best = c
            labels[i] = best
            dists[i] = best_d
        return labels, dists

    def hamming_distances(codes: np.ndarray, query: np.ndarray) -> np.ndarray:
        return _hamming_distances_nb(codes, query)

    def hamming_pairs(codes: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        return _hamming_pairs_nb(codes, left, right)

    def kmeans_assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _kmeans_assign_nb(points, centroids)

    def min_sq_dist(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
        return _kmeans_assign_nb(points, centroids)[1]

else:
    hamming_distances = hamming_distances_np
    hamming_pairs = hamming_pairs_np
    kmeans_assign = kmeans_assign_np
    min_sq_dist = min_sq_dist_np
