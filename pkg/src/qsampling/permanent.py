"""Matrix permanents.

Two independent routes are provided: :func:`permanent_naive` sums over all
``n!`` permutations and serves as the oracle, :func:`permanent_fast` is the
Ryser inclusion-exclusion formula walked in Gray-code order::

    per(A) = (-1)^n * sum_{S subset of cols} (-1)^|S| * prod_i sum_{j in S} a_ij

Consecutive Gray-code subsets differ by one column, so each step updates
the ``n`` row sums in O(n).  The ``2^n - 1`` non-empty subsets can be cut
into contiguous segments that are evaluated independently and summed in
segment order; that is how the threaded path works.
"""

from __future__ import annotations

import functools
import itertools
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DimensionError, SizeError
from .matrices import as_matrix

NAIVE_MAX_N = 10
FAST_MAX_N = 30
THREADS_ENV = "QSAMPLING_THREADS"

try:  # optional JIT for the scalar kernel
    import numba as _numba
except ImportError:  # pragma: no cover - exercised only without numba
    _numba = None


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _square(a) -> np.ndarray:
    return as_matrix(a, square=True)


@functools.lru_cache(maxsize=None)
def _permutations(n: int) -> np.ndarray:
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    perms.setflags(write=False)
    return perms


def permanent_naive(a) -> complex:
    """Permanent by direct summation over the symmetric group, ``O(n! n)``."""
    a = _square(a)
    n = a.shape[0]
    if n > NAIVE_MAX_N:
        raise SizeError(f"naive permanent is limited to n <= {NAIVE_MAX_N}, got {n}")
    if n == 0:
        return 1 + 0j
    rows = np.arange(n)
    if n <= 8:
        return complex(np.prod(a[rows, _permutations(n)], axis=1).sum())
    total = 0j
    perms = itertools.permutations(range(n))
    while chunk := list(itertools.islice(perms, 1 << 16)):
        total += np.prod(a[rows, np.array(chunk, dtype=np.intp)], axis=1).sum()
    return complex(total)


def _gray(k: int) -> int:
    return k ^ (k >> 1)


def _segment_numpy(mats: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Signed Ryser partial sum over Gray indices ``start..stop-1`` for a batch."""
    k_batch, n, _ = mats.shape
    g = _gray(start)
    cols = [j for j in range(n) if g >> j & 1]
    rowsum = mats[:, :, cols].sum(axis=2)
    sign = -1.0 if len(cols) & 1 else 1.0
    acc = sign * np.prod(rowsum, axis=1)
    for k in range(start + 1, stop):
        j = (k & -k).bit_length() - 1
        if _gray(k) >> j & 1:
            rowsum += mats[:, :, j]
        else:
            rowsum -= mats[:, :, j]
        sign = -sign
        acc += sign * np.prod(rowsum, axis=1)
    return acc


if _numba is not None:

    @_numba.njit(nogil=True, cache=False)
    def _segment_jit(a, start, stop):  # pragma: no cover - compiled
        n = a.shape[0]
        rowsum = np.zeros(n, dtype=np.complex128)
        g = start ^ (start >> 1)
        count = 0
        for j in range(n):
            if (g >> j) & 1:
                count += 1
                for i in range(n):
                    rowsum[i] += a[i, j]
        sign = -1.0 if count & 1 else 1.0
        prod = 1.0 + 0.0j
        for i in range(n):
            prod *= rowsum[i]
        acc = sign * prod
        for k in range(start + 1, stop):
            j = 0
            while not (k >> j) & 1:
                j += 1
            gk = k ^ (k >> 1)
            if (gk >> j) & 1:
                for i in range(n):
                    rowsum[i] += a[i, j]
            else:
                for i in range(n):
                    rowsum[i] -= a[i, j]
            sign = -sign
            prod = 1.0 + 0.0j
            for i in range(n):
                prod *= rowsum[i]
            acc += sign * prod
        return acc

else:
    _segment_jit = None


def has_jit() -> bool:
    return _segment_jit is not None


def gray_segments(n: int, parts: int) -> list[tuple[int, int]]:
    """Split Gray indices ``1 .. 2^n - 1`` into ``parts`` contiguous ranges."""
    total = (1 << n) - 1
    parts = max(1, min(parts, total))
    bounds = [1 + (total * p) // parts for p in range(parts + 1)]
    return [(bounds[p], bounds[p + 1]) for p in range(parts) if bounds[p] < bounds[p + 1]]


def permanent_fast(a, *, threads: int | None = None, segments: int | None = None,
                   backend: str = "auto") -> complex:
    """Ryser/Gray-code permanent in O(2^n n) time.

    ``segments`` controls how the subset space is split (default: one
    segment per thread); ``threads`` defaults to ``$QSAMPLING_THREADS`` or 1.
    ``backend`` is ``"auto"``, ``"jit"`` (numba) or ``"numpy"``.  The
    reduction always adds segment results in segment order, so the value
    does not depend on the thread count.
    """
    a = _square(a)
    n = a.shape[0]
    if n == 0:
        return 1 + 0j
    if n > FAST_MAX_N:
        raise SizeError(f"fast permanent is limited to n <= {FAST_MAX_N}, got {n}")
    threads = default_threads() if threads is None else max(1, int(threads))
    segs = gray_segments(n, segments or threads)
    if backend == "auto":
        backend = "jit" if has_jit() else "numpy"
    if backend == "jit":
        if not has_jit():
            raise RuntimeError("numba is not installed; use backend='numpy'")
        work = lambda seg: complex(_segment_jit(a, seg[0], seg[1]))  # noqa: E731
    elif backend == "numpy":
        batch = a[None, :, :]
        work = lambda seg: complex(_segment_numpy(batch, seg[0], seg[1])[0])  # noqa: E731
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if threads > 1 and len(segs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, segs))
    else:
        parts = [work(s) for s in segs]
    total = 0j
    for p in parts:
        total += p
    return -total if n & 1 else total


def permanents_batch(mats) -> np.ndarray:
    """Permanents of a stack of ``n x n`` matrices, shape ``(K, n, n)``.

    Vectorised over the stack with the same Gray-code walk; keeps a real
    dtype for real input.
    """
    mats = np.asarray(mats)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise DimensionError(f"expected a (K, n, n) stack, got shape {mats.shape}")
    k, n, _ = mats.shape
    dtype = np.result_type(mats.dtype, np.float64)
    if n == 0:
        return np.ones(k, dtype=dtype)
    if n > FAST_MAX_N:
        raise SizeError(f"fast permanent is limited to n <= {FAST_MAX_N}, got {n}")
    acc = _segment_numpy(mats.astype(dtype, copy=False), 1, 1 << n)
    return -acc if n & 1 else acc


def permanent_magnitude_squared(a, **kwargs) -> float:
    """``|per(A)|^2``; never negative."""
    p = permanent_fast(a, **kwargs)
    return float(p.real * p.real + p.imag * p.imag)


def permanent(a, **kwargs) -> complex:
    return permanent_fast(a, **kwargs)
