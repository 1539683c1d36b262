"""Seed splitting and discrete sampling helpers.

Every random stream in the package is derived from one non-negative master
seed through ``numpy.random.SeedSequence(seed, spawn_key=key)``.  The key is
a tuple of small integers naming the task (stream tag, chunk counter, trial
number, ...), so a stream depends only on the master seed and its key and
never on how many threads are used or in which order tasks run.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

# Stream tags used as the first spawn-key component.
STREAM_EVENTS = 0
STREAM_LOSS = 1
STREAM_INPUT = 2
STREAM_NOISE = 3
STREAM_WEIGHTS = 4
STREAM_SUPPORT = 5
STREAM_TRIALS = 6
STREAM_EMBED = 7

SAMPLE_CHUNK = 1 << 16
ALIAS_THRESHOLD = 10_000


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ParameterError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream ``key`` of master ``seed``."""
    seed = check_seed(seed)
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))
    )


class AliasTable:
    """Walker/Vose alias table for O(1) draws from a fixed discrete law."""

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=float)
        k = p.size
        scaled = p * (k / p.sum())
        self.prob = np.ones(k)
        self.alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = g
            scaled[g] = scaled[g] + scaled[s] - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding
        for i in small + large:
            self.prob[i] = 1.0
            self.alias[i] = i

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        column = rng.integers(0, self.prob.size, size=count)
        coin = rng.random(count)
        return np.where(coin < self.prob[column], column, self.alias[column])


def _inverse_cdf(cdf: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    u = rng.random(count) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, cdf.size - 1)


def draw_indices(probabilities, count: int, seed: int, stream: int = STREAM_EVENTS) -> np.ndarray:
    """Draw ``count`` i.i.d. indices from ``probabilities``.

    Draws come in fixed-size chunks; chunk ``c`` uses the stream
    ``(stream, c)``.  Tables with more than ``ALIAS_THRESHOLD`` entries use an
    alias table, smaller ones an inverse-CDF search.
    """
    if count < 0:
        raise ParameterError(f"count must be non-negative, got {count}")
    p = np.asarray(probabilities, dtype=float)
    if p.size == 0 or not p.sum() > 0:
        raise ParameterError("cannot sample from an empty or all-zero distribution")
    out = np.empty(count, dtype=np.int64)
    if p.size > ALIAS_THRESHOLD:
        table = AliasTable(p)
        sampler = table.draw
    else:
        cdf = np.cumsum(p)
        sampler = lambda rng, k: _inverse_cdf(cdf, rng, k)  # noqa: E731
    for chunk, start in enumerate(range(0, count, SAMPLE_CHUNK)):
        stop = min(start + SAMPLE_CHUNK, count)
        out[start:stop] = sampler(make_rng(seed, stream, chunk), stop - start)
    return out
