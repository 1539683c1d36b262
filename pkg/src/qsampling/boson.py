"""BosonSampling: instances, exact output laws, samplers and physical variants.

Output probabilities for input occupation ``T`` and output occupation ``S``
are ``|per(U[S, T])|^2 / (prod s_i! * prod t_j!)``, where ``U[S, T]`` takes
row ``i`` of the network ``s_i`` times and column ``j`` ``t_j`` times.  For
the standard input (one photon in each of the first ``n`` modes) every
``t_j!`` is 1 and this is the familiar first-``n``-columns formula.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _random
from ._random import STREAM_INPUT, STREAM_LOSS, make_rng
from .distribution import ENUMERATION_CAP, Distribution, OccupationSpace, SampleSet
from .errors import DataError, DimensionError, DomainError, ParameterError
from .matrices import as_matrix, check_unitary, haar_unitary, matrix_from_dict, matrix_to_dict
from .permanent import default_threads, permanent_fast, permanents_batch

CHUNK_EVENTS = 1 << 14


def fiducial_input(m: int, n: int) -> tuple[int, ...]:
    """``(1,)*n + (0,)*(m-n)``."""
    if not 0 <= n <= m:
        raise ParameterError(f"need 0 <= n <= m, got m={m}, n={n}")
    return (1,) * n + (0,) * (m - n)


def mode_count(n: int, regime: str = "quadratic", c: float = 1.0) -> int:
    """Mode count preset for ``n`` photons.

    ``"quadratic"`` gives ``ceil(c * n^2)``; ``"strict"`` gives
    ``ceil(c * n^5 * ln(n)^2)``.  The constant ``c`` is configuration.
    """
    if n < 1 or c <= 0:
        raise ParameterError(f"need n >= 1 and c > 0, got n={n}, c={c}")
    if regime == "quadratic":
        m = math.ceil(c * n * n)
    elif regime == "strict":
        m = math.ceil(c * n**5 * math.log(n) ** 2)
    else:
        raise ParameterError(f"unknown mode-scaling regime {regime!r}")
    return max(m, n)


@dataclass(frozen=True, eq=False)
class BosonInstance:
    m: int
    n: int
    input: tuple[int, ...]
    network: np.ndarray
    haar_seed: int | None = None
    scattershot: bool = False

    def __post_init__(self):
        net = check_unitary(self.network)
        if net.shape[0] != self.m:
            raise DimensionError(f"network is {net.shape[0]}x{net.shape[0]}, expected m={self.m}")
        inp = tuple(int(t) for t in self.input)
        if len(inp) != self.m or any(t < 0 for t in inp) or sum(inp) != self.n:
            raise ParameterError(f"input {inp} is not an occupation of {self.n} photons in {self.m} modes")
        net = net.copy()
        net.setflags(write=False)
        object.__setattr__(self, "network", net)
        object.__setattr__(self, "input", inp)

    @property
    def space(self) -> OccupationSpace:
        return OccupationSpace(self.m, self.n)

    def with_network(self, network) -> "BosonInstance":
        return BosonInstance(self.m, self.n, self.input, network)

    def to_dict(self) -> dict:
        if self.haar_seed is not None:
            net = {"haar_seed": self.haar_seed}
        else:
            net = matrix_to_dict(self.network)
        doc = {"m": self.m, "n": self.n, "input": list(self.input), "network": net}
        if self.scattershot:
            doc["scattershot"] = True
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "BosonInstance":
        try:
            m, n = int(doc["m"]), int(doc["n"])
            net = doc["network"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed instance document: {exc}") from exc
        inp = doc.get("input") or fiducial_input(m, n)
        if "haar_seed" in net:
            seed = int(net["haar_seed"])
            return cls(m, n, tuple(inp), haar_unitary(m, seed), seed, bool(doc.get("scattershot", False)))
        return cls(m, n, tuple(inp), matrix_from_dict(net), None, bool(doc.get("scattershot", False)))

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


def make_instance(network, n: int | None = None, input: Sequence[int] | None = None) -> BosonInstance:
    u = as_matrix(network, square=True)
    m = u.shape[0]
    if input is None:
        if n is None:
            raise ParameterError("give either n or an input occupation")
        input = fiducial_input(m, n)
    return BosonInstance(m, int(sum(input)), tuple(input), u)


def haar_instance(m: int, n: int, seed: int, input: Sequence[int] | None = None) -> BosonInstance:
    inp = fiducial_input(m, n) if input is None else tuple(input)
    return BosonInstance(m, n, inp, haar_unitary(m, seed), int(seed))


def scattershot_instance(m: int, n: int, seed: int) -> BosonInstance:
    """Haar network with one photon in each of a uniformly random ``n``-subset of modes."""
    if n > m:
        raise ParameterError(f"scattershot needs n <= m, got m={m}, n={n}")
    occupied = make_rng(seed, STREAM_INPUT).choice(m, size=n, replace=False)
    inp = np.zeros(m, dtype=int)
    inp[occupied] = 1
    return BosonInstance(m, n, tuple(inp.tolist()), haar_unitary(m, seed), int(seed), True)


def event_space(m: int, n: int, cap: int = ENUMERATION_CAP) -> list[tuple[int, ...]]:
    return OccupationSpace(m, n, cap).events


def _repeat_index(occ: Sequence[int]) -> np.ndarray:
    occ = np.asarray(occ, dtype=np.int64)
    return np.repeat(np.arange(occ.size), occ)


def submatrix(network, s: Sequence[int], t: Sequence[int]) -> np.ndarray:
    """Rows repeated per output ``s``, columns per input ``t``."""
    u = as_matrix(network, square=True)
    if len(s) != u.shape[0] or len(t) != u.shape[0]:
        raise DimensionError(f"occupations must have length {u.shape[0]}")
    if sum(s) != sum(t) or min(s, default=0) < 0 or min(t, default=0) < 0:
        raise DimensionError(f"output {tuple(s)} and input {tuple(t)} carry different photon numbers")
    return u[np.ix_(_repeat_index(s), _repeat_index(t))]


_FACT = np.array([math.factorial(k) for k in range(171)], dtype=float)


def _check_event(instance: BosonInstance, s) -> tuple[int, ...]:
    s = tuple(int(x) for x in s)
    if len(s) != instance.m or any(x < 0 for x in s) or sum(s) != instance.n:
        raise DomainError(f"event {s} is not in Phi(m={instance.m}, n={instance.n})")
    return s


def event_probability(instance: BosonInstance, s: Sequence[int]) -> float:
    s = _check_event(instance, s)
    per = permanent_fast(submatrix(instance.network, s, instance.input))
    norm = np.prod(_FACT[list(s)]) * np.prod(_FACT[list(instance.input)])
    return float(abs(per) ** 2 / norm)


def distinguishable_probability(instance: BosonInstance, s: Sequence[int]) -> float:
    s = _check_event(instance, s)
    b = np.abs(submatrix(instance.network, s, instance.input)) ** 2
    return float(permanents_batch(b[None])[0] / np.prod(_FACT[list(s)]))


def _chunk_probabilities(u: np.ndarray, cols: np.ndarray, occ: np.ndarray, quantum: bool,
                         t_norm: float) -> np.ndarray:
    k, m = occ.shape
    n = cols.size
    rows = np.repeat(np.tile(np.arange(m), k), occ.ravel()).reshape(k, n)
    sub = u[rows[:, :, None], cols[None, None, :]]
    s_norm = np.prod(_FACT[occ], axis=1)
    if quantum:
        per = permanents_batch(sub)
        return (per.real**2 + per.imag**2) / (s_norm * t_norm)
    return permanents_batch(np.abs(sub) ** 2) / s_norm


def _table(instance: BosonInstance, quantum: bool, cap: int, threads: int | None) -> Distribution:
    space = OccupationSpace(instance.m, instance.n, cap)
    occ = space.occupations
    cols = _repeat_index(instance.input)
    t_norm = float(np.prod(_FACT[list(instance.input)]))
    u = np.asarray(instance.network)
    starts = range(0, len(space), CHUNK_EVENTS)
    work = lambda a: _chunk_probabilities(u, cols, occ[a : a + CHUNK_EVENTS], quantum, t_norm)  # noqa: E731
    threads = default_threads() if threads is None else threads
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(a) for a in starts]
    return Distribution(space, np.concatenate(parts))


def exact_distribution(instance: BosonInstance, cap: int = ENUMERATION_CAP,
                       threads: int | None = None) -> Distribution:
    """Output law of indistinguishable photons over the full event space."""
    return _table(instance, True, cap, threads)


def distinguishable_distribution(instance: BosonInstance, cap: int = ENUMERATION_CAP,
                                 threads: int | None = None) -> Distribution:
    """Classical baseline: photons routed independently by ``|u_ij|^2``.

    ``p_S = per(B[S, T]) / prod s_i!`` with ``B = |U|^2`` elementwise.
    """
    return _table(instance, False, cap, threads)


def sample_distribution(dist: Distribution, count: int, seed: int) -> SampleSet:
    idx = _random.draw_indices(dist.probabilities, count, seed)
    return SampleSet(dist.space, idx, seed)


def sample(instance: BosonInstance, count: int, seed: int,
           distribution: Distribution | None = None) -> SampleSet:
    """``count`` i.i.d. events from the exact distribution (enumerate, then draw)."""
    dist = exact_distribution(instance) if distribution is None else distribution
    out = sample_distribution(dist, count, seed)
    out.meta["instance"] = instance.digest()
    return out


def lossy_sample(instance: BosonInstance, eta: float, count: int, seed: int,
                 distribution: Distribution | None = None) -> tuple[SampleSet, float]:
    """Uniform loss with post-selection on all ``n`` photons arriving.

    Each of ``count`` trials keeps every photon with probability ``eta``;
    only trials where all survive are returned.  Uniform loss commutes with
    the network, so an accepted trial's event is distributed exactly as in
    :func:`sample`; the events are drawn from the same stream, which makes
    ``eta = 1`` identical to :func:`sample`.
    """
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"transmission eta must lie in [0, 1], got {eta}")
    full = sample(instance, count, seed, distribution)
    survive = make_rng(seed, STREAM_LOSS).random((count, instance.n)) < eta
    accepted = survive.all(axis=1)
    rate = float(accepted.mean()) if count else 0.0
    out = SampleSet(full.space, full.indices[accepted], seed, dict(full.meta))
    out.meta.update({"eta": eta, "trials": count, "accepted": int(accepted.sum()), "empty": not accepted.any()})
    return out, rate


def collision_statistics(samples: Iterable[Sequence[int]]) -> float:
    """Fraction of events with some mode holding two or more photons."""
    if isinstance(samples, SampleSet) and isinstance(samples.space, OccupationSpace):
        if len(samples) == 0:
            raise DomainError("collision statistics need a non-empty sample set")
        occ = samples.space.occupations[samples.indices]
        return float(np.mean(occ.max(axis=1) >= 2))
    total = hits = 0
    for event in samples:
        total += 1
        hits += max(event, default=0) >= 2
    if total == 0:
        raise DomainError("collision statistics need a non-empty sample set")
    return hits / total


def collision_probability(dist: Distribution) -> float:
    occ = dist.space.occupations
    return float(dist.probabilities[occ.max(axis=1) >= 2].sum())


def check_samples(instance: BosonInstance, samples: SampleSet) -> None:
    if samples.space.key != instance.space.key:
        raise DataError(f"samples live in {samples.space.key}, instance in {instance.space.key}")
