"""Distances, error predicates, empirical laws and sampler-validation tests."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np
from scipy import stats as _scipy_stats

from .boson import BosonInstance, distinguishable_distribution, exact_distribution
from .distribution import Distribution, SampleSet
from .errors import DataError, DomainError, ParameterError


@dataclass(frozen=True)
class ErrorBudget:
    """Error allowances for a sampler.

    ``beta`` bounds ``sum_x |p_x - q_x|`` (the unhalved total variation).
    """

    beta: float = 0.0
    epsilon_additive: float = 0.0
    epsilon_multiplicative: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value >= 0:
                raise ParameterError(f"{name} must be >= 0, got {value}")

    def admits(self, p: Distribution, q: Distribution) -> bool:
        return tv_distance(p, q)[1] <= self.beta


def _vector(d) -> tuple[object, np.ndarray]:
    if isinstance(d, Distribution):
        return d.space.key, d.probabilities
    return None, np.asarray(d, dtype=float)


def tv_distance(p, q) -> tuple[float, float]:
    """``(0.5 * sum|p - q|, sum|p - q|)``.

    Accepts :class:`Distribution` objects (event spaces must match) or bare
    probability vectors of equal length.
    """
    kp, vp = _vector(p)
    kq, vq = _vector(q)
    if (kp is not None and kq is not None and kp != kq) or vp.shape != vq.shape:
        raise DomainError(f"distributions live on different event spaces ({kp}, {kq})")
    total = float(np.abs(vp - vq).sum())
    return 0.5 * total, total


def within_multiplicative(q: float, q_est: float, eps: float) -> bool:
    """``q e^-eps <= q_est <= q e^eps``."""
    return q * math.exp(-eps) <= q_est <= q * math.exp(eps)


def within_additive(q: float, q_est: float, eps: float) -> bool:
    """``q - eps <= q_est <= q + eps``."""
    return q - eps <= q_est <= q + eps


def empirical_distribution(samples, space=None) -> Distribution:
    """Relative frequencies of ``samples`` over ``space``."""
    if isinstance(samples, SampleSet) and (space is None or space.key == samples.space.key):
        space = samples.space
        counts = samples.counts()
    else:
        if space is None:
            raise DomainError("an event space is needed for raw samples")
        counts = SampleSet.from_events(space, samples).counts()
    total = counts.sum()
    if total == 0:
        raise DomainError("cannot build an empirical distribution from zero samples")
    return Distribution(space, counts / total)


@dataclass(frozen=True)
class Verdict:
    test: str
    llr: float
    verdict: str
    samples: int
    seed: int | None = None

    def to_dict(self) -> dict:
        llr = self.llr if math.isfinite(self.llr) else ("inf" if self.llr > 0 else "-inf")
        return {"test": self.test, "llr": llr, "verdict": self.verdict, "samples": self.samples, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _indices(samples, instance: BosonInstance) -> np.ndarray:
    space = instance.space
    if isinstance(samples, SampleSet):
        if samples.space.key != space.key:
            raise DataError(f"samples live in {samples.space.key}, instance in {space.key}")
        return samples.indices
    return SampleSet.from_events(space, samples).indices


def _log(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p)


def log_likelihood_ratio(counts: np.ndarray, p_alt: np.ndarray, p_null: np.ndarray) -> float:
    """``sum over observed events of count * (log p_alt - log p_null)``.

    Observed events with zero probability under a model send that model's
    log-likelihood to ``-inf``; observed events impossible under both raise.
    """
    seen = counts > 0
    both_zero = seen & (p_alt <= 0) & (p_null <= 0)
    if np.any(both_zero):
        raise DataError(f"event index {int(np.flatnonzero(both_zero)[0])} has probability 0 under both models")
    la = _log(p_alt[seen]) @ counts[seen]
    ln = _log(p_null[seen]) @ counts[seen]
    if math.isinf(la) and math.isinf(ln):
        raise DataError("the samples contain events impossible under each model")
    if la == ln:  # also covers no samples
        return 0.0
    return float(la - ln)


def uniform_discriminator(samples, instance: BosonInstance, distribution: Distribution | None = None,
                          seed: int | None = None) -> Verdict:
    """Boson model against the uniform law on the event space.

    Positive log-likelihood ratio means ``boson``; zero goes to ``uniform``.
    """
    idx = _indices(samples, instance)
    dist = exact_distribution(instance) if distribution is None else distribution
    counts = np.bincount(idx, minlength=len(dist))
    uniform = np.full(len(dist), 1.0 / len(dist))
    llr = log_likelihood_ratio(counts, dist.probabilities, uniform)
    return Verdict("uniform", llr, "boson" if llr > 0 else "uniform", int(idx.size),
                   getattr(samples, "seed", seed))


def distinguishable_discriminator(samples, instance: BosonInstance,
                                  quantum: Distribution | None = None,
                                  classical: Distribution | None = None,
                                  seed: int | None = None) -> Verdict:
    """Indistinguishable-photon model against independent classical routing.

    Positive log-likelihood ratio means ``indistinguishable``; zero goes to
    ``distinguishable``.
    """
    idx = _indices(samples, instance)
    q = exact_distribution(instance) if quantum is None else quantum
    d = distinguishable_distribution(instance) if classical is None else classical
    counts = np.bincount(idx, minlength=len(q))
    llr = log_likelihood_ratio(counts, q.probabilities, d.probabilities)
    return Verdict("distinguishable", llr, "indistinguishable" if llr > 0 else "distinguishable",
                   int(idx.size), getattr(samples, "seed", seed))


def porter_thomas_fit(probabilities: Iterable[float], n: int | None = None) -> float:
    """Kolmogorov-Smirnov distance between rescaled values and ``Exp(1)``.

    With ``n`` given the inputs are raw probabilities and are multiplied by
    ``2^n``; with ``n=None`` they are taken as already rescaled.
    """
    z = np.asarray(list(probabilities), dtype=float)
    if z.size == 0:
        raise DomainError("Porter-Thomas fit needs at least one value")
    if n is not None:
        z = z * float(2**n)
    return float(_scipy_stats.kstest(z, "expon").statistic)
