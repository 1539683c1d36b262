"""IQP circuits ``C = H^n D H^n`` with a diagonal ``D`` given as a phase polynomial.

``D|y> = exp(i*theta(y))|y>`` with ``theta(y) = pi * sum_t w_t * prod_{i in t} y_i``.
Weights are stored as exact rationals ``w_t`` (multiples of pi) so that
circuits reload bit-exactly and dyadic phases cancel exactly.

Bit strings put qubit 0 first; the integer index of a string is its
big-endian value, so index order equals lexicographic string order.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _random
from ._random import STREAM_NOISE, STREAM_SUPPORT, STREAM_TRIALS, STREAM_WEIGHTS, make_rng
from .distribution import BitStringSpace, Distribution, SampleSet
from .errors import DegenerateInstanceError, DomainError, ParameterError, SizeError

MAX_QUBITS = 24
MAX_ANTICONC_QUBITS = 16
MAX_GADGET_QUBITS = 20
FAMILIES = ("family1", "family2", "sparse", "custom")


def _as_fraction(w) -> Fraction:
    if isinstance(w, Fraction):
        return w
    if isinstance(w, (tuple, list)) and len(w) == 2:
        return Fraction(int(w[0]), int(w[1]))
    if isinstance(w, float):
        return Fraction(w)
    return Fraction(w)


class PhasePolynomial:
    """``theta(y) / pi = sum_t w_t prod_{i in t} y_i`` with ``1 <= |t| <= 3``.

    Weights are reduced mod 2.  Duplicate subsets merge by adding weights;
    zero-weight terms are kept so the support is explicit.
    """

    def __init__(self, n: int, terms: Iterable[tuple[Iterable[int], object]] | Mapping = ()):
        if n < 1:
            raise ParameterError(f"need n >= 1 qubits, got {n}")
        self.n = int(n)
        merged: dict[tuple[int, ...], Fraction] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for qubits, weight in items:
            key = tuple(sorted(int(q) for q in qubits))
            if not 1 <= len(key) <= 3 or len(set(key)) != len(key):
                raise ParameterError(f"term on qubits {key} must touch 1 to 3 distinct qubits")
            if key[0] < 0 or key[-1] >= self.n:
                raise ParameterError(f"term on qubits {key} is outside 0..{self.n - 1}")
            merged[key] = (merged.get(key, Fraction(0)) + _as_fraction(weight)) % 2
        self.terms: dict[tuple[int, ...], Fraction] = dict(sorted(merged.items(), key=lambda kv: (len(kv[0]), kv[0])))

    def __eq__(self, other) -> bool:
        return isinstance(other, PhasePolynomial) and self.n == other.n and self.terms == other.terms

    def __repr__(self) -> str:
        return f"PhasePolynomial(n={self.n}, terms={len(self.terms)})"

    def degree(self) -> int:
        return max((len(k) for k, w in self.terms.items() if w), default=0)

    def added(self, terms: Iterable[tuple[Iterable[int], object]]) -> "PhasePolynomial":
        return PhasePolynomial(self.n, list(self.terms.items()) + list(terms))

    def evaluate(self, y: Sequence[int]) -> Fraction:
        """``theta(y) / pi`` reduced mod 2, exactly."""
        total = Fraction(0)
        for key, w in self.terms.items():
            if all(y[i] for i in key):
                total += w
        return total % 2

    def phase_tensor(self) -> np.ndarray:
        """``theta(y) / pi`` for every ``y`` as an ``n``-axis tensor (axis i = qubit i)."""
        theta = np.zeros((2,) * self.n)
        for key, w in self.terms.items():
            if w:
                sl = [slice(None)] * self.n
                for q in key:
                    sl[q] = 1
                theta[tuple(sl)] += float(w)
        return theta

    def phase_vector(self) -> np.ndarray:
        """``exp(i theta(y))`` indexed by big-endian ``y``."""
        return np.exp(1j * np.pi * self.phase_tensor().ravel())


@dataclass(frozen=True, eq=False)
class IQPCircuit:
    n: int
    phase: PhasePolynomial
    family: str = "custom"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if self.phase.n != self.n:
            raise ParameterError(f"phase polynomial has {self.phase.n} qubits, circuit {self.n}")

    @property
    def space(self) -> BitStringSpace:
        return BitStringSpace(self.n)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "family": self.family,
            "terms": [
                {"qubits": list(k), "weight_over_pi": [w.numerator, w.denominator]}
                for k, w in self.phase.terms.items()
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IQPCircuit":
        try:
            n = int(doc["n"])
            terms = [(t["qubits"], _as_fraction(t["weight_over_pi"])) for t in doc["terms"]]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"malformed circuit document: {exc}") from exc
        return cls(n, PhasePolynomial(n, terms), doc.get("family", "custom"))

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


def identity_circuit(n: int) -> IQPCircuit:
    return IQPCircuit(n, PhasePolynomial(n), "custom")


def circuit(n: int, terms, family: str = "custom") -> IQPCircuit:
    return IQPCircuit(n, PhasePolynomial(n, terms), family)


# -- random families ---------------------------------------------------------------

def _family1_weights(n: int, seed: int) -> tuple[list, dict]:
    rng = make_rng(seed, STREAM_WEIGHTS)
    singles = rng.integers(0, 8, size=n)
    pairs = list(itertools.combinations(range(n), 2))
    pair_w = rng.integers(0, 4, size=len(pairs))
    single_terms = [((i,), Fraction(int(k), 4)) for i, k in enumerate(singles)]
    return single_terms, {p: Fraction(int(k), 2) for p, k in zip(pairs, pair_w)}


def random_family1(n: int, seed: int) -> IQPCircuit:
    """T powers on every qubit and sqrt(CZ) powers on every pair.

    Singleton weights are uniform on ``{0, 1/4, ..., 7/4}`` (units of pi),
    pair weights uniform on ``{0, 1/2, 1, 3/2}``.
    """
    singles, pairs = _family1_weights(n, seed)
    return IQPCircuit(n, PhasePolynomial(n, singles + list(pairs.items())), "family1")


def random_family2(n: int, seed: int) -> IQPCircuit:
    """Z, CZ, CCZ: each monomial of degree 1-3 present with probability 1/2."""
    if n < 1:
        raise ParameterError(f"need n >= 1 qubits, got {n}")
    rng = make_rng(seed, STREAM_WEIGHTS)
    monomials = [c for d in (1, 2, 3) for c in itertools.combinations(range(n), d)]
    keep = rng.random(len(monomials)) < 0.5
    return IQPCircuit(n, PhasePolynomial(n, [(c, 1) for c, k in zip(monomials, keep) if k]), "family2")


def default_budget(n: int) -> int:
    return math.ceil(n * math.log2(n)) if n > 1 else 0


def random_sparse(n: int, seed: int, gate_budget: int | None = None) -> IQPCircuit:
    """Family-1 weights on ``gate_budget`` random distinct pairs plus all singletons.

    Weights come from the same stream as :func:`random_family1`, so a full
    budget reproduces the family-1 circuit of the same seed.
    """
    if n < 1:
        raise ParameterError(f"need n >= 1 qubits, got {n}")
    npairs = n * (n - 1) // 2
    budget = default_budget(n) if gate_budget is None else int(gate_budget)
    budget = min(budget, npairs) if gate_budget is None else budget
    if not 0 <= budget <= npairs:
        raise ParameterError(f"gate budget {budget} outside 0..{npairs} for n={n}")
    singles, pairs = _family1_weights(n, seed)
    order = list(pairs)
    chosen = make_rng(seed, STREAM_SUPPORT).choice(npairs, size=budget, replace=False)
    picked = [(order[i], pairs[order[i]]) for i in sorted(chosen.tolist())]
    return IQPCircuit(n, PhasePolynomial(n, singles + picked), "sparse")


def random_circuit(family: str, n: int, seed: int, gate_budget: int | None = None) -> IQPCircuit:
    family = {"1": "family1", "2": "family2"}.get(str(family), str(family))
    if family == "family1":
        return random_family1(n, seed)
    if family == "family2":
        return random_family2(n, seed)
    if family == "sparse":
        return random_sparse(n, seed, gate_budget)
    raise ParameterError(f"no random ensemble for family {family!r}")


# -- probabilities ----------------------------------------------------------------------

def _guard(n: int, limit: int = MAX_QUBITS) -> None:
    if n > limit:
        raise SizeError(f"{n} qubits exceeds the exact-evaluation limit of {limit}")


def _parse_bits(x, n: int) -> int:
    return BitStringSpace(n).index(x)


def _theta_by_mask(c: IQPCircuit) -> np.ndarray:
    """``theta(y) / pi`` via bitmask tests, independent of the tensor builder."""
    y = np.arange(1 << c.n, dtype=np.int64)
    theta = np.zeros(y.size)
    for key, w in c.phase.terms.items():
        if w:
            mask = sum(1 << (c.n - 1 - q) for q in key)
            theta[(y & mask) == mask] += float(w)
    return theta


def _parity(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    out = np.zeros(v.shape, dtype=np.int64)
    while np.any(v):
        out ^= v & 1
        v >>= 1
    return out


def output_probability(c: IQPCircuit, x) -> float:
    """``|2^-n sum_y (-1)^{x.y} e^{i theta(y)}|^2`` by direct summation."""
    _guard(c.n)
    xi = _parse_bits(x, c.n)
    y = np.arange(1 << c.n, dtype=np.int64)
    signs = 1 - 2 * _parity(y & xi)
    amp = np.sum(signs * np.exp(1j * np.pi * _theta_by_mask(c))) / (1 << c.n)
    return float(min(1.0, abs(amp) ** 2))


def fwht(v: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform of a length-``2^n`` vector."""
    v = np.array(v, dtype=complex)
    n = v.size.bit_length() - 1
    if v.size != 1 << n:
        raise ParameterError(f"length {v.size} is not a power of two")
    h = 1
    while h < v.size:
        w = v.reshape(-1, 2, h)
        a = w[:, 0, :].copy()
        w[:, 0, :] += w[:, 1, :]
        w[:, 1, :] = a - w[:, 1, :]
        h *= 2
    return v


def amplitudes(c: IQPCircuit) -> np.ndarray:
    """All ``<x|H^n D H^n|0^n>`` via one Walsh-Hadamard transform of the phase vector."""
    _guard(c.n)
    return fwht(c.phase.phase_vector()) / (1 << c.n)


def probability_vector(c: IQPCircuit) -> np.ndarray:
    a = amplitudes(c)
    return a.real**2 + a.imag**2


def full_distribution(c: IQPCircuit) -> Distribution:
    return Distribution(c.space, probability_vector(c))


def sample_iqp(c: IQPCircuit, count: int, seed: int, distribution: Distribution | None = None) -> SampleSet:
    dist = full_distribution(c) if distribution is None else distribution
    idx = _random.draw_indices(dist.probabilities, count, seed)
    return SampleSet(dist.space, idx, seed, {"circuit": c.digest()})


def gap_degree3(poly: PhasePolynomial) -> int:
    """``#{y : f(y) = 0} - #{y : f(y) = 1}`` for ``f`` over F2.

    ``f`` is read off a polynomial whose weights are all 0 or 1 (units of
    pi).  Counted with integer XOR arithmetic, no floating point.
    """
    _guard(poly.n)
    if poly.degree() > 3:
        raise DomainError("gap is defined for degree <= 3 polynomials")
    y = np.arange(1 << poly.n, dtype=np.int64)
    f = np.zeros(y.size, dtype=np.int64)
    for key, w in poly.terms.items():
        if w == 0:
            continue
        if w != 1:
            raise DomainError(f"term {key} has weight {w}*pi; F2 polynomials need weights 0 or pi")
        mask = sum(1 << (poly.n - 1 - q) for q in key)
        f ^= ((y & mask) == mask).astype(np.int64)
    ones = int(f.sum())
    return y.size - 2 * ones


def partition_function_check(c: IQPCircuit) -> complex:
    """``Z = sum_y exp(i theta(y))`` by exact phase counting.

    Each ``theta(y)/pi`` is accumulated as an integer multiple of ``1/L``
    (``L`` the common denominator), then ``Z`` is the sum of
    ``count_k * exp(i pi k / L)`` over residues ``k`` mod ``2L``.  Then
    ``p_0 = |Z|^2 / 4^n``.
    """
    _guard(c.n)
    denom = 1
    for w in c.phase.terms.values():
        denom = math.lcm(denom, w.denominator)
    y = np.arange(1 << c.n, dtype=np.int64)
    units = np.zeros(y.size, dtype=np.int64)
    for key, w in c.phase.terms.items():
        k = int(w * denom) % (2 * denom)
        if k:
            mask = sum(1 << (c.n - 1 - q) for q in key)
            units += np.where((y & mask) == mask, k, 0)
    counts = np.bincount(units % (2 * denom), minlength=2 * denom)
    residues = np.arange(2 * denom)
    return complex(np.sum(counts * np.exp(1j * np.pi * residues / denom)))


def shift_circuit(c: IQPCircuit, x) -> IQPCircuit:
    """Append ``Z^x`` inside ``D``; the output law is translated by XOR with ``x``."""
    bits = BitStringSpace(c.n)[_parse_bits(x, c.n)]
    extra = [((i,), 1) for i, b in enumerate(bits) if b == "1"]
    if not extra:
        return c
    return IQPCircuit(c.n, c.phase.added(extra), c.family)


def xor_translate(p: np.ndarray, x) -> np.ndarray:
    """``q[y] = p[y XOR x]`` for a probability vector over big-endian indices."""
    n = p.size.bit_length() - 1
    xi = _parse_bits(x, n)
    return p[np.arange(p.size) ^ xi]


# -- noise --------------------------------------------------------------------------------

def _check_rate(rate: float) -> float:
    if not 0.0 <= rate <= 1.0:
        raise ParameterError(f"depolarizing rate must lie in [0, 1], got {rate}")
    return float(rate)


def depolarize_samples(c: IQPCircuit, rate: float, count: int, seed: int,
                       distribution: Distribution | None = None) -> SampleSet:
    """Ideal samples with each output bit flipped independently w.p. ``rate/2``.

    A depolarizing channel of strength ``rate`` on each qubit before a
    computational-basis measurement acts on the outcome as exactly such a
    bit flip.  Ideal draws use the :func:`sample_iqp` stream, so ``rate = 0``
    reproduces it.
    """
    rate = _check_rate(rate)
    ideal = sample_iqp(c, count, seed, distribution)
    flips = make_rng(seed, STREAM_NOISE).random((count, c.n)) < rate / 2
    weights = 1 << np.arange(c.n - 1, -1, -1, dtype=np.int64)
    noise = flips.astype(np.int64) @ weights
    out = SampleSet(ideal.space, ideal.indices ^ noise, seed, dict(ideal.meta))
    out.meta["depolarize"] = rate
    return out


def depolarized_vector(p: np.ndarray, rate: float) -> np.ndarray:
    """Exact output law after per-qubit bit flips at ``rate/2``."""
    q = _check_rate(rate) / 2
    n = p.size.bit_length() - 1
    t = np.asarray(p, dtype=float).reshape((2,) * n)
    for axis in range(n):
        t = (1 - q) * t + q * np.flip(t, axis=axis)
    return t.ravel()


def depolarized_distribution(c: IQPCircuit, rate: float) -> Distribution:
    return Distribution(c.space, depolarized_vector(probability_vector(c), rate))


# -- anti-concentration ------------------------------------------------------------

def rescaled_probabilities(circuits: Iterable[IQPCircuit], zero_only: bool = False) -> np.ndarray:
    """``2^n p_x`` pooled over circuits (all ``x``, or ``x = 0^n`` only)."""
    chunks = []
    for c in circuits:
        _guard(c.n, MAX_ANTICONC_QUBITS)
        p = probability_vector(c) * (1 << c.n)
        chunks.append(p[:1] if zero_only else p)
    return np.concatenate(chunks) if chunks else np.zeros(0)


def anticoncentration_fraction(circuits: Iterable[IQPCircuit], alpha: float, zero_only: bool = False) -> float:
    values = rescaled_probabilities(circuits, zero_only)
    if values.size == 0:
        raise DomainError("no circuits given")
    return float(np.mean(values > alpha))


def ensemble(family: str, n: int, trials: int, seed: int, gate_budget: int | None = None) -> list[IQPCircuit]:
    """``trials`` random circuits; trial ``t`` uses seed ``SeedSequence(seed, (TRIALS, t))``."""
    seeds = [int(make_rng(seed, STREAM_TRIALS, t).integers(0, 2**63 - 1)) for t in range(trials)]
    return [random_circuit(family, n, s, gate_budget) for s in seeds]


def anticoncentration_stats(family: str, n: int, circuit_trials: int, alpha: float, seed: int,
                            zero_only: bool = False, gate_budget: int | None = None) -> float:
    """Fraction of (circuit, x) pairs with ``2^n p_x > alpha``.

    Porter-Thomas statistics predict ``exp(-alpha)``.
    """
    _guard(n, MAX_ANTICONC_QUBITS)
    if circuit_trials < 1:
        raise ParameterError("need at least one circuit trial")
    return anticoncentration_fraction(ensemble(family, n, circuit_trials, seed, gate_budget), alpha, zero_only)


# -- hadamard gadget ----------------------------------------------------------------

@dataclass(frozen=True)
class GadgetCheck:
    fidelity: float
    postselection_probability: float
    gadgets: int
    n: int


_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def _apply_h(state: np.ndarray, q: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(_H, state, axes=([1], [q])), 0, q)


def _random_layer(n: int, rng: np.random.Generator) -> list[tuple[tuple[int, ...], Fraction]]:
    terms = [((i,), Fraction(int(rng.integers(0, 8)), 4)) for i in range(n)]
    terms += [(p, Fraction(int(rng.integers(0, 4)), 2)) for p in itertools.combinations(range(n), 2)]
    return terms


def verify_hadamard_gadget(n: int, seed: int, gadgets: int = 3) -> GadgetCheck:
    """Check the postselected gadget that replaces a mid-circuit Hadamard.

    A random circuit ``H^n D_0 H_{q1} D_1 ... H_{qg} D_g H^n`` is run two
    ways.  Directly, on a dense ``n``-qubit state vector.  And as an IQP
    circuit on ``n + g`` qubits: each ``H_q`` becomes a fresh ancilla in
    ``|+>`` joined to the current wire of ``q`` by a CZ; the old wire is
    measured in the X basis (the final Hadamard layer) and postselected on
    0, and the logical qubit continues on the ancilla.  All diagonal pieces
    commute, so the gadget circuit is ``H D' H`` with one phase polynomial.
    Returns the fidelity between the two normalised output states and the
    postselection probability (``2^-g`` in exact arithmetic).
    """
    if n < 1 or gadgets < 0:
        raise ParameterError(f"need n >= 1 and gadgets >= 0, got n={n}, gadgets={gadgets}")
    total = n + gadgets
    _guard(total, MAX_GADGET_QUBITS)
    rng = make_rng(seed, STREAM_WEIGHTS)
    layers = [_random_layer(n, rng) for _ in range(gadgets + 1)]
    targets = [int(q) for q in rng.integers(0, n, size=gadgets)]

    # direct evolution
    state = np.full((2,) * n, 2 ** (-n / 2), dtype=complex)
    for k, layer in enumerate(layers):
        state = state * PhasePolynomial(n, layer).phase_vector().reshape((2,) * n)
        if k < gadgets:
            state = _apply_h(state, targets[k])
    for q in range(n):
        state = _apply_h(state, q)
    direct = state.ravel()

    # gadget circuit
    wire = list(range(n))
    retired = []
    terms = []
    for k, layer in enumerate(layers):
        terms += [(tuple(wire[q] for q in key), w) for key, w in layer]
        if k < gadgets:
            ancilla = n + k
            terms.append(((wire[targets[k]], ancilla), 1))
            retired.append(wire[targets[k]])
            wire[targets[k]] = ancilla
    amp = amplitudes(IQPCircuit(total, PhasePolynomial(total, terms), "custom")).reshape((2,) * total)
    index = [slice(None)] * total
    for r in retired:
        index[r] = 0
    kept = amp[tuple(index)]
    remaining = [q for q in range(total) if q not in retired]
    kept = np.moveaxis(kept, [remaining.index(w) for w in wire], list(range(n))).ravel()
    post = float(np.vdot(kept, kept).real)
    if post <= 0:
        raise DegenerateInstanceError("postselection probability is zero; choose another seed")
    fidelity = abs(np.vdot(direct, kept)) ** 2 / post / float(np.vdot(direct, direct).real)
    return GadgetCheck(float(fidelity), post, gadgets, n)
