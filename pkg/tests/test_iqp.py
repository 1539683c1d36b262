import json
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats as sps

from oracles import dense_iqp_state, theta_from_terms
from qsampling import iqp
from qsampling.errors import DomainError, ParameterError, SizeError
from qsampling.stats import empirical_distribution, tv_distance


def naive_vector(c):
    return np.array([iqp.output_probability(c, x) for x in c.space])


class TestPhasePolynomial:
    def test_merges_and_reduces(self):
        p = iqp.PhasePolynomial(3, [((1, 0), Fraction(1, 2)), ((0, 1), Fraction(3, 2)), ((2,), 5)])
        assert p.terms == {(2,): Fraction(1), (0, 1): Fraction(0)}

    def test_rejects_wide_terms(self):
        with pytest.raises(ParameterError):
            iqp.PhasePolynomial(5, [((0, 1, 2, 3), 1)])
        with pytest.raises(ParameterError):
            iqp.PhasePolynomial(2, [((0, 2), 1)])

    def test_evaluate(self):
        p = iqp.PhasePolynomial(3, [((0,), Fraction(1, 4)), ((0, 2), 1)])
        assert p.evaluate((1, 0, 1)) == Fraction(5, 4)
        assert p.evaluate((0, 1, 1)) == 0


class TestFamilies:
    def test_family1_single_qubit(self):
        c = iqp.random_family1(1, 3)
        (key,) = c.phase.terms
        assert key == (0,) and (c.phase.terms[key] * 4).denominator == 1

    def test_family1_complete_support(self):
        c = iqp.random_family1(5, 0)
        assert sum(len(k) == 2 for k in c.phase.terms) == 10
        assert sum(len(k) == 1 for k in c.phase.terms) == 5
        for k, w in c.phase.terms.items():
            assert (w * (4 if len(k) == 1 else 2)).denominator == 1

    def test_family1_weight_marginals(self):
        singles = np.array([[int(w * 4) for k, w in iqp.random_family1(4, s).phase.terms.items() if len(k) == 1]
                            for s in range(2000)]).ravel()
        counts = np.bincount(singles, minlength=8)
        assert sps.chisquare(counts).pvalue > 1e-3

    def test_seeds_differ(self):
        assert iqp.random_family1(6, 1).phase != iqp.random_family1(6, 2).phase

    def test_family2_candidates(self):
        seen = set()
        for s in range(50):
            c = iqp.random_family2(3, s)
            assert all(w == 1 for w in c.phase.terms.values())
            seen.update(c.phase.terms)
        assert len(seen) == 7

    def test_family2_single_qubit_balanced(self):
        hits = sum(bool(iqp.random_family2(1, s).phase.terms) for s in range(4000))
        assert abs(hits / 4000 - 0.5) <= 3 * math.sqrt(0.25 / 4000)

    def test_sparse_counts(self):
        c = iqp.random_sparse(8, 1, 24)
        assert sum(len(k) == 2 for k in c.phase.terms) == 24
        assert iqp.default_budget(8) == 24

    def test_sparse_budget_too_large(self):
        with pytest.raises(ParameterError):
            iqp.random_sparse(4, 0, 7)

    def test_sparse_full_budget_is_family1(self):
        for s in range(5):
            assert iqp.random_sparse(6, s, 15).phase == iqp.random_family1(6, s).phase

    def test_sparse_zero_budget_factorises(self):
        c = iqp.random_sparse(4, 5, 0)
        p = iqp.probability_vector(c).reshape((2,) * 4)
        marg = [p.sum(axis=tuple(j for j in range(4) if j != i)) for i in range(4)]
        prod = np.einsum("a,b,c,d->abcd", *marg)
        assert np.max(np.abs(prod - p)) <= 1e-12


class TestProbabilities:
    def test_identity(self):
        c = iqp.identity_circuit(3)
        assert iqp.output_probability(c, "000") == pytest.approx(1)
        assert iqp.output_probability(c, "010") == pytest.approx(0, abs=1e-15)
        assert full_point_mass(iqp.full_distribution(c)) == "000"

    def test_z(self):
        c = iqp.circuit(1, [((0,), 1)])
        assert iqp.output_probability(c, "0") == pytest.approx(0, abs=1e-15)
        assert iqp.output_probability(c, "1") == pytest.approx(1)

    def test_t(self):
        c = iqp.circuit(1, [((0,), Fraction(1, 4))])
        assert iqp.output_probability(c, "0") == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-15)

    def test_size_guard(self):
        with pytest.raises(SizeError):
            iqp.output_probability(iqp.identity_circuit(25), "0" * 25)

    @pytest.mark.parametrize("family", ["family1", "family2", "sparse"])
    def test_dense_statevector_oracle(self, family):
        for s in range(5):
            c = iqp.random_circuit(family, 6, s)
            state = dense_iqp_state(6, theta_from_terms(c.phase.terms))
            np.testing.assert_allclose(iqp.amplitudes(c), state, atol=1e-12)

    @pytest.mark.parametrize("family", ["family1", "family2"])
    def test_naive_matches_transform(self, family):
        for s in range(5):
            c = iqp.random_circuit(family, 10 if s else 1, s)
            p = iqp.probability_vector(c)
            assert np.max(np.abs(p - naive_vector(c))) <= 1e-10
            assert abs(p.sum() - 1) <= 1e-9

    def test_fwht_rejects_bad_length(self):
        with pytest.raises(ParameterError):
            iqp.fwht(np.ones(3))


def full_point_mass(d):
    (event,) = [e for e, p in d.items() if p > 0.5]
    return event


class TestGapAndPartition:
    def test_gap_zero_polynomial(self):
        assert iqp.gap_degree3(iqp.PhasePolynomial(4)) == 16

    def test_gap_single_variable(self):
        assert iqp.gap_degree3(iqp.PhasePolynomial(1, [((0,), 1)])) == 0

    def test_gap_brute_force(self):
        # f = y0 y1 y2 + y1: count zeros by hand over 8 inputs
        poly = iqp.PhasePolynomial(3, [((0, 1, 2), 1), ((1,), 1)])
        f = [(a * b * c + b) % 2 for a in (0, 1) for b in (0, 1) for c in (0, 1)]
        assert iqp.gap_degree3(poly) == f.count(0) - f.count(1)

    def test_gap_rejects_non_f2(self):
        with pytest.raises(DomainError):
            iqp.gap_degree3(iqp.PhasePolynomial(2, [((0,), Fraction(1, 2))]))

    def test_gap_matches_p0(self):
        for s in range(10):
            c = iqp.random_family2(6, s)
            gap = iqp.gap_degree3(c.phase)
            assert abs((gap / 64) ** 2 - iqp.output_probability(c, "000000")) <= 1e-10

    def test_partition_identity(self):
        assert iqp.partition_function_check(iqp.identity_circuit(3)) == pytest.approx(8)

    def test_partition_z(self):
        assert abs(iqp.partition_function_check(iqp.circuit(1, [((0,), 1)]))) <= 1e-15

    def test_partition_matches_p0(self):
        for s in range(10):
            c = iqp.random_family1(8, s)
            z = iqp.partition_function_check(c)
            assert abs(abs(z) ** 2 / 4**8 - iqp.output_probability(c, "0" * 8)) <= 1e-10


class TestShift:
    def test_zero_shift_unchanged(self):
        c = iqp.random_family1(4, 0)
        assert iqp.shift_circuit(c, "0000") is c

    def test_identity_moves_point_mass(self):
        d = iqp.full_distribution(iqp.shift_circuit(iqp.identity_circuit(2), "10"))
        assert d["10"] == pytest.approx(1)

    def test_covariance(self):
        rng = np.random.default_rng(0)
        for s in range(5):
            c = iqp.random_family1(6, s)
            x = "".join(rng.choice(["0", "1"], size=6))
            p = iqp.probability_vector(c)
            q = iqp.probability_vector(iqp.shift_circuit(c, x))
            assert np.max(np.abs(q - iqp.xor_translate(p, x))) <= 1e-10


class TestSampling:
    def test_identity_samples(self):
        assert set(iqp.sample_iqp(iqp.identity_circuit(3), 100, 1).events()) == {"000"}

    def test_deterministic(self):
        c = iqp.random_family1(5, 0)
        np.testing.assert_array_equal(iqp.sample_iqp(c, 500, 3).indices, iqp.sample_iqp(c, 500, 3).indices)

    def test_convergence(self):
        c = iqp.random_family1(10, 2)
        d = iqp.full_distribution(c)
        half, _ = tv_distance(empirical_distribution(iqp.sample_iqp(c, 100_000, 1, d)), d)
        assert half <= 0.1


class TestNoise:
    def test_rate_zero_is_ideal(self):
        c = iqp.random_family1(5, 1)
        a = iqp.depolarize_samples(c, 0.0, 1000, 4)
        np.testing.assert_array_equal(a.indices, iqp.sample_iqp(c, 1000, 4).indices)

    def test_rate_one_uniform(self):
        c = iqp.identity_circuit(3)
        np.testing.assert_allclose(iqp.depolarized_distribution(c, 1.0).probabilities, 1 / 8, atol=1e-15)
        s = iqp.depolarize_samples(c, 1.0, 80_000, 2)
        half, _ = tv_distance(empirical_distribution(s), np.full(8, 1 / 8))
        assert half <= 3 * math.sqrt(8 / 80_000)

    def test_single_qubit_flip_rate(self):
        draws = 100_000
        s = iqp.depolarize_samples(iqp.identity_circuit(1), 0.1, draws, 5)
        freq = float(np.mean(s.indices == 1))
        assert abs(freq - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / draws)

    def test_analytic_matches_sampling(self):
        c = iqp.random_family1(4, 3)
        exact = iqp.depolarized_distribution(c, 0.3)
        s = iqp.depolarize_samples(c, 0.3, 100_000, 6)
        half, _ = tv_distance(empirical_distribution(s), exact)
        assert half <= 3 * math.sqrt(16 / 100_000)

    def test_monotone_tvd(self):
        c = iqp.random_family1(8, 0)
        p = iqp.probability_vector(c)
        tvd = [tv_distance(p, iqp.depolarized_vector(p, r))[0] for r in (0, 0.01, 0.05, 0.1, 0.5)]
        assert tvd[0] == 0 and all(a <= b for a, b in zip(tvd, tvd[1:]))

    @pytest.mark.parametrize("rate", [-0.01, 1.01])
    def test_bad_rate(self, rate):
        with pytest.raises(ParameterError):
            iqp.depolarize_samples(iqp.identity_circuit(1), rate, 1, 0)


class TestAnticoncentration:
    def test_alpha_zero(self):
        circuits = iqp.ensemble("family1", 4, 5, 0)
        nonzero = np.mean(iqp.rescaled_probabilities(circuits) > 0)
        assert iqp.anticoncentration_fraction(circuits, 0.0) == nonzero <= 1

    def test_identity_family(self):
        assert iqp.anticoncentration_fraction([iqp.identity_circuit(5)] * 3, 1.0) == 2**-5

    def test_zero_only(self):
        circuits = iqp.ensemble("family1", 4, 20, 1)
        ref = np.mean([iqp.output_probability(c, "0000") * 16 > 1 for c in circuits])
        assert iqp.anticoncentration_fraction(circuits, 1.0, zero_only=True) == ref

    def test_guard(self):
        with pytest.raises(SizeError):
            iqp.anticoncentration_stats("family1", 17, 1, 1.0, 0)

    def test_ensemble_reproducible(self):
        a = iqp.ensemble("sparse", 6, 4, 9)
        b = iqp.ensemble("sparse", 6, 4, 9)
        assert all(x.phase == y.phase for x, y in zip(a, b))


class TestGadget:
    def test_no_gadget_exact(self):
        g = iqp.verify_hadamard_gadget(3, 0, gadgets=0)
        assert abs(g.fidelity - 1) <= 1e-14 and g.postselection_probability == pytest.approx(1)

    def test_single_qubit(self):
        g = iqp.verify_hadamard_gadget(1, 4, gadgets=1)
        assert g.fidelity >= 1 - 1e-10
        assert g.postselection_probability == pytest.approx(0.5, abs=1e-12)

    def test_three_gadgets(self):
        for s in range(5):
            g = iqp.verify_hadamard_gadget(4, s, gadgets=3)
            assert g.fidelity >= 1 - 1e-10
            assert g.postselection_probability == pytest.approx(1 / 8, abs=1e-12)

    def test_guard(self):
        with pytest.raises(SizeError):
            iqp.verify_hadamard_gadget(19, 0, gadgets=2)


class TestSerialisation:
    def test_exact_reload(self):
        c = iqp.random_family1(5, 7)
        doc = json.loads(json.dumps(c.to_dict()))
        again = iqp.IQPCircuit.from_dict(doc)
        assert again.phase == c.phase and again.family == "family1"
        np.testing.assert_array_equal(iqp.probability_vector(again), iqp.probability_vector(c))

    def test_rational_weights(self):
        doc = iqp.circuit(2, [((0, 1), Fraction(1, 2))]).to_dict()
        assert doc["terms"][0] == {"qubits": [0, 1], "weight_over_pi": [1, 2]}

    def test_malformed(self):
        with pytest.raises(ParameterError):
            iqp.IQPCircuit.from_dict({"n": 2})
