import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specres.measure import AtomicMeasure, ParameterError, fourier_coefficients
from specres.noise_shaping import (
    Alphabet,
    InputRangeError,
    QuantizerConfig,
    beta_quantize,
    choose_parameters,
    condense,
    msq_quantize,
    msq_stream,
    noise_transfer_apply,
    reweight_decode,
    reweight_encode,
    round_to_alphabet,
    weight,
)


def dense_V(cfg):
    """Explicit condensation matrix [I, I/beta, ..., I/beta^(lam-1)]."""
    return np.hstack([cfg.beta ** (-k) * np.eye(cfg.m) for k in range(cfg.lam)])


def dense_H(cfg):
    """Explicit block bidiagonal noise transfer matrix."""
    H = np.eye(cfg.M)
    for k in range(1, cfg.lam):
        rows = slice(k * cfg.m, (k + 1) * cfg.m)
        cols = slice((k - 1) * cfg.m, k * cfg.m)
        H[rows, cols] = -cfg.beta * np.eye(cfg.m)
    return H


def random_inputs(rng, n, A=1.0):
    """Complex samples with modulus at most A."""
    r = A * np.sqrt(rng.uniform(0, 1, n))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, n))


class TestChooseParameters:
    def test_example(self):
        beta, delta = choose_parameters(2, 2, 1.0)
        assert beta == pytest.approx(1.5)
        assert delta == pytest.approx(2.0)
        assert beta + 1 / delta == pytest.approx(2.0)

    def test_eps_v(self):
        cfg = QuantizerConfig.for_condensed_size(27, 2, 2)
        assert cfg.m == 27
        assert cfg.eps_v == pytest.approx(math.sqrt(54) / 1.5 * 2)
        assert cfg.eps_v == pytest.approx(9.798, abs=1e-3)

    @pytest.mark.parametrize("K, lam", [(2, 1), (3, 4), (8, 6), (32, 1)])
    def test_stability_condition_is_tight(self, K, lam):
        beta, delta = choose_parameters(K, lam, 1.0)
        assert 1 < beta < K
        assert beta + 1 / delta == pytest.approx(K)

    @pytest.mark.parametrize("args", [(1, 2, 1.0), (2, 0, 1.0), (2, 2, 0.0)])
    def test_rejects_bad_input(self, args):
        with pytest.raises(ParameterError):
            choose_parameters(*args)


class TestQuantizerConfig:
    def test_lambda_must_divide(self):
        with pytest.raises(ParameterError):
            QuantizerConfig.from_rule(10, 3, 4)

    def test_beta_range(self):
        with pytest.raises(ParameterError):
            QuantizerConfig(M=4, lam=2, K=2, A=1.0, beta=2.0, delta=2.0)

    def test_stability(self):
        with pytest.raises(ParameterError):
            QuantizerConfig(M=4, lam=2, K=4, A=1.0, beta=3.0, delta=0.5)

    def test_c_beta(self):
        cfg = QuantizerConfig(M=2, lam=2, K=2, A=1.0, beta=1.5, delta=2.0)
        assert cfg.c_beta == pytest.approx(5.0)
        assert cfg.lipschitz_bound == pytest.approx(4 * math.pi * 2 * 1.5 / 0.25)


class TestAlphabet:
    def test_levels(self):
        np.testing.assert_allclose(Alphabet(3, 1.0).levels, [-2, 0, 2])
        np.testing.assert_allclose(Alphabet(4, 0.5).levels, [-1.5, -0.5, 0.5, 1.5])

    def test_nearest(self):
        assert round_to_alphabet(0.4 + 0.9j, Alphabet(2, 1.0)) == 1 + 1j

    def test_tie_goes_to_smaller_level(self):
        assert round_to_alphabet(0j, Alphabet(2, 1.0)) == -1 - 1j
        assert Alphabet(3, 1.0).round_real(1.0) == 0.0

    def test_odd_k(self):
        assert round_to_alphabet(0.3, Alphabet(3, 1.0)) == 0

    def test_saturates(self):
        assert Alphabet(2, 1.0).round_real(50.0) == 1.0

    @given(st.integers(2, 9), st.floats(-20, 20))
    def test_nearest_property(self, K, x):
        alph = Alphabet(K, 0.7)
        r = alph.round_real(x)
        assert np.isclose(np.min(np.abs(alph.levels - x)), abs(r - x), atol=1e-12)


class TestBetaQuantize:
    def test_hand_traced(self):
        cfg = QuantizerConfig(M=2, lam=2, K=2, A=1.0, beta=1.5, delta=2.0)
        s = beta_quantize(np.array([0.3, -0.5]), cfg)
        np.testing.assert_allclose(s.q.real, [2, -2])
        np.testing.assert_allclose(s.u.real, [-1.7, -1.05], atol=1e-15)
        H = np.array([[1, 0], [-1.5, 1]])
        np.testing.assert_allclose((np.array([0.3, -0.5]) - s.q).real, [-1.7, 1.5], atol=1e-15)
        np.testing.assert_allclose(H @ s.u.real, [-1.7, 1.5], atol=1e-15)

    def test_zero_input_is_stable(self):
        cfg = QuantizerConfig.for_condensed_size(5, 3, 4)
        s = beta_quantize(np.zeros(15), cfg)
        assert np.all(np.isin(s.q.real, cfg.alphabet.levels))
        assert np.max(np.abs(s.u)) <= math.sqrt(2) * cfg.delta

    @pytest.mark.parametrize("K", [2, 4, 8])
    @pytest.mark.parametrize("lam", [1, 2, 4])
    def test_identity_against_dense_matrix(self, K, lam):
        cfg = QuantizerConfig.for_condensed_size(8, lam, K)
        H = dense_H(cfg)
        rng = np.random.default_rng(K * 10 + lam)
        for _ in range(50):
            y = random_inputs(rng, cfg.M)
            s = beta_quantize(y, cfg)
            assert np.max(np.abs((y - s.q) - H @ s.u)) <= 1e-10
            assert np.max(np.abs(s.u)) <= math.sqrt(2) * cfg.delta * (1 + 1e-12)

    def test_output_in_alphabet(self):
        cfg = QuantizerConfig.for_condensed_size(27, 3, 4)
        s = beta_quantize(random_inputs(np.random.default_rng(3), cfg.M), cfg)
        levels = cfg.alphabet.levels
        assert np.all(np.isin(s.q.real, levels)) and np.all(np.isin(s.q.imag, levels))

    def test_range_check(self):
        cfg = QuantizerConfig.for_condensed_size(2, 1, 4)
        with pytest.raises(InputRangeError):
            beta_quantize(np.array([1.5, 0.0]), cfg)

    def test_length_check(self):
        cfg = QuantizerConfig.for_condensed_size(2, 2, 4)
        with pytest.raises(ParameterError):
            beta_quantize(np.zeros(3), cfg)

    def test_lambda_one_is_msq(self):
        cfg = QuantizerConfig.for_condensed_size(27, 1, 5)
        y = random_inputs(np.random.default_rng(4), 27)
        np.testing.assert_array_equal(beta_quantize(y, cfg).q, msq_quantize(y, cfg.alphabet))


class TestMSQ:
    def test_example(self):
        assert msq_quantize(np.array([0.3 + 0.9j]), Alphabet(2, 2.0))[0] == 2 + 2j

    def test_idempotent(self):
        alph = Alphabet(4, 0.5)
        q = msq_quantize(random_inputs(np.random.default_rng(5), 40), alph)
        np.testing.assert_array_equal(msq_quantize(q, alph), q)

    def test_error_bound(self):
        alph = Alphabet(3, 1.0)
        y = random_inputs(np.random.default_rng(6), 100)
        s = msq_stream(y, alph)
        assert np.linalg.norm(y - s.q) <= math.sqrt(2 * y.size) * alph.delta
        np.testing.assert_allclose(s.u, y - s.q)


class TestCondense:
    def test_lambda_one_identity(self):
        cfg = QuantizerConfig.for_condensed_size(4, 1, 3)
        x = np.arange(4) + 1j
        np.testing.assert_array_equal(condense(x, cfg), x)

    def test_direct_sum(self):
        cfg = QuantizerConfig(M=4, lam=2, K=3, A=1.0, beta=2.0, delta=1.0)
        np.testing.assert_allclose(condense(np.ones(4), cfg), [1.5, 1.5])

    def test_matches_dense(self):
        cfg = QuantizerConfig.for_condensed_size(5, 3, 4)
        x = random_inputs(np.random.default_rng(7), 15)
        np.testing.assert_allclose(condense(x, cfg), dense_V(cfg) @ x, atol=1e-14)

    @pytest.mark.parametrize("lam", [1, 2, 4])
    def test_condensed_measurement_identity(self, lam):
        rng = np.random.default_rng(lam)
        for K in (2, 5):
            cfg = QuantizerConfig.for_condensed_size(27, lam, K)
            for _ in range(20):
                S = rng.integers(1, 6)
                mu = AtomicMeasure(rng.uniform(0, 1, S), rng.normal(size=S) + 1j * rng.normal(size=S))
                lhs = condense(fourier_coefficients(mu, cfg.M), cfg)
                rhs = fourier_coefficients(reweight_encode(mu, cfg), cfg.m)
                assert np.max(np.abs(lhs - rhs)) <= 1e-12


class TestNoiseTransfer:
    def test_first_column(self):
        cfg = QuantizerConfig(M=4, lam=2, K=2, A=1.0, beta=1.5, delta=2.0)
        out = noise_transfer_apply(np.array([1, 0, 0, 0]), cfg)
        np.testing.assert_allclose(out, [1, 0, -1.5, 0])

    def test_lambda_one_identity(self):
        cfg = QuantizerConfig.for_condensed_size(3, 1, 2)
        u = np.array([1, 2j, 3])
        np.testing.assert_array_equal(noise_transfer_apply(u, cfg), u)

    @pytest.mark.parametrize("m, lam, K", [(8, 4, 2), (27, 2, 4), (28, 4, 8)])
    def test_telescoping(self, m, lam, K):
        cfg = QuantizerConfig.for_condensed_size(m, lam, K)
        VH = dense_V(cfg) @ dense_H(cfg)
        target = np.zeros((m, cfg.M))
        target[:, -m:] = cfg.beta ** (1 - lam) * np.eye(m)
        assert np.max(np.abs(VH - target)) <= 1e-14
        # same product through the fast operators
        u = random_inputs(np.random.default_rng(m), cfg.M)
        fast = condense(noise_transfer_apply(u, cfg), cfg)
        np.testing.assert_allclose(fast, cfg.beta ** (1 - lam) * u[-m:], atol=1e-13)


class TestWeight:
    def test_lambda_one(self):
        cfg = QuantizerConfig.for_condensed_size(7, 1, 3)
        np.testing.assert_allclose(weight(np.linspace(0, 1, 11), cfg), 1.0)

    def test_value_at_zero(self):
        cfg = QuantizerConfig(M=4, lam=2, K=2, A=1.0, beta=1.5, delta=2.0)
        assert weight(0.0, cfg) == pytest.approx(5 / 3)
        assert (1 - 4 / 9) / (1 - 2 / 3) == pytest.approx(5 / 3)

    def test_geometric_sum_form(self):
        cfg = QuantizerConfig.for_condensed_size(9, 4, 5)
        t = np.random.default_rng(8).uniform(0, 1, 30)
        series = sum(cfg.beta ** (-k) * np.exp(-2j * np.pi * k * cfg.m * t) for k in range(4))
        np.testing.assert_allclose(weight(t, cfg), series, atol=1e-13)

    @pytest.mark.parametrize("K, lam", [(2, 2), (4, 3), (8, 6)])
    def test_bounds_on_grid(self, K, lam):
        cfg = QuantizerConfig.for_condensed_size(27, lam, K)
        t = np.arange(10_000) / 10_000
        w = np.abs(weight(t, cfg))
        assert w.max() <= cfg.c_beta
        assert w.min() >= 1 / cfg.c_beta
        slope = np.max(np.abs(np.diff(weight(np.append(t, 1.0), cfg)))) * 10_000
        assert slope <= cfg.m * cfg.lipschitz_bound

    def test_reweight_example(self):
        cfg = QuantizerConfig(M=4, lam=2, K=2, A=1.0, beta=1.5, delta=2.0)
        out = reweight_decode(AtomicMeasure([0.0], [5 / 3]), cfg)
        assert out.amplitudes[0] == pytest.approx(1.0)

    def test_round_trip(self):
        cfg = QuantizerConfig.for_condensed_size(27, 3, 4)
        rng = np.random.default_rng(9)
        for _ in range(20):
            mu = AtomicMeasure(rng.uniform(0, 1, 4), rng.normal(size=4) + 1j)
            back = reweight_decode(reweight_encode(mu, cfg), cfg)
            np.testing.assert_allclose(back.amplitudes, mu.amplitudes, atol=1e-12)
            np.testing.assert_array_equal(back.locations, mu.locations)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(1, 5), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_state_bound_property(K, lam, m, seed):
    cfg = QuantizerConfig.for_condensed_size(m, lam, K)
    y = random_inputs(np.random.default_rng(seed), cfg.M)
    s = beta_quantize(y, cfg)
    assert np.max(np.abs(s.u)) <= math.sqrt(2) * cfg.delta * (1 + 1e-12)
    assert np.linalg.norm(condense(y - s.q, cfg)) <= cfg.eps_v * (1 + 1e-12)
