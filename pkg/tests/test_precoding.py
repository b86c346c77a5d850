import numpy as np
import pytest

from thznoma.channel import steering_vector
from thznoma.precoding import (
    DegenerateClusteringError,
    FullDigitalZF,
    SubConnectedPrecoder,
    build_analog_precoder,
    effective_gains,
    equivalent_channel,
    make_precoder,
    normalize_columns,
    quantize_phase,
    zf_precoder,
)


def random_heads(n_r, n_t, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n_r, n_t)) + 1j * rng.normal(size=(n_r, n_t))


class TestQuantizePhase:
    def test_exact_grid_point(self):
        assert quantize_phase(0.0, 4) == 0

    def test_one_bit_pi(self):
        assert quantize_phase(np.pi, 1) == 1

    def test_tie_breaks_to_smallest_index(self):
        # 3*pi/4 is equidistant between pi/2 (index 1) and pi (index 2)
        assert quantize_phase(3 * np.pi / 4, 2) == 1

    def test_wraparound(self):
        # just below 2*pi is closest to index 0, not index 2^Q - 1
        assert quantize_phase(2 * np.pi - 0.01, 3) == 0

    def test_error_never_grows_with_resolution(self):
        rng = np.random.default_rng(1)
        for target in rng.uniform(-np.pi, np.pi, size=50):
            errors = []
            for q in range(1, 8):
                idx = quantize_phase(target, q)
                grid = 2 * np.pi * idx / 2**q
                diff = np.mod(target - grid + np.pi, 2 * np.pi) - np.pi
                errors.append(abs(diff))
            assert np.all(np.diff(errors) <= 1e-12)


class TestAnalogPrecoder:
    def test_zero_phase_head_gives_uniform_block(self):
        heads = np.ones((2, 8), dtype=complex)
        analog, idx = build_analog_precoder(heads, 2, 4)
        np.testing.assert_allclose(analog[:4, 0], np.full(4, 0.5))
        np.testing.assert_allclose(analog[4:, 1], np.full(4, 0.5))
        assert np.all(idx == 0)

    def test_block_diagonal_support_and_modulus(self):
        heads = random_heads(4, 32, 0)
        analog, _ = build_analog_precoder(heads, 4, 3)
        n_sub = 8
        for n in range(4):
            block = analog[n * n_sub : (n + 1) * n_sub, n]
            np.testing.assert_allclose(np.abs(block), 1 / np.sqrt(n_sub))
        mask = np.ones_like(analog, dtype=bool)
        for n in range(4):
            mask[n * n_sub : (n + 1) * n_sub, n] = False
        assert np.all(analog[mask] == 0)

    def test_high_resolution_matches_head_phases(self):
        heads = random_heads(2, 16, 5)
        analog, _ = build_analog_precoder(heads, 2, 16)
        for n in range(2):
            block = analog[n * 8 : (n + 1) * 8, n]
            target = np.angle(heads[n, n * 8 : (n + 1) * 8])
            diff = np.mod(np.angle(block) - target + np.pi, 2 * np.pi) - np.pi
            assert np.max(np.abs(diff)) <= 2 * np.pi / 2**16 + 1e-12

    def test_indivisible_antennas_rejected(self):
        with pytest.raises(ValueError):
            build_analog_precoder(random_heads(3, 16, 0), 3, 4)


class TestEquivalentChannel:
    def test_shape(self):
        heads = random_heads(4, 32, 1)
        analog, _ = build_analog_precoder(heads, 4, 4)
        eq = equivalent_channel(heads, analog)
        assert eq.shape == (4, 4)

    def test_zero_head_row(self):
        heads = random_heads(2, 8, 2)
        analog, _ = build_analog_precoder(heads, 2, 4)
        heads2 = heads.copy()
        heads2[1] = 0
        eq = equivalent_channel(heads2, analog)
        np.testing.assert_array_equal(eq[1], np.zeros(2))

    def test_matched_subarray_combines_coherently(self):
        # head along a steering direction: own-block entry magnitude is
        # close to sqrt(n_sub) * per-antenna amplitude
        head = 3.0 * steering_vector(0.4, 16)[None, :]
        heads = np.vstack([head, steering_vector(-0.9, 16)[None, :]])
        analog, _ = build_analog_precoder(heads, 2, 16)
        eq = equivalent_channel(heads, analog)
        per_antenna = np.abs(heads[0, 0])
        assert np.abs(eq[0, 0]) == pytest.approx(
            np.sqrt(8) * per_antenna, rel=1e-3
        )


class TestZeroForcing:
    def test_identity(self):
        np.testing.assert_allclose(zf_precoder(np.eye(3, dtype=complex)), np.eye(3))

    def test_scalar_inverse(self):
        np.testing.assert_allclose(
            zf_precoder(2 * np.eye(3, dtype=complex)), 0.5 * np.eye(3)
        )

    def test_residual_on_random_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            eq = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            if np.linalg.cond(eq) > 1e3:
                continue
            d = zf_precoder(eq)
            assert np.max(np.abs(eq @ d - np.eye(4))) < 1e-8

    def test_degenerate_heads_raise(self):
        eq = np.ones((2, 4), dtype=complex)  # identical rows
        with pytest.raises(DegenerateClusteringError):
            zf_precoder(eq)


class TestNormalizeColumns:
    def test_postcondition(self):
        heads = random_heads(3, 12, 4)
        analog, _ = build_analog_precoder(heads, 3, 4)
        eq = equivalent_channel(heads, analog)
        digital = zf_precoder(eq)
        normalized = normalize_columns(analog, digital)
        norms = np.linalg.norm(analog @ normalized, axis=0)
        np.testing.assert_allclose(norms, np.ones(3), atol=1e-9)
        # zero-forcing survives normalization as a positive real diagonal
        product = eq @ normalized
        off = product - np.diag(np.diag(product))
        assert np.max(np.abs(off)) < 1e-8
        diag = np.diag(product)
        assert np.all(diag.real > 0)
        assert np.max(np.abs(diag.imag)) < 1e-8

    def test_idempotent_and_scale_invariant(self):
        heads = random_heads(2, 8, 6)
        analog, _ = build_analog_precoder(heads, 2, 4)
        digital = zf_precoder(equivalent_channel(heads, analog))
        once = normalize_columns(analog, digital)
        twice = normalize_columns(analog, once)
        np.testing.assert_allclose(once, twice, atol=1e-12)
        scaled = normalize_columns(analog, 5.0 * digital)
        np.testing.assert_allclose(once, scaled, atol=1e-12)

    def test_zero_column_rejected(self):
        analog = np.eye(2, dtype=complex)
        digital = np.array([[1, 0], [0, 0]], dtype=complex)
        with pytest.raises(ValueError):
            normalize_columns(analog, digital)


class TestEffectiveGains:
    def test_two_user_ordering(self):
        channels = np.array([[1, 0], [2, 0]], dtype=complex)
        analog = np.eye(2, dtype=complex)
        digital = np.eye(2, dtype=complex)
        gains = effective_gains(channels, [0, 0], analog, digital)
        # user 1 has gain 4, user 0 has gain 1: strongest first
        np.testing.assert_array_equal(gains.order[0], [1, 0])
        assert gains.own_gains[1] == pytest.approx(4.0)

    def test_single_user_cluster(self):
        channels = np.array([[1, 0]], dtype=complex)
        gains = effective_gains(
            channels, [0], np.eye(2, dtype=complex), np.eye(2, dtype=complex)[:, :1]
        )
        np.testing.assert_array_equal(gains.order[0], [0])

    def test_phase_rotation_invariance(self):
        heads = random_heads(2, 8, 8)
        analog, _ = build_analog_precoder(heads, 2, 4)
        digital = normalize_columns(
            analog, zf_precoder(equivalent_channel(heads, analog))
        )
        channels = random_heads(5, 8, 9)
        g1 = effective_gains(channels, [0, 0, 1, 1, 1], analog, digital)
        g2 = effective_gains(
            np.exp(1j * 0.7) * channels, [0, 0, 1, 1, 1], analog, digital
        )
        np.testing.assert_allclose(g1.gain_matrix, g2.gain_matrix, rtol=1e-12)

    def test_tie_keeps_original_order(self):
        channels = np.array([[1, 0], [1, 0]], dtype=complex)
        gains = effective_gains(
            channels, [0, 0], np.eye(2, dtype=complex), np.eye(2, dtype=complex)
        )
        np.testing.assert_array_equal(gains.order[0], [0, 1])


class TestEstimators:
    def test_sub_connected_fit(self):
        heads = random_heads(2, 16, 10)
        pre = SubConnectedPrecoder(quant_bits=4).fit(heads)
        assert pre.analog_.shape == (16, 2)
        assert pre.digital_.shape == (2, 2)
        norms = np.linalg.norm(pre.analog_ @ pre.digital_, axis=0)
        np.testing.assert_allclose(norms, np.ones(2), atol=1e-9)

    def test_full_digital_fit(self):
        heads = random_heads(2, 16, 12)
        pre = FullDigitalZF().fit(heads)
        np.testing.assert_array_equal(pre.analog_, np.eye(16))
        resid = equivalent_channel(heads, pre.analog_) @ pre.digital_raw_
        assert np.max(np.abs(resid - np.eye(2))) < 1e-8

    def test_factory(self):
        assert isinstance(make_precoder("sub-connected", 2), SubConnectedPrecoder)
        assert isinstance(make_precoder("full-digital"), FullDigitalZF)
        with pytest.raises(ValueError):
            make_precoder("analog-only")
