import numpy as np
import pytest

from thznoma.channel import (
    CarrierConfig,
    Geometry,
    TopologyError,
    absorption_loss_db,
    channel_vector,
    generate_channels,
    noise_power_watts,
    pathloss_linear,
    sample_topology,
    spreading_loss_db,
    steering_vector,
)


class TestSpreadingLoss:
    def test_034_thz_at_one_meter(self):
        # 20*log10(4*pi*0.34e12/c) evaluated directly
        assert spreading_loss_db(0.34e12, 1.0) == pytest.approx(83.08, abs=0.01)

    def test_unit_argument_gives_zero(self):
        c = 299_792_458.0
        assert spreading_loss_db(c / (4 * np.pi), 1.0) == pytest.approx(0.0, abs=1e-9)

    def test_doubling_distance_adds_6db(self):
        base = spreading_loss_db(0.34e12, 2.0)
        assert spreading_loss_db(0.34e12, 4.0) - base == pytest.approx(
            20 * np.log10(2), abs=1e-9
        )

    @pytest.mark.parametrize("f,d", [(0, 1), (-1e12, 1), (1e12, 0), (1e12, -2)])
    def test_rejects_non_positive_inputs(self, f, d):
        with pytest.raises(ValueError):
            spreading_loss_db(f, d)


class TestAbsorptionLoss:
    def test_zero_coefficient(self):
        assert absorption_loss_db(0.0, 123.0) == 0.0

    def test_hand_value(self):
        # 10 * 0.01 * log10(e)
        assert absorption_loss_db(0.002, 5.0) == pytest.approx(0.04343, abs=1e-5)

    def test_linear_in_distance(self):
        assert absorption_loss_db(0.002, 10.0) == pytest.approx(
            2 * absorption_loss_db(0.002, 5.0), rel=1e-12
        )

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            absorption_loss_db(-0.1, 1.0)
        with pytest.raises(ValueError):
            absorption_loss_db(0.1, -1.0)


class TestPathlossLinear:
    def test_no_absorption_is_pure_spreading(self):
        f, d = 1e12, 3.0
        expected = (4 * np.pi * f * d / 299_792_458.0) ** 2
        assert pathloss_linear(f, d, 0.0) == pytest.approx(expected, rel=1e-12)

    def test_matches_db_example(self):
        assert pathloss_linear(0.34e12, 1.0, 0.0) == pytest.approx(
            10**8.308, rel=1e-3
        )

    def test_db_and_linear_forms_agree(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            f = rng.uniform(0.1e12, 10e12)
            d = rng.uniform(0.1, 100.0)
            k = rng.uniform(0.0, 1.0)
            db_form = spreading_loss_db(f, d) + absorption_loss_db(k, d)
            assert 10 * np.log10(pathloss_linear(f, d, k)) == pytest.approx(
                db_form, abs=1e-9
            )

    def test_strictly_increasing_in_distance_and_absorption(self):
        f = 0.34e12
        assert pathloss_linear(f, 2.0, 0.01) > pathloss_linear(f, 1.0, 0.01)
        assert pathloss_linear(f, 2.0, 0.02) > pathloss_linear(f, 2.0, 0.01)


class TestSteeringVector:
    def test_broadside(self):
        np.testing.assert_allclose(steering_vector(0.0, 4), 0.5 * np.ones(4))

    def test_endfire_two_elements(self):
        v = steering_vector(np.pi / 2, 2)
        np.testing.assert_allclose(v, np.array([1, -1]) / np.sqrt(2), atol=1e-12)

    @pytest.mark.parametrize("phi", [-1.3, 0.0, 0.4, np.pi / 2, 3.0])
    def test_unit_norm(self, phi):
        assert np.linalg.norm(steering_vector(phi, 64)) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_rejects_bad_count(self):
        with pytest.raises(ValueError):
            steering_vector(0.1, 0)


class TestChannelVector:
    def test_unit_pathloss_reference(self):
        # gain 1 and PL == 1 at d = c / (4 pi f): sqrt(4) * 0.5 * ones
        c = 299_792_458.0
        carrier = CarrierConfig(
            frequency_hz=1e12,
            absorption_coeff_per_m=0.0,
            antenna_gain=1.0,
            num_tx_antennas=4,
        )
        d = c / (4 * np.pi * carrier.frequency_hz)
        np.testing.assert_allclose(channel_vector(carrier, d, 0.0), np.ones(4))

    def test_norm_scales_with_pathloss(self):
        carrier = CarrierConfig()
        rng = np.random.default_rng(3)
        for _ in range(10):
            d1, d2 = rng.uniform(0.5, 5.0, size=2)
            h1 = channel_vector(carrier, d1, 0.3)
            h2 = channel_vector(carrier, d2, 0.3)
            pl1 = pathloss_linear(carrier.frequency_hz, d1, carrier.absorption_coeff_per_m)
            pl2 = pathloss_linear(carrier.frequency_hz, d2, carrier.absorption_coeff_per_m)
            assert np.linalg.norm(h2) / np.linalg.norm(h1) == pytest.approx(
                np.sqrt(pl1 / pl2), rel=1e-12
            )

    def test_expected_norm(self):
        carrier = CarrierConfig()
        h = channel_vector(carrier, 2.0, 0.7)
        pl = pathloss_linear(carrier.frequency_hz, 2.0, carrier.absorption_coeff_per_m)
        expected = np.sqrt(carrier.num_tx_antennas / pl) * carrier.antenna_gain
        assert np.linalg.norm(h) == pytest.approx(expected, rel=1e-12)

    def test_deterministic(self):
        carrier = CarrierConfig()
        a = channel_vector(carrier, 1.7, 0.2)
        b = channel_vector(carrier, 1.7, 0.2)
        np.testing.assert_array_equal(a, b)

    def test_rejects_non_positive_distance(self):
        with pytest.raises(ValueError):
            channel_vector(CarrierConfig(), 0.0, 0.1)


class TestNoisePower:
    def test_full_band_value(self):
        # 10^((-174 - 30)/10) * 1e10
        assert noise_power_watts(-174.0, 10e9, 1) == pytest.approx(
            3.981e-11, rel=1e-3
        )

    def test_halves_with_cluster_count(self):
        one = noise_power_watts(-174.0, 10e9, 1)
        two = noise_power_watts(-174.0, 10e9, 2)
        assert two == pytest.approx(one / 2, rel=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            noise_power_watts(-174.0, 0.0, 1)
        with pytest.raises(ValueError):
            noise_power_watts(-174.0, 1e9, 0)


class TestTopology:
    def test_same_seed_identical(self):
        geo = Geometry()
        t1 = sample_topology(geo, 7)
        t2 = sample_topology(geo, 7)
        np.testing.assert_array_equal(t1.user_positions, t2.user_positions)
        np.testing.assert_array_equal(t1.distances, t2.distances)

    def test_min_distances_respected(self):
        geo = Geometry()
        topo = sample_topology(geo, 11)
        assert np.all(topo.distances >= geo.min_bs_user_m)
        assert np.all(topo.distances <= geo.radius_m + 1e-12)
        for b in range(geo.num_bs):
            pos = topo.user_positions[b]
            for i in range(len(pos)):
                for j in range(i + 1, len(pos)):
                    assert np.linalg.norm(pos[i] - pos[j]) >= geo.min_user_spacing_m

    def test_departure_angles_match_geometry(self):
        geo = Geometry()
        topo = sample_topology(geo, 5)
        delta = topo.user_positions[0, 0] - topo.bs_positions[0]
        assert topo.departure_angles[0, 0] == pytest.approx(
            np.arctan2(delta[1], delta[0])
        )

    def test_overdense_configuration_fails(self):
        geo = Geometry(
            num_bs=1, users_per_bs=400, radius_m=1.0,
            min_bs_user_m=0.5, min_user_spacing_m=0.2,
        )
        with pytest.raises(TopologyError):
            sample_topology(geo, 0)


class TestGenerateChannels:
    def test_shapes_and_purity(self):
        geo = Geometry(num_bs=2, users_per_bs=5)
        carrier = CarrierConfig(num_tx_antennas=16)
        topo = sample_topology(geo, 3)
        cs1 = generate_channels(carrier, topo)
        cs2 = generate_channels(carrier, topo)
        assert cs1.vectors.shape == (2, 5, 16)
        np.testing.assert_array_equal(cs1.vectors, cs2.vectors)
        assert np.all(np.isfinite(cs1.vectors.view(float)))
        assert np.all(np.linalg.norm(cs1.vectors, axis=2) > 0)
