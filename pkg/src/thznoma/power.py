"""Rate, interference, caching, and power-consumption models.

SINR follows the imperfect-SIC form: a user sees full interference from
cluster members decoded after it (i.e. allocated less power), a residual
fraction of the already-decoded members' power, cross-beam interference
from the other clusters of its BS, and noise. Energy efficiency weights
each user's rate by (1 + cache efficiency) and divides by the BS's total
(circuit plus amplifier-scaled transmit) power.
"""

from dataclasses import dataclass

import numpy as np

from .validation import (
    require_count,
    require_fraction,
    require_nonnegative,
    require_positive,
)


@dataclass(frozen=True)
class PowerModelParams:
    """Circuit and amplifier power model of one BS (watts)."""

    p_baseband_w: float = 0.2
    p_rf_chain_w: float = 0.16
    p_phase_shifter_per_bit_w: float = 0.01
    p_amplifier_w: float = 0.02
    pa_inefficiency: float = 1.0 / 0.38
    p_max_w: float = 5.0

    def __post_init__(self):
        require_nonnegative("p_baseband_w", self.p_baseband_w)
        require_nonnegative("p_rf_chain_w", self.p_rf_chain_w)
        require_nonnegative("p_phase_shifter_per_bit_w", self.p_phase_shifter_per_bit_w)
        require_nonnegative("p_amplifier_w", self.p_amplifier_w)
        require_positive("p_max_w", self.p_max_w)
        if self.pa_inefficiency < 1.0:
            raise ValueError("pa_inefficiency must be >= 1")


@dataclass(frozen=True)
class CacheModel:
    """Cache efficiency per user and the fronthaul capacity of each BS."""

    cache_efficiency: float = 0.3
    fronthaul_capacity_bps: float = 1e12

    def __post_init__(self):
        require_fraction("cache_efficiency", self.cache_efficiency)
        require_nonnegative("fronthaul_capacity_bps", self.fronthaul_capacity_bps)


def cache_efficiency_from_state(cache_bits):
    """Fraction of a user's requested files present in the BS cache."""
    bits = np.asarray(cache_bits, dtype=float)
    if bits.size == 0:
        raise ValueError("cache state must list at least one file")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("cache state entries must be 0 or 1")
    return float(bits.mean())


def sinr_imperfect(
    user_index,
    cluster_powers,
    own_gain,
    other_cluster_powers,
    cross_gains,
    sic_error,
    noise_w,
):
    """SINR of one user under imperfect SIC.

    `cluster_powers` lists the user's cluster in decoding order (strongest
    gain first); `user_index` is the user's position in that order. Members
    decoded earlier (j < i) interfere fully; later members (j > i) leak a
    fraction `sic_error` of their power. `other_cluster_powers` and
    `cross_gains` cover the remaining beams of the same BS.
    """
    p = np.asarray(cluster_powers, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be non-negative")
    require_positive("noise_w", noise_w)
    require_fraction("sic_error", sic_error)
    residual = (p[:user_index].sum() + sic_error * p[user_index + 1 :].sum()) * own_gain
    mci = float(
        np.dot(
            np.asarray(other_cluster_powers, dtype=float),
            np.asarray(cross_gains, dtype=float),
        )
    )
    return float(p[user_index] * own_gain / (residual + mci + noise_w))


def user_rate(sinr, bandwidth_hz, num_clusters):
    """Achievable rate (W/N) * log2(1 + SINR) in bits/s."""
    require_nonnegative("sinr", sinr)
    require_positive("bandwidth_hz", bandwidth_hz)
    require_count("num_clusters", num_clusters)
    return bandwidth_hz / num_clusters * np.log2(1.0 + sinr)


def fronthaul_rate(rates, cache_efficiency):
    """Fronthaul load of one BS: the non-cached share of its users' traffic."""
    rates = np.asarray(rates, dtype=float)
    eff = np.broadcast_to(np.asarray(cache_efficiency, dtype=float), rates.shape)
    return float(np.sum(rates * (1.0 - eff)))


def circuit_power(params, num_tx_antennas, num_rf_chains, q_bits, architecture):
    """Static circuit power of one BS in watts.

    Sub-connected: baseband + N_R RF chains + N_T Q-bit phase shifters +
    N_T amplifiers. Full-digital: an RF chain and amplifier per antenna,
    no phase shifters.
    """
    n_t = require_count("num_tx_antennas", num_tx_antennas, minimum=0)
    n_r = require_count("num_rf_chains", num_rf_chains, minimum=0)
    q = require_count("q_bits", q_bits, minimum=0)
    if architecture == "sub-connected":
        shifters = n_t * q * params.p_phase_shifter_per_bit_w
        return (
            params.p_baseband_w
            + n_r * params.p_rf_chain_w
            + shifters
            + n_t * params.p_amplifier_w
        )
    if architecture == "full-digital":
        return (
            params.p_baseband_w
            + n_t * params.p_rf_chain_w
            + n_t * params.p_amplifier_w
        )
    raise ValueError(f"unknown architecture {architecture!r}")


def total_power(circuit_w, cluster_powers, pa_inefficiency):
    """Total BS draw: circuit power plus amplifier-scaled transmit power."""
    require_nonnegative("circuit_w", circuit_w)
    if pa_inefficiency < 1.0:
        raise ValueError("pa_inefficiency must be >= 1")
    transmit = float(np.sum(np.asarray(cluster_powers, dtype=float)))
    require_nonnegative("transmit power", transmit)
    return circuit_w + pa_inefficiency * transmit


def energy_efficiency(rates_per_bs, cache_eff_per_bs, total_power_per_bs):
    """System EE in bits/joule: sum over BSs of cache-weighted rate over power.

    `rates_per_bs` is a sequence of per-user rate arrays, one per BS;
    `cache_eff_per_bs` the matching cache-efficiency arrays (or scalars).
    """
    ee = 0.0
    for rates, eff, power in zip(rates_per_bs, cache_eff_per_bs, total_power_per_bs):
        require_positive("total power", power)
        rates = np.asarray(rates, dtype=float)
        weights = 1.0 + np.broadcast_to(np.asarray(eff, dtype=float), rates.shape)
        ee += float(np.sum(weights * rates)) / power
    return ee


def dinkelbach_value(eta, rates_per_bs, cache_eff_per_bs, total_power_per_bs):
    """Subtractive objective: cache-weighted sum rate minus eta times total power.

    The maximum EE is the root of this function in eta; it is zero when
    eta equals (weighted sum rate) / (total consumed power).
    """
    require_nonnegative("eta", eta)
    weighted = 0.0
    for rates, eff in zip(rates_per_bs, cache_eff_per_bs):
        rates = np.asarray(rates, dtype=float)
        weights = 1.0 + np.broadcast_to(np.asarray(eff, dtype=float), rates.shape)
        weighted += float(np.sum(weights * rates))
    return weighted - eta * float(np.sum(np.asarray(total_power_per_bs, dtype=float)))
