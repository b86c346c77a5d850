"""Deterministic LOS terahertz channel model.

Pathloss is spreading loss times molecular absorption loss; channel vectors
are uniform-linear-array steering vectors scaled by the link budget. Geometry
is sampled once per seed, after which every channel quantity is a pure
function of the configuration.
"""

from dataclasses import dataclass

import numpy as np

from .validation import require_count, require_nonnegative, require_positive

SPEED_OF_LIGHT = 299_792_458.0  # m/s, free space

# Per-user resampling budget before an over-dense geometry is rejected.
MAX_PLACEMENT_ATTEMPTS = 10_000


class TopologyError(RuntimeError):
    """Raised when the placement constraints cannot be satisfied."""


@dataclass(frozen=True)
class CarrierConfig:
    """Carrier, array, and noise parameters of one THz link."""

    frequency_hz: float = 0.34e12
    bandwidth_hz: float = 10e9
    noise_psd_dbm_hz: float = -174.0
    absorption_coeff_per_m: float = 0.002  # illustrative transparent-window value
    antenna_gain: float = 100.0  # amplitude factor; 40 dB combined tx+rx gain
    num_tx_antennas: int = 64

    def __post_init__(self):
        require_positive("frequency_hz", self.frequency_hz)
        require_positive("bandwidth_hz", self.bandwidth_hz)
        require_nonnegative("absorption_coeff_per_m", self.absorption_coeff_per_m)
        require_positive("antenna_gain", self.antenna_gain)
        require_count("num_tx_antennas", self.num_tx_antennas)


@dataclass(frozen=True)
class Geometry:
    """Disc placement parameters for the small-cell BSs and their users."""

    num_bs: int = 2
    users_per_bs: int = 15
    radius_m: float = 5.0
    min_bs_user_m: float = 0.5
    min_user_spacing_m: float = 0.1

    def __post_init__(self):
        require_count("num_bs", self.num_bs)
        require_count("users_per_bs", self.users_per_bs)
        require_positive("radius_m", self.radius_m)
        require_nonnegative("min_bs_user_m", self.min_bs_user_m)
        require_nonnegative("min_user_spacing_m", self.min_user_spacing_m)
        if self.min_bs_user_m >= self.radius_m:
            raise ValueError("min_bs_user_m must be smaller than radius_m")


@dataclass(frozen=True)
class Topology:
    """Sampled 2-D network geometry.

    bs_positions: (B, 2) metres; user_positions: (B, U, 2) metres;
    distances / departure_angles: (B, U) per BS-user pair.
    """

    bs_positions: np.ndarray
    user_positions: np.ndarray
    distances: np.ndarray
    departure_angles: np.ndarray


@dataclass(frozen=True)
class ChannelSet:
    """Complex channel vectors, (B, U, N_T), plus their generating geometry."""

    vectors: np.ndarray
    topology: Topology


def spreading_loss_db(frequency_hz, distance_m):
    """Free-space spreading loss 20*log10(4*pi*f*d/c) in dB."""
    require_positive("frequency_hz", frequency_hz)
    require_positive("distance_m", distance_m)
    return 20.0 * np.log10(4.0 * np.pi * frequency_hz * distance_m / SPEED_OF_LIGHT)


def absorption_loss_db(absorption_coeff_per_m, distance_m):
    """Molecular absorption loss 10*k*d*log10(e) in dB."""
    require_nonnegative("absorption_coeff_per_m", absorption_coeff_per_m)
    require_nonnegative("distance_m", distance_m)
    return 10.0 * absorption_coeff_per_m * distance_m * np.log10(np.e)


def pathloss_linear(frequency_hz, distance_m, absorption_coeff_per_m):
    """Linear pathloss (4*pi*f*d/c)^2 * exp(k*d); agrees with the dB forms."""
    require_positive("frequency_hz", frequency_hz)
    require_positive("distance_m", distance_m)
    require_nonnegative("absorption_coeff_per_m", absorption_coeff_per_m)
    spreading = (4.0 * np.pi * frequency_hz * distance_m / SPEED_OF_LIGHT) ** 2
    return spreading * np.exp(absorption_coeff_per_m * distance_m)


def steering_vector(departure_angle_rad, num_antennas):
    """Unit-norm ULA steering vector; element s is exp(j*pi*s*sin(angle))/sqrt(n)."""
    n = require_count("num_antennas", num_antennas)
    phases = np.pi * np.arange(n) * np.sin(departure_angle_rad)
    return np.exp(1j * phases) / np.sqrt(n)


def channel_vector(carrier, distance_m, departure_angle_rad):
    """LOS channel vector sqrt(N_T) * sqrt(1/PL) * gain * steering(angle).

    The resulting L2 norm is sqrt(N_T) * gain / sqrt(PL(f, d)).
    """
    require_positive("distance_m", distance_m)
    pl = pathloss_linear(
        carrier.frequency_hz, distance_m, carrier.absorption_coeff_per_m
    )
    scale = np.sqrt(carrier.num_tx_antennas / pl) * carrier.antenna_gain
    return scale * steering_vector(departure_angle_rad, carrier.num_tx_antennas)


def noise_power_watts(noise_psd_dbm_hz, bandwidth_hz, num_clusters):
    """AWGN power over one cluster's share of the band, in watts.

    sigma^2 = 10^((N0_dBm - 30) / 10) * (W / N); clusters split the band
    evenly, so doubling the cluster count halves the per-cluster noise.
    """
    require_positive("bandwidth_hz", bandwidth_hz)
    require_count("num_clusters", num_clusters)
    psd_w_per_hz = 10.0 ** ((noise_psd_dbm_hz - 30.0) / 10.0)
    return psd_w_per_hz * bandwidth_hz / num_clusters


def sample_topology(geometry, seed):
    """Place users uniformly in each SBS disc, enforcing minimum spacings.

    Users are rejection-sampled until they clear both the BS standoff and the
    pairwise user spacing; exceeding the per-user attempt budget raises
    TopologyError (the configuration is over-dense).
    """
    rng = np.random.default_rng(seed)
    num_bs = geometry.num_bs
    users = geometry.users_per_bs

    # SBSs on a line, separated well beyond the cell radius; inter-SBS
    # interference is neglected so only the local geometry matters.
    bs_positions = np.zeros((num_bs, 2))
    bs_positions[:, 0] = 4.0 * geometry.radius_m * np.arange(num_bs)

    user_positions = np.zeros((num_bs, users, 2))
    for b in range(num_bs):
        placed = []
        for _ in range(users):
            for attempt in range(MAX_PLACEMENT_ATTEMPTS):
                offset = rng.uniform(-geometry.radius_m, geometry.radius_m, size=2)
                dist = np.hypot(offset[0], offset[1])
                if dist > geometry.radius_m or dist < geometry.min_bs_user_m:
                    continue
                pos = bs_positions[b] + offset
                if placed and geometry.min_user_spacing_m > 0:
                    gaps = np.linalg.norm(np.array(placed) - pos, axis=1)
                    if np.min(gaps) < geometry.min_user_spacing_m:
                        continue
                placed.append(pos)
                break
            else:
                raise TopologyError(
                    f"could not place user {len(placed)} of BS {b} within "
                    f"{MAX_PLACEMENT_ATTEMPTS} attempts; configuration too dense"
                )
        user_positions[b] = np.array(placed)

    deltas = user_positions - bs_positions[:, None, :]
    distances = np.linalg.norm(deltas, axis=2)
    departure_angles = np.arctan2(deltas[..., 1], deltas[..., 0])
    return Topology(bs_positions, user_positions, distances, departure_angles)


def generate_channels(carrier, topology):
    """Build the (B, U, N_T) channel tensor for a sampled topology."""
    num_bs, users = topology.distances.shape
    vectors = np.zeros((num_bs, users, carrier.num_tx_antennas), dtype=complex)
    for b in range(num_bs):
        for u in range(users):
            vectors[b, u] = channel_vector(
                carrier, topology.distances[b, u], topology.departure_angles[b, u]
            )
    return ChannelSet(vectors=vectors, topology=topology)
