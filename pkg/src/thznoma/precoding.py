"""Sub-connected hybrid precoding with quantized phase shifters.

The analog stage is block-diagonal: each RF chain drives a disjoint antenna
subarray whose phase shifters copy the (quantized) phases of that cluster's
head channel. The digital stage zero-forces the low-dimensional equivalent
channel of the cluster heads and is column-normalized so each beam radiates
unit power. A full-digital ZF variant backs the architecture comparison.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .validation import check_channel_matrix, require_count

# Equivalent channels with a reciprocal condition number below this are
# treated as a degenerate clustering rather than inverted blindly.
ZF_RCOND_LIMIT = 1e-10


class DegenerateClusteringError(RuntimeError):
    """Cluster heads are too aligned for zero-forcing to be meaningful."""


def quantize_phase(target_rad, q_bits):
    """Index of the 2^Q-point phase grid closest to `target_rad`.

    Distance is measured on the circle; ties go to the smallest index.
    """
    q_bits = require_count("q_bits", q_bits)
    grid = 2.0 * np.pi * np.arange(2**q_bits) / (2**q_bits)
    diff = np.mod(target_rad - grid + np.pi, 2.0 * np.pi) - np.pi
    return int(np.argmin(np.abs(diff)))


def build_analog_precoder(heads, num_rf_chains, q_bits):
    """Block-diagonal analog precoder (N_T x N_R) from cluster head phases.

    Block n holds the subarray of RF chain n; its entries have modulus
    1/sqrt(N_T / N_R) and quantized phases matching head n's antenna
    elements within the block.
    """
    heads = check_channel_matrix(heads)
    n_r = require_count("num_rf_chains", num_rf_chains)
    if heads.shape[0] != n_r:
        raise ValueError(
            f"need one head per RF chain: {heads.shape[0]} heads, {n_r} chains"
        )
    n_t = heads.shape[1]
    if n_t % n_r != 0:
        raise ValueError(f"num_tx_antennas {n_t} not divisible by num_rf_chains {n_r}")
    n_sub = n_t // n_r
    levels = 2 ** require_count("q_bits", q_bits)
    analog = np.zeros((n_t, n_r), dtype=complex)
    indices = np.zeros((n_r, n_sub), dtype=int)
    for n in range(n_r):
        rows = slice(n * n_sub, (n + 1) * n_sub)
        angles = np.angle(heads[n, rows])
        omega = np.array([quantize_phase(a, q_bits) for a in angles])
        indices[n] = omega
        analog[rows, n] = np.exp(2j * np.pi * omega / levels) / np.sqrt(n_sub)
    return analog, indices


def equivalent_channel(heads, analog):
    """Low-dimensional equivalent channel: row n is head_n through the analog stage.

    Rows are the conjugated head channels times the analog matrix, i.e. the
    receive-side product h^H A. The analog phases copy the head phases, so
    this product combines each subarray coherently (the matched-filter
    reading; a plain h A product would cancel the array gain the analog
    stage exists to provide).
    """
    return np.asarray(heads, dtype=complex).conj() @ analog


def zf_precoder(eq_channel):
    """Right pseudo-inverse H^H (H H^H)^-1 of the equivalent channel.

    Raises DegenerateClusteringError when the rows are (numerically)
    linearly dependent, which happens when cluster heads coincide.
    """
    eq = np.asarray(eq_channel, dtype=complex)
    singular = np.linalg.svd(eq, compute_uv=False)
    if singular[0] == 0 or singular[-1] / singular[0] < ZF_RCOND_LIMIT:
        raise DegenerateClusteringError(
            "equivalent channel is rank-deficient; cluster heads are degenerate"
        )
    gram = eq @ eq.conj().T
    return eq.conj().T @ np.linalg.inv(gram)


def normalize_columns(analog, digital):
    """Scale each digital column so the cascaded beam A @ d has unit power."""
    cascade = analog @ digital
    norms = np.linalg.norm(cascade, axis=0)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero precoding column")
    return digital / norms


@dataclass(frozen=True)
class EffectiveGains:
    """Per-user beam gains and the SIC decoding order for one BS.

    gain_matrix[u, m] = |h_u A d_m|^2 with u in original user order;
    labels[u] is u's cluster; order[n] lists cluster n's users strongest
    first (ties keep original index order).
    """

    gain_matrix: np.ndarray
    labels: np.ndarray
    order: tuple = field(default_factory=tuple)

    @property
    def own_gains(self):
        return self.gain_matrix[np.arange(self.gain_matrix.shape[0]), self.labels]


def effective_gains(channels, labels, analog, digital):
    """Gains of every user through every beam, plus per-cluster SIC order.

    gain = |h^H A d|^2, matching the conjugated equivalent-channel product.
    """
    channels = check_channel_matrix(channels)
    beams = analog @ digital  # (N_T, N)
    gain_matrix = np.abs(channels.conj() @ beams) ** 2
    labels = np.asarray(labels, dtype=int)
    own = gain_matrix[np.arange(channels.shape[0]), labels]
    order = []
    for n in range(digital.shape[1]):
        members = np.flatnonzero(labels == n)
        ranked = members[np.argsort(-own[members], kind="stable")]
        order.append(ranked)
    return EffectiveGains(gain_matrix=gain_matrix, labels=labels, order=tuple(order))


class SubConnectedPrecoder(BaseEstimator):
    """Hybrid precoder fitted to a set of cluster head channels.

    After ``fit(heads)`` exposes ``analog_`` (N_T x N_R block-diagonal),
    ``digital_raw_`` (zero-forcing columns before normalization) and
    ``digital_`` (unit-beam-power columns).
    """

    architecture = "sub-connected"

    def __init__(self, quant_bits=4):
        self.quant_bits = quant_bits

    def fit(self, heads, y=None):
        heads = check_channel_matrix(heads)
        self.analog_, self.phase_indices_ = build_analog_precoder(
            heads, heads.shape[0], self.quant_bits
        )
        eq = equivalent_channel(heads, self.analog_)
        self.equivalent_channel_ = eq
        self.digital_raw_ = zf_precoder(eq)
        self.digital_ = normalize_columns(self.analog_, self.digital_raw_)
        return self

    def effective_gains(self, channels, labels):
        if not hasattr(self, "digital_"):
            raise NotFittedError("precoder must be fitted before computing gains")
        return effective_gains(channels, labels, self.analog_, self.digital_)


class FullDigitalZF(BaseEstimator):
    """Full-digital zero-forcing baseline: one RF chain per antenna.

    The analog stage is the identity; the digital columns zero-force the
    head channels directly. Used for the architecture comparison, paired
    with a circuit model of N_T RF chains and no phase shifters.
    """

    architecture = "full-digital"

    def __init__(self):
        pass

    def fit(self, heads, y=None):
        heads = check_channel_matrix(heads)
        n_t = heads.shape[1]
        self.analog_ = np.eye(n_t, dtype=complex)
        eq = equivalent_channel(heads, self.analog_)
        self.equivalent_channel_ = eq
        self.digital_raw_ = zf_precoder(eq)
        self.digital_ = normalize_columns(self.analog_, self.digital_raw_)
        return self

    def effective_gains(self, channels, labels):
        if not hasattr(self, "digital_"):
            raise NotFittedError("precoder must be fitted before computing gains")
        return effective_gains(channels, labels, self.analog_, self.digital_)


def make_precoder(architecture, quant_bits=4):
    """Instantiate a precoder by architecture name."""
    if architecture == "sub-connected":
        return SubConnectedPrecoder(quant_bits=quant_bits)
    if architecture == "full-digital":
        return FullDigitalZF()
    raise ValueError(
        f"unknown architecture {architecture!r}; "
        "expected 'sub-connected' or 'full-digital'"
    )
