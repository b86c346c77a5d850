import numpy as np
import pytest

from thznoma.allocation import LinkModel
from thznoma.power import CacheModel, PowerModelParams, circuit_power
from thznoma.precoding import EffectiveGains


def make_toy_model(
    gain_matrix,
    labels,
    *,
    bandwidth_hz=10e9,
    noise_psd_dbm_hz=-174.0,
    sic_error=0.005,
    cache_efficiency=0.3,
    fronthaul_capacity_bps=1e12,
    power_params=None,
):
    """Link model over synthetic beam gains for one BS."""
    gain_matrix = np.asarray(gain_matrix, dtype=float)
    labels = np.asarray(labels, dtype=int)
    num_clusters = gain_matrix.shape[1]
    own = gain_matrix[np.arange(len(labels)), labels]
    order = []
    for n in range(num_clusters):
        members = np.flatnonzero(labels == n)
        order.append(members[np.argsort(-own[members], kind="stable")])
    gains = EffectiveGains(gain_matrix=gain_matrix, labels=labels, order=tuple(order))
    params = power_params or PowerModelParams()
    circuit = circuit_power(params, 64, num_clusters, 4, "sub-connected")
    return LinkModel(
        [gains],
        bandwidth_hz=bandwidth_hz,
        num_clusters=num_clusters,
        noise_psd_dbm_hz=noise_psd_dbm_hz,
        cache=CacheModel(cache_efficiency, fronthaul_capacity_bps),
        power_params=params,
        sic_error=sic_error,
        circuit_w=circuit,
    )


@pytest.fixture
def toy_one_cluster():
    """Two users sharing a single beam: strong gain 2e-7, weak 3e-8."""
    return make_toy_model([[2e-7], [3e-8]], [0, 0])


@pytest.fixture
def toy_two_clusters():
    """One user per beam with significant cross-beam leakage."""
    return make_toy_model([[1.5e-7, 2.0e-8], [1.0e-8, 9e-8]], [0, 1])
