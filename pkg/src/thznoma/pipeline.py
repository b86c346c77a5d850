"""End-to-end pipeline: geometry -> channels -> clustering -> precoding -> power."""

from dataclasses import dataclass

import numpy as np

from .allocation import allocate_power_admm, build_link_model
from .channel import generate_channels, sample_topology
from .clustering import clustering_mse, make_clustering
from .precoding import make_precoder


@dataclass
class PipelineResult:
    """Everything produced by one seeded end-to-end run."""

    config: object
    seed: int
    channels: object
    clusterings: list  # fitted estimator per BS
    precoders: list  # fitted precoder per BS
    link_model: object
    solution: object  # PowerSolution

    @property
    def mse(self):
        """Average clustering MSE across BSs."""
        values = [
            clustering_mse(self.channels.vectors[b], est.labels_, est.cluster_heads_)
            for b, est in enumerate(self.clusterings)
        ]
        return float(np.mean(values))

    def metrics(self):
        sol = self.solution
        return {
            "seed": self.seed,
            "ee_bits_per_joule": sol.ee,
            "sum_rate_bps": sol.sum_rate_bps,
            "mse": self.mse,
            "outer_iters": sol.outer_iterations,
            "inner_iters_total": sol.inner_iterations_total,
            "feasible": sol.feasible,
        }


def _stage_seeds(seed):
    """Independent per-stage seeds derived from the run seed."""
    children = np.random.SeedSequence(seed).spawn(3)
    return {
        "topology": children[0],
        "clustering": int(children[1].generate_state(1)[0]),
        "power": int(children[2].generate_state(1)[0]),
    }


class PipelineStageError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:
        raise PipelineStageError(f"stage '{name}' failed: {exc}") from exc


def prepare_link_model(cfg, seed, clustering_scheme=None):
    """Run the deterministic front half of the pipeline for one seed.

    Returns (channels, fitted clusterings, fitted precoders, link model).
    """
    seeds = _stage_seeds(seed)
    topology = _stage("topology", sample_topology, cfg.geometry, seeds["topology"])
    channels = _stage("channel", generate_channels, cfg.carrier, topology)
    scheme = clustering_scheme or cfg.clustering_scheme
    clusterings = []
    precoders = []
    labels_per_bs = []
    for b in range(cfg.geometry.num_bs):
        estimator = make_clustering(
            scheme, cfg.num_clusters, random_state=seeds["clustering"] + b
        )
        if hasattr(estimator, "max_iter"):
            estimator.set_params(max_iter=cfg.clustering_max_iter)
        _stage("clustering", estimator.fit, channels.vectors[b])
        clusterings.append(estimator)
        labels_per_bs.append(estimator.labels_)
        precoder = make_precoder(cfg.architecture, cfg.quant_bits)
        _stage("precoding", precoder.fit, estimator.cluster_heads_)
        precoders.append(precoder)
    model = _stage(
        "link-model",
        build_link_model,
        channels,
        labels_per_bs,
        precoders,
        bandwidth_hz=cfg.carrier.bandwidth_hz,
        num_clusters=cfg.num_clusters,
        noise_psd_dbm_hz=cfg.carrier.noise_psd_dbm_hz,
        cache=cfg.cache,
        power_params=cfg.power_model,
        sic_error=cfg.sic_error,
        quant_bits=cfg.quant_bits,
        architecture=cfg.architecture,
    )
    return channels, clusterings, precoders, model


def run_pipeline(cfg, seed, clustering_scheme=None):
    """Full seeded run: returns the PipelineResult with the ADMM solution."""
    channels, clusterings, precoders, model = prepare_link_model(
        cfg, seed, clustering_scheme
    )
    solution = _stage("power-allocation", allocate_power_admm, model, cfg.solver)
    return PipelineResult(
        config=cfg,
        seed=seed,
        channels=channels,
        clusterings=clusterings,
        precoders=precoders,
        link_model=model,
        solution=solution,
    )
