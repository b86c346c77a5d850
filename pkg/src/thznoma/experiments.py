"""Experiment families and CSV emission.

Each experiment sweeps one parameter across seeded replicates and emits one
raw CSV row per (seed, sweep point, scheme), plus a companion summary file
with per-point means and standard deviations. Rows are written in seed-major
order so a (config, seed set) pair fully determines the output bytes.
"""

import csv
from dataclasses import dataclass, replace

import numpy as np

from .allocation import allocate_power_admm, equal_power, oma_solution, random_power
from .channel import generate_channels, sample_topology
from .clustering import CLUSTERING_SCHEMES, make_clustering
from .pipeline import _stage_seeds, prepare_link_model, run_pipeline

DEFAULT_PHI_SWEEP = (0.0, 0.0025, 0.005, 0.0075, 0.01)
DEFAULT_MU_SWEEP = (0.01, 0.05)
DEFAULT_USER_SWEEP = (4, 8, 12, 16, 20)
DEFAULT_ANTENNA_SWEEP = (32, 64, 128)
DEFAULT_CACHE_SWEEP = (0.0, 0.3, 0.6, 0.9)


@dataclass
class ExperimentResult:
    experiment_id: str
    sweep_name: str
    columns: list
    rows: list  # list of dicts, seed-major order
    summary: list  # list of dicts

    def mean_over_seeds(self, value_column, **filters):
        """Mean of one column across replicates matching the given filters."""
        values = [
            row[value_column]
            for row in self.rows
            if all(row.get(k) == v for k, v in filters.items())
        ]
        if not values:
            raise KeyError(f"no rows match {filters!r}")
        return float(np.mean(values))


def _solution_row(seed, sweep_name, sweep_value, solution, scheme=None, mse=None):
    row = {
        "seed": seed,
        sweep_name: sweep_value,
        "ee_bits_per_joule": solution.ee,
        "sum_rate_bps": solution.sum_rate_bps,
        "outer_iters": solution.outer_iterations,
        "inner_iters_total": solution.inner_iterations_total,
        "feasible": solution.feasible,
    }
    if scheme is not None:
        row["scheme"] = scheme
    if mse is not None:
        row["mse"] = mse
    return row


def _seeds(cfg, replicates):
    n = cfg.replicates if replicates is None else replicates
    if n < 1:
        raise ValueError(f"replicates must be >= 1, got {n}")
    return [cfg.master_seed + i for i in range(n)]


def _mse_convergence(cfg, sweep_values, replicates, schemes):
    """Per-iteration clustering MSE for each scheme (flat after convergence)."""
    schemes = schemes or list(CLUSTERING_SCHEMES)
    max_iters = int(max(sweep_values)) if sweep_values else 10
    rows = []
    for seed in _seeds(cfg, replicates):
        seeds = _stage_seeds(seed)
        topology = sample_topology(cfg.geometry, seeds["topology"])
        channels = generate_channels(cfg.carrier, topology)
        for scheme in schemes:
            traces = []
            for b in range(cfg.geometry.num_bs):
                est = make_clustering(
                    scheme, cfg.num_clusters, random_state=seeds["clustering"] + b
                )
                if hasattr(est, "max_iter"):
                    est.set_params(max_iter=cfg.clustering_max_iter)
                est.fit(channels.vectors[b])
                traces.append(est.mse_trace_)
            for iteration in range(1, max_iters + 1):
                # Converged schemes hold their final MSE.
                value = float(
                    np.mean([t[min(iteration, len(t)) - 1] for t in traces])
                )
                rows.append(
                    {
                        "seed": seed,
                        "iteration": iteration,
                        "scheme": scheme,
                        "mse": value,
                    }
                )
    return rows


def _ee_vs_phi(cfg, sweep_values, replicates, schemes):
    """EE after re-solving at each SIC cancellation error, per clustering scheme."""
    schemes = schemes or ["enhanced", "kmeans", "random"]
    rows = []
    for seed in _seeds(cfg, replicates):
        for phi in sweep_values:
            cfg_phi = replace(cfg, sic_error=float(phi))
            for scheme in schemes:
                result = run_pipeline(cfg_phi, seed, clustering_scheme=scheme)
                rows.append(
                    _solution_row(
                        seed, "sic_error", phi, result.solution,
                        scheme=scheme, mse=result.mse,
                    )
                )
    return rows


def _admm_convergence(cfg, sweep_values, replicates, schemes):
    """Dinkelbach EE trace per outer iteration for each penalty parameter."""
    rows = []
    for seed in _seeds(cfg, replicates):
        for mu in sweep_values:
            cfg_mu = replace(cfg, solver=replace(cfg.solver, mu=float(mu)))
            result = run_pipeline(cfg_mu, seed)
            sol = result.solution
            for iteration, eta in enumerate(sol.dinkelbach_trace):
                rows.append(
                    {
                        "seed": seed,
                        "mu": mu,
                        "iteration": iteration,
                        "ee_bits_per_joule": eta,
                        "outer_iters": sol.outer_iterations,
                        "inner_iters_total": sol.inner_iterations_total,
                        "feasible": sol.feasible,
                    }
                )
    return rows


def _ee_vs_users(cfg, sweep_values, replicates, schemes):
    """NOMA (optimized) vs FDMA reference as the per-BS user count grows.

    Runs with four clusters (capped by the user count) regardless of the
    scenario default, so sweep points stay comparable.
    """
    schemes = schemes or ["noma", "oma"]
    rows = []
    for seed in _seeds(cfg, replicates):
        for users in sweep_values:
            users = int(users)
            clusters = min(4, users)
            cfg_u = replace(
                cfg,
                geometry=replace(cfg.geometry, users_per_bs=users),
                num_clusters=clusters,
                num_rf_chains=clusters,
            )
            channels, clusterings, precoders, model = prepare_link_model(cfg_u, seed)
            if "noma" in schemes:
                solution = allocate_power_admm(model, cfg_u.solver)
                rows.append(
                    _solution_row(seed, "users_per_bs", users, solution, scheme="noma")
                )
            if "oma" in schemes:
                rows.append(
                    _solution_row(
                        seed, "users_per_bs", users, oma_solution(model), scheme="oma"
                    )
                )
    return rows


def _ee_vs_antennas_precoding(cfg, sweep_values, replicates, schemes):
    """Architecture and phase-shifter resolution comparison across array sizes."""
    schemes = schemes or ["hybrid-q2", "hybrid-q6", "full-digital"]
    rows = []
    for seed in _seeds(cfg, replicates):
        for n_t in sweep_values:
            n_t = int(n_t)
            for scheme in schemes:
                if scheme == "full-digital":
                    cfg_nt = replace(
                        cfg,
                        carrier=replace(cfg.carrier, num_tx_antennas=n_t),
                        architecture="full-digital",
                    )
                elif scheme.startswith("hybrid-q"):
                    bits = int(scheme.split("hybrid-q")[1])
                    cfg_nt = replace(
                        cfg,
                        carrier=replace(cfg.carrier, num_tx_antennas=n_t),
                        architecture="sub-connected",
                        quant_bits=bits,
                    )
                else:
                    raise ValueError(f"unknown precoding scheme {scheme!r}")
                result = run_pipeline(cfg_nt, seed)
                rows.append(
                    _solution_row(
                        seed, "num_tx_antennas", n_t, result.solution, scheme=scheme
                    )
                )
    return rows


def _ee_vs_antennas_power(cfg, sweep_values, replicates, schemes):
    """Power-allocation comparison (optimized, equal, random) across array sizes."""
    schemes = schemes or ["admm", "equal", "random"]
    rows = []
    for seed in _seeds(cfg, replicates):
        for n_t in sweep_values:
            n_t = int(n_t)
            cfg_nt = replace(cfg, carrier=replace(cfg.carrier, num_tx_antennas=n_t))
            channels, clusterings, precoders, model = prepare_link_model(cfg_nt, seed)
            solutions = {}
            if "admm" in schemes:
                solutions["admm"] = allocate_power_admm(model, cfg_nt.solver)
            if "equal" in schemes:
                solutions["equal"] = equal_power(model)
            if "random" in schemes:
                solutions["random"] = random_power(model, seed)
            for scheme in schemes:
                rows.append(
                    _solution_row(
                        seed, "num_tx_antennas", n_t, solutions[scheme], scheme=scheme
                    )
                )
    return rows


def _ee_vs_cache(cfg, sweep_values, replicates, schemes):
    """EE after re-solving at each cache-efficiency coefficient."""
    rows = []
    for seed in _seeds(cfg, replicates):
        for eff in sweep_values:
            cfg_f = replace(cfg, cache=replace(cfg.cache, cache_efficiency=float(eff)))
            result = run_pipeline(cfg_f, seed)
            rows.append(
                _solution_row(seed, "cache_efficiency", eff, result.solution)
            )
    return rows


@dataclass(frozen=True)
class _ExperimentSpec:
    sweep_name: str
    default_sweep: tuple
    columns: tuple
    runner: object


EXPERIMENTS = {
    "mse-convergence": _ExperimentSpec(
        "iteration",
        tuple(range(1, 11)),
        ("seed", "iteration", "scheme", "mse"),
        _mse_convergence,
    ),
    "ee-vs-phi": _ExperimentSpec(
        "sic_error",
        DEFAULT_PHI_SWEEP,
        (
            "seed",
            "sic_error",
            "scheme",
            "ee_bits_per_joule",
            "sum_rate_bps",
            "mse",
            "outer_iters",
            "inner_iters_total",
            "feasible",
        ),
        _ee_vs_phi,
    ),
    "admm-convergence": _ExperimentSpec(
        "mu",
        DEFAULT_MU_SWEEP,
        (
            "seed",
            "mu",
            "iteration",
            "ee_bits_per_joule",
            "outer_iters",
            "inner_iters_total",
            "feasible",
        ),
        _admm_convergence,
    ),
    "ee-vs-users": _ExperimentSpec(
        "users_per_bs",
        DEFAULT_USER_SWEEP,
        (
            "seed",
            "users_per_bs",
            "scheme",
            "ee_bits_per_joule",
            "sum_rate_bps",
            "outer_iters",
            "inner_iters_total",
            "feasible",
        ),
        _ee_vs_users,
    ),
    "ee-vs-antennas-precoding": _ExperimentSpec(
        "num_tx_antennas",
        DEFAULT_ANTENNA_SWEEP,
        (
            "seed",
            "num_tx_antennas",
            "scheme",
            "ee_bits_per_joule",
            "sum_rate_bps",
            "outer_iters",
            "inner_iters_total",
            "feasible",
        ),
        _ee_vs_antennas_precoding,
    ),
    "ee-vs-antennas-power": _ExperimentSpec(
        "num_tx_antennas",
        DEFAULT_ANTENNA_SWEEP,
        (
            "seed",
            "num_tx_antennas",
            "scheme",
            "ee_bits_per_joule",
            "sum_rate_bps",
            "outer_iters",
            "inner_iters_total",
            "feasible",
        ),
        _ee_vs_antennas_power,
    ),
    "ee-vs-cache": _ExperimentSpec(
        "cache_efficiency",
        DEFAULT_CACHE_SWEEP,
        (
            "seed",
            "cache_efficiency",
            "ee_bits_per_joule",
            "sum_rate_bps",
            "outer_iters",
            "inner_iters_total",
            "feasible",
        ),
        _ee_vs_cache,
    ),
}


def run_experiment(experiment_id, cfg, sweep_values=None, replicates=None,
                   schemes=None):
    """Run one experiment family and aggregate replicate statistics."""
    try:
        spec = EXPERIMENTS[experiment_id]
    except KeyError:
        raise ValueError(
            f"unknown experiment {experiment_id!r}; "
            f"expected one of {sorted(EXPERIMENTS)}"
        ) from None
    sweep = tuple(sweep_values) if sweep_values is not None else spec.default_sweep
    if len(sweep) == 0:
        raise ValueError("sweep must contain at least one value")
    rows = spec.runner(cfg, sweep, replicates, schemes)
    summary = _summarize(spec, rows)
    return ExperimentResult(
        experiment_id=experiment_id,
        sweep_name=spec.sweep_name,
        columns=list(spec.columns),
        rows=rows,
        summary=summary,
    )


def _summarize(spec, rows):
    metric_cols = [
        c
        for c in spec.columns
        if c not in ("seed", "scheme", "feasible", spec.sweep_name)
    ]
    groups = {}
    for row in rows:
        key = (row[spec.sweep_name], row.get("scheme"))
        groups.setdefault(key, []).append(row)
    summary = []
    for (value, scheme), members in groups.items():
        entry = {spec.sweep_name: value, "n": len(members)}
        if scheme is not None:
            entry["scheme"] = scheme
        for col in metric_cols:
            data = np.array([m[col] for m in members], dtype=float)
            entry[f"mean_{col}"] = float(data.mean())
            entry[f"std_{col}"] = float(data.std())
        summary.append(entry)
    return summary


def _format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def write_csv(result, path):
    """Write raw rows to `path` and the aggregate to `<path minus .csv>.summary.csv`."""
    columns = [c for c in result.columns if any(c in row for row in result.rows)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in result.rows:
            writer.writerow([_format_cell(row.get(c, "")) for c in columns])
    summary_path = _summary_path(path)
    if result.summary:
        summary_cols = list(result.summary[0].keys())
        with open(summary_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(summary_cols)
            for row in result.summary:
                writer.writerow([_format_cell(row.get(c, "")) for c in summary_cols])
    return summary_path


def _summary_path(path):
    text = str(path)
    if text.endswith(".csv"):
        return text[: -len(".csv")] + ".summary.csv"
    return text + ".summary.csv"
