"""Scenario configuration: defaults, file loading, and validation.

Config files are plain text with one flat dotted key per line, e.g.::

    carrier.frequency_hz = 0.34e12
    network.num_clusters = 4
    # comments and blank lines are ignored

Unset keys keep their defaults (the simulation parameters of the reference
scenario: 0.34 THz carrier, 10 GHz bandwidth, -174 dBm/Hz noise PSD, two
SBSs with 15 users in a 5 m cell, 5 W budget, cache efficiency 0.3).
"""

from dataclasses import dataclass, field, replace

from .allocation import SolverParams
from .channel import CarrierConfig, Geometry
from .power import CacheModel, PowerModelParams
from .validation import require_count, require_fraction

ARCHITECTURES = ("sub-connected", "full-digital")
CLUSTERING_SCHEMES = ("enhanced", "kmeans", "chs", "random")


class ConfigError(ValueError):
    """Invalid or unparsable scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    carrier: CarrierConfig = field(default_factory=CarrierConfig)
    geometry: Geometry = field(default_factory=Geometry)
    num_clusters: int = 2
    num_rf_chains: int = 2
    quant_bits: int = 4
    architecture: str = "sub-connected"
    clustering_scheme: str = "enhanced"
    clustering_max_iter: int = 100
    power_model: PowerModelParams = field(default_factory=PowerModelParams)
    cache: CacheModel = field(default_factory=CacheModel)
    sic_error: float = 0.005
    solver: SolverParams = field(default_factory=SolverParams)
    replicates: int = 20
    master_seed: int = 0

    def __post_init__(self):
        require_count("num_clusters", self.num_clusters)
        require_count("num_rf_chains", self.num_rf_chains)
        require_count("quant_bits", self.quant_bits)
        require_count("clustering_max_iter", self.clustering_max_iter)
        require_count("replicates", self.replicates)
        require_fraction("sic_error", self.sic_error)
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(
                f"network.architecture must be one of {ARCHITECTURES}, "
                f"got {self.architecture!r}"
            )
        if self.clustering_scheme not in CLUSTERING_SCHEMES:
            raise ConfigError(
                f"network.clustering_scheme must be one of {CLUSTERING_SCHEMES}, "
                f"got {self.clustering_scheme!r}"
            )
        if self.num_rf_chains != self.num_clusters:
            raise ConfigError(
                "network.num_rf_chains must equal network.num_clusters "
                f"(one RF chain per beam): {self.num_rf_chains} != {self.num_clusters}"
            )
        if self.carrier.num_tx_antennas % self.num_rf_chains != 0:
            raise ConfigError(
                f"carrier.num_tx_antennas N_T not divisible by N_R: "
                f"{self.carrier.num_tx_antennas} % {self.num_rf_chains} != 0"
            )
        if self.geometry.users_per_bs < self.num_clusters:
            raise ConfigError(
                "geometry.users_per_bs must be at least network.num_clusters"
            )


# key -> (section attribute on ScenarioConfig, field name, parser)
def _parse_int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _parse_str(text):
    return text.strip().strip("'\"")


_KEYMAP = {
    "carrier.frequency_hz": ("carrier", "frequency_hz", float),
    "carrier.bandwidth_hz": ("carrier", "bandwidth_hz", float),
    "carrier.noise_psd_dbm_hz": ("carrier", "noise_psd_dbm_hz", float),
    "carrier.absorption_coeff_per_m": ("carrier", "absorption_coeff_per_m", float),
    "carrier.antenna_gain": ("carrier", "antenna_gain", float),
    "carrier.num_tx_antennas": ("carrier", "num_tx_antennas", _parse_int),
    "geometry.num_bs": ("geometry", "num_bs", _parse_int),
    "geometry.users_per_bs": ("geometry", "users_per_bs", _parse_int),
    "geometry.radius_m": ("geometry", "radius_m", float),
    "geometry.min_bs_user_m": ("geometry", "min_bs_user_m", float),
    "geometry.min_user_spacing_m": ("geometry", "min_user_spacing_m", float),
    "network.num_clusters": (None, "num_clusters", _parse_int),
    "network.num_rf_chains": (None, "num_rf_chains", _parse_int),
    "network.quant_bits": (None, "quant_bits", _parse_int),
    "network.architecture": (None, "architecture", _parse_str),
    "network.clustering_scheme": (None, "clustering_scheme", _parse_str),
    "network.clustering_max_iter": (None, "clustering_max_iter", _parse_int),
    "power.p_baseband_w": ("power_model", "p_baseband_w", float),
    "power.p_rf_chain_w": ("power_model", "p_rf_chain_w", float),
    "power.p_phase_shifter_per_bit_w": (
        "power_model",
        "p_phase_shifter_per_bit_w",
        float,
    ),
    "power.p_amplifier_w": ("power_model", "p_amplifier_w", float),
    "power.pa_inefficiency": ("power_model", "pa_inefficiency", float),
    "power.p_max_w": ("power_model", "p_max_w", float),
    "cache.efficiency": ("cache", "cache_efficiency", float),
    "cache.fronthaul_capacity_bps": ("cache", "fronthaul_capacity_bps", float),
    "sic.cancellation_error": (None, "sic_error", float),
    "solver.mu": ("solver", "mu", float),
    "solver.dinkelbach_tol_rel": ("solver", "dinkelbach_tol_rel", float),
    "solver.max_outer_iterations": ("solver", "max_outer_iterations", _parse_int),
    "solver.admm_tol": ("solver", "admm_tol", float),
    "solver.max_inner_iterations": ("solver", "max_inner_iterations", _parse_int),
    "solver.x_update_tol": ("solver", "x_update_tol", float),
    "solver.x_update_max_steps": ("solver", "x_update_max_steps", _parse_int),
    "experiment.replicates": (None, "replicates", _parse_int),
    "experiment.master_seed": (None, "master_seed", _parse_int),
}


def config_from_overrides(overrides):
    """Build a validated ScenarioConfig from a {dotted key: raw value} dict."""
    sections = {}
    top = {}
    for key, raw in overrides.items():
        if key not in _KEYMAP:
            raise ConfigError(f"unknown configuration key {key!r}")
        section, name, parse = _KEYMAP[key]
        try:
            value = parse(raw) if isinstance(raw, str) else raw
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
        if section is None:
            top[name] = value
        else:
            sections.setdefault(section, {})[name] = value
    defaults = ScenarioConfig.__dataclass_fields__
    kwargs = dict(top)
    for section, values in sections.items():
        base = defaults[section].default_factory()
        try:
            kwargs[section] = replace(base, **values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid {section} settings: {exc}") from exc
    try:
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    """Parse and validate a scenario file; unset keys take the defaults."""
    overrides = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
        key, _, raw = text.partition("=")
        overrides[key.strip()] = raw.strip()
    return config_from_overrides(overrides)
