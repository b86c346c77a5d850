"""Link-level simulator and EE optimizer for downlink THz MIMO-NOMA networks."""

from .allocation import (
    InfeasibleConstraintsError,
    LinkModel,
    PowerSolution,
    SolverParams,
    allocate_power_admm,
    build_link_model,
    equal_power,
    oma_rates,
    oma_solution,
    random_power,
)
from .channel import (
    CarrierConfig,
    ChannelSet,
    Geometry,
    Topology,
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
from .clustering import (
    ClusterHeadSelection,
    CorrelationKMeans,
    EnhancedKMeans,
    RandomClustering,
    channel_correlation,
    clustering_mse,
    make_clustering,
)
from .config import ConfigError, ScenarioConfig, load_config
from .experiments import EXPERIMENTS, run_experiment, write_csv
from .pipeline import PipelineResult, PipelineStageError, prepare_link_model, run_pipeline
from .power import (
    CacheModel,
    PowerModelParams,
    cache_efficiency_from_state,
    circuit_power,
    dinkelbach_value,
    energy_efficiency,
    fronthaul_rate,
    sinr_imperfect,
    total_power,
    user_rate,
)
from .precoding import (
    DegenerateClusteringError,
    EffectiveGains,
    FullDigitalZF,
    SubConnectedPrecoder,
    build_analog_precoder,
    effective_gains,
    equivalent_channel,
    normalize_columns,
    quantize_phase,
    zf_precoder,
)

__version__ = "0.1.0"
