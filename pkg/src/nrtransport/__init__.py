"""Deterministic desk-scale studies of 5G links for vehicles and trains.

Four studies share one toolkit: highway sensor-fusion positioning, multi-TRP
rail downlink throughput, macro-cell path-gain-drop scheduling, and
throughput-prediction error analysis. Everything is reproducible from a
(config, seed) pair via counter-based random substreams.
"""

from .channel import (
    SPEED_OF_LIGHT,
    BeamGrid,
    ChannelTaps,
    FreqResponse,
    MacroParams,
    SectorPattern,
    TapProfile,
    combined_freq_response,
    default_rail_profile,
    hst_taps,
    los_observation,
    macro_pathgain,
    make_beam_grid,
)
from .config import RunConfig, load_config, parse_config
from .errors import ConfigurationError, EstimationError, GeometryError, NumericalError
from .hst import (
    HstLinkParams,
    Mcs,
    Numerology,
    Scheme,
    SlotResult,
    bler,
    effective_snr,
    run_hst_sweep,
    throughput_vs_position,
    transport_block_size,
)
from .positioning import (
    EkfParams,
    ErrorCdf,
    MeasurementFrame,
    NoiseModel,
    StateEstimate,
    ekf_fuse,
    empirical_cdf,
    error_cdf,
    initial_state_from_frame,
    nr_only_position,
    simulate_measurements,
)
from .qos import (
    PredictionRecord,
    ThroughputTrace,
    horizon_cdfs,
    horizon_errors,
    predict,
    prediction_error,
    window_bits,
)
from .rng import substream
from .runner import RunManifest, run
from .scenario import (
    ArrayGeometry,
    Deployment,
    PoseSample,
    ScenarioKind,
    Site,
    Trajectory,
    build_linear_deployment,
    build_rail_deployment,
    linear_trajectory,
    snake_trajectory,
)
from .scheduler import (
    CellParams,
    DropPolicy,
    TrafficConfig,
    UserRecord,
    classify_users,
    density_sweep,
    file_transfer_report,
    mean_user_throughput,
    median_file_time,
    simulate_cell,
)

__version__ = "0.1.0"
