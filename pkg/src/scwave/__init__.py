"""Toolkit for non-uniformly coupled SC-LDPC ensembles on the BEC:
density evolution, decoding-wave speed, smoothing-profile optimization,
finite-length code construction and windowed-decoding simulation."""

__version__ = "0.1.0"

from .density import (
    CONVERGENCE_CUTOFF,
    DensityProfile,
    DERunReport,
    HistoryPolicy,
    bp_threshold,
    de_run,
    de_step,
)
from .ensemble import (
    EnsembleError,
    EnsembleSpec,
    RateReport,
    SmoothingProfile,
    ValidationResult,
    design_rate,
    load_spec,
    save_spec,
    validate_spec,
)
from .fixtures import FixtureRow, check_fixtures, fixture, load_fixtures
from .optimizer import (
    BestPerDegreeReport,
    InitializationError,
    OptimizationResult,
    OptimizerConfig,
    OptimizerState,
    evolve,
    f_sat,
    optimize_over_degrees,
    optimize_profile,
    optimize_w2_alpha,
    sample_initial_population,
)
from .sampler import (
    CodeGraph,
    edge_type_counts,
    export_alist,
    import_alist,
    realized_rate,
    sample_code,
)
from .simulate import (
    ChannelModel,
    DecodeResult,
    DecoderSetup,
    SimReport,
    run_sweep,
    run_sweep_on_graph,
    transmit,
    wilson_interval,
    windowed_de_residual,
    windowed_decode,
    windowed_threshold,
)
from .wave import (
    CostReport,
    SpeedEstimate,
    WavePosition,
    canonical_spec,
    front_arrival_cost,
    front_arrival_speed,
    speed_displacement,
    sweep_out_cost,
    wave_position,
)
