"""Interacting-particle diffusions of types A/B/D and their high-coupling limits."""

__version__ = "0.1.0"

from .chamber import (
    BoundaryPoint,
    ChamberPoint,
    MissingNu,
    Multiplicity,
    RootSystemSpec,
    boundary_gap,
    drift,
    log_weight,
)
from .polyroots import (
    AlphaOutOfRange,
    FixedPointResult,
    NoConvergence,
    SizeOutOfRange,
    fixed_point_from_zeros,
    frozen_fixed_point,
    frozen_objective,
    hermite_zeros,
    laguerre_zeros,
)
from .freeze_ode import (
    FreezingRegime,
    StepFailure,
    Trajectory,
    UnsupportedRegime,
    explicit_solution,
    frozen_field,
    min_gap_profile,
    ode_solve,
    self_similar_profile,
)
from .bessel_sde import (
    ConfigInvalid,
    GridMismatch,
    PathResult,
    SimConfig,
    TerminalSample,
    lln_error,
    path_seed,
    simulate_normalized,
    simulate_path,
    simulate_terminal,
)
from .validate import (
    NormalPrediction,
    SampleSet,
    ShapeError,
    clt_b2_centering,
    clt_b2_prediction,
    clt_squared_prediction,
    figure1_experiment,
    ks_one_sample_normal,
    ks_two_sample,
    norm_clt_centering,
    norm_clt_prediction,
    oracle_chi_square_1d,
    oracle_wishart,
)

__all__ = [name for name in dir() if not name.startswith("_")]
