"""3DVAR filtering for the partially observed Lorenz '63 model."""

from .bounds import (
    BoundReport,
    asymptotic_bounds,
    find_lambda_discrete,
    lambda_continuous,
    lemma_sim_bounds,
    m1,
    m2,
    m_max,
    pathwise_separation_bound,
)
from .dynamics import CLASSICAL, LorenzParams, Trajectory, bilinear_B, solve, spin_up, vector_field
from .errors import (
    ConfigError,
    DegenerateParams,
    Divergence,
    GridMismatch,
    MissingColumn,
    NoContraction,
    SingularInnovation,
    ThreeDVarError,
)
from .filter_continuous import FilterConfigContinuous, run_continuous
from .filter_discrete import ErrorSeries, FilterConfigDiscrete, assimilate, run_filter
from .observation import ObsConfig, observe_continuous, observe_discrete

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "CLASSICAL", "ConfigError", "DegenerateParams", "Divergence", "ErrorSeries",
    "FilterConfigContinuous", "FilterConfigDiscrete", "GridMismatch", "LorenzParams",
    "MissingColumn", "NoContraction", "ObsConfig", "SingularInnovation", "ThreeDVarError",
    "Trajectory", "assimilate", "asymptotic_bounds", "bilinear_B", "find_lambda_discrete",
    "lambda_continuous", "lemma_sim_bounds", "m1", "m2", "m_max", "observe_continuous",
    "observe_discrete", "pathwise_separation_bound", "run_continuous", "run_filter", "solve",
    "spin_up", "vector_field",
]
