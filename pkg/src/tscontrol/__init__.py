"""Two-timescale control toolkit.

A linear plant driven by disturbances is steered by two action channels: a
fast one that can move every step and a slow one held constant over fixed
windows. The package provides the clairvoyant optimum, a decomposed
reflexive/predictive controller, lookahead-commitment controllers on the
single-timescale reduction, the associated performance bounds, and a
scenario harness with a CSV-emitting CLI.
"""

__version__ = "0.1.0"

from .system import (  # noqa: F401
    CostSpec,
    NormCost,
    QuadFloor,
    SystemSpec,
    Trajectory,
    expand_slow_actions,
    roll_forward,
    trajectory_cost,
    dynamics_residual,
)
from .norms import induced_norm, norm_equivalence_constant, vec_norm  # noqa: F401
from .program import (  # noqa: F401
    AffineNormProgram,
    DegenerateProgramError,
    MaxIterationsError,
    NormTerm,
    QuadTerm,
    SolverError,
    UnboundedError,
)
from .solver import SolveReport, resolve_backend, solve  # noqa: F401
from .noise import (  # noqa: F401
    NoiseModel,
    PredictionModel,
    generate_noise,
    generate_predictions,
    prediction_error,
)
from .controllers import (  # noqa: F401
    ControllerRun,
    run_mrpc,
    run_offline_opt,
    run_zero_slow,
)
from .soco import (  # noqa: F401
    SocoProblem,
    SocoRun,
    run_afhc,
    run_fhc,
    soco_cost,
    soco_lift,
    soco_offline_opt,
    soco_reduce,
)
from .analysis import (  # noqa: F401
    BoundReport,
    competitive_ratio,
    hardness_ratio,
    lemma1_check,
    lemma2_lower_bound,
    thm1_report,
    thm2_report,
)
from .config import ConfigError, ScenarioConfig, expand_sweep, load_scenario  # noqa: F401
