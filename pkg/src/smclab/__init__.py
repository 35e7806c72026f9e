"""Sliding-mode control verification lab for under-actuated crane and Pendubot models."""

from .controllers import (
    AhssmcParams,
    IhssmcParams,
    ahssmc_control,
    ahssmc_surfaces,
    ihssmc_control,
    ihssmc_surfaces,
    linear_feedback,
)
from .errors import (
    ConfigError,
    Degenerate,
    SingularDesign,
    SingularGain,
    SingularInertia,
    Uncontrollable,
    ZeroCoupling,
)
from .experiments import Scenario, builtin_scenarios, run_counterexample, run_fig_e, run_scenario
from .linalg import (
    LinearizationConstants,
    LinearPlant,
    ackermann_gain,
    crane_linearization,
    eigenvalues,
    hurwitz_check,
    solve_surface_params,
)
from .ode import IntegratorConfig, Status, Trajectory, integrate
from .plants import CraneParams, PendubotParams, PlantTerms, State, crane_terms

__version__ = "0.1.0"
