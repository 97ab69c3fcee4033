"""Linear-response estimation for Langevin dynamics."""

__version__ = "0.1.0"

from .model import (BUILTIN_MODELS, Domain, ForceField, LangevinModel,
                    Observable, PhaseState, Potential, example1_model,
                    example2_model, example3_model, position_force,
                    validate_force_derivatives, wrap_position)
from .integrators import (FIRST_ORDER_SCHEMES, SCHEMES,
                          SECOND_ORDER_SCHEMES, StepRecord, apply_step,
                          flow_A, flow_B, flow_C, step)
from .estimators import (ConfigurationError, EstimatorOutput,
                         TrajectoryStats, check_mp_config, estimate_gk,
                         estimate_mp, estimate_mp_multi,
                         estimate_mp_weights, estimate_nemd,
                         estimate_nemd_multi, gk_components, initial_state,
                         mp1_increment, mp2_increment_bacab,
                         mp2_increment_cbabc, phi_gk, run_mp_realization,
                         weight_increment)
from .statistics import (CovAccumulator, MeanVarAccumulator, StreamSpec,
                         covariance_with_stderr, derive_stream)
from .experiments import (ExperimentConfig, fit_slope, run_experiment,
                          variance_growth_diagnostics)
