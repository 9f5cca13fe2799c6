"""Projected linear two-time-scale stochastic approximation with
Polyak-Ruppert averaging: iteration engine, constrained solutions, error-bound
constants and the synthetic / GTD experiments."""
from .errors import (AssumptionViolated, ConfigError, DimensionMismatch, InsufficientData,
                     NonConvergence, NonFinite, ProjectedSingular, RankDeficient, Singular,
                     TTSAError)
from .projection import (ConstrainedSolution, Subspace, approximation_errors,
                         constrained_solution, project, projected_linear_solve, x_p_of_y)
from .system import (AssumptionReport, SolutionPair, TwoTimeScaleSystem, check_assumptions,
                     drift, schur_complement, unconstrained_solution)
from .constants import (ResolventConstants, TheoremConstants, bound_curve,
                        resolvent_constants, theorem_constants)
from .simulate import (IterateState, NoiseModel, StepSizes, TrialTrace, run_experiment,
                       run_trial, step, telescoping_residuals)

__version__ = "0.1.0"
