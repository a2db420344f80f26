"""Piecewise linear policy approximations for parametric optimization.

Construct, evaluate, and learn policies x(theta) for families of problems
min f(x, theta) s.t. x in C(theta): exact and gamma-relaxed solvers,
simplicial interpolation of sampled optima, policy quality metrics, and a
small from-scratch ReLU network with a norm-based generalization bound.
"""

from .errors import (DegenerateInputError, DimensionMismatchError, GenerationError,
                     OutsideHullError, PwlPolicyError, SolverFailureError,
                     TrainingDivergedError, UnsupportedDimensionError,
                     ValidationError)
from .problems import (ParametricProblem, builtin_problem, generate_random_lp,
                       generate_random_qp, load_problem, sample_thetas,
                       save_problem, with_margin)
from .solvers import (ARBITRARY_VERTEX, LOWEST_POINT, SamplerPolicy, SolveResult,
                      derive_seed, project_to_feasible, solve_exact,
                      solve_gamma_relaxed)
from .simplicial import (Triangulation, build_triangulation, clip_to_hull, contains,
                         load_triangulation, locate, mesh_norm, save_triangulation)
from .policy import (PiecewisePolicy, closed_form_example1, evaluate, evaluate_many,
                     fit, load_policy, save_policy)
from .metrics import (PolicyReport, evaluate_policy, feasibility_ratio, ge_bound,
                      infeasibility, suboptimality)
from .neural import (MlpModel, TrainConfig, forward, gradient_check, load_model,
                     norms, save_model, train)

__version__ = "0.1.0"

__all__ = [
    "ARBITRARY_VERTEX", "LOWEST_POINT", "DegenerateInputError",
    "DimensionMismatchError", "GenerationError", "MlpModel", "OutsideHullError",
    "ParametricProblem", "PiecewisePolicy", "PolicyReport", "PwlPolicyError",
    "SamplerPolicy", "SolveResult", "SolverFailureError", "TrainConfig",
    "TrainingDivergedError", "Triangulation", "UnsupportedDimensionError",
    "ValidationError", "build_triangulation", "builtin_problem",
    "clip_to_hull", "closed_form_example1", "contains", "derive_seed",
    "evaluate", "evaluate_many", "evaluate_policy", "feasibility_ratio",
    "fit", "forward", "ge_bound", "generate_random_lp", "generate_random_qp",
    "gradient_check", "infeasibility", "load_model", "load_policy",
    "load_problem", "load_triangulation", "locate", "mesh_norm", "norms",
    "project_to_feasible", "sample_thetas", "save_model", "save_policy",
    "save_problem", "save_triangulation", "solve_exact", "solve_gamma_relaxed",
    "suboptimality", "train", "with_margin",
]
