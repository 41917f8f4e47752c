"""Regularized non-negative matrix factorization by multiplicative and additive updates."""

from .errors import (CapacityError, DegenerateDenominatorError, NumericError, ParseError,
                     RegNMFError, ShapeError, UnboundedDescentError, UndefinedMetricError,
                     ValidationError, ZeroDivisorError)
from .linalg import hadamard, kron, trace_prod, unvec, vec
from .nmf import (FactorPair, NmfOptions, NmfResult, TraceRecord, aurnmf, check_convergence,
                  factorize, init_factors, murnmf, pick_direction)
from .postprocess import CanonicalForm, canonicalize, frobenius_error, r_squared
from .qp import (QpSolveOptions, Status, StepStrategy, b_step, direction, giqpm_solve,
                 giqpm_step, mult_step, step_lengths)
from .weights import (QpProblem, ScalarWeights, WeightConfig, build_qp, expand_scalar_weights,
                      gradient_L, gradient_R, objective)

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "DegenerateDenominatorError", "NumericError", "ParseError", "RegNMFError",
    "ShapeError", "UnboundedDescentError", "UndefinedMetricError", "ValidationError",
    "ZeroDivisorError", "hadamard", "kron", "trace_prod", "unvec", "vec", "FactorPair",
    "NmfOptions", "NmfResult", "TraceRecord", "aurnmf", "check_convergence", "factorize",
    "init_factors", "murnmf", "pick_direction", "CanonicalForm", "canonicalize",
    "frobenius_error", "r_squared", "QpSolveOptions", "Status", "StepStrategy", "b_step",
    "direction", "giqpm_solve", "giqpm_step", "mult_step", "step_lengths", "QpProblem",
    "ScalarWeights", "WeightConfig", "build_qp", "expand_scalar_weights", "gradient_L",
    "gradient_R", "objective",
]
