"""slbfgs: structured limited-memory BFGS with cautious updates and seed scaling."""

from slbfgs.analysis import estimate_rate, newton_diagnostics, performance_profile
from slbfgs.linalg import (
    DenseOperator,
    DiagonalOperator,
    Laplacian2D,
    LinearOperator,
    ScaledOperator,
    laplacian_2d,
)
from slbfgs.linesearch import LineSearchConfig, LineSearchKind
from slbfgs.memory import InnerSolverConfig, Memory
from slbfgs.optimizer import (
    CautiousParams,
    OptimizeResult,
    OptimizerConfig,
    Problem,
    Status,
    StoppingRule,
    Strategy,
    lbfgs_minimize,
    minimize,
    slbfgs_minimize,
)
from slbfgs.problems import make_nonconvex, make_quadratic

__version__ = "0.1.0"
__all__ = [
    "CautiousParams",
    "DenseOperator",
    "DiagonalOperator",
    "InnerSolverConfig",
    "Laplacian2D",
    "LineSearchConfig",
    "LineSearchKind",
    "LinearOperator",
    "Memory",
    "OptimizeResult",
    "OptimizerConfig",
    "Problem",
    "ScaledOperator",
    "Status",
    "StoppingRule",
    "Strategy",
    "estimate_rate",
    "laplacian_2d",
    "lbfgs_minimize",
    "make_nonconvex",
    "make_quadratic",
    "minimize",
    "newton_diagnostics",
    "performance_profile",
    "slbfgs_minimize",
]
