"""Policy-gradient flow for continuous-time LQR and gradient-dominance diagnostics."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import (  # noqa: E402
    CertificationError,
    ControllabilityError,
    DimensionError,
    IllConditionedWarning,
    NumericalError,
    PliLabError,
    SamplingError,
    SearchError,
    StabilityError,
)
from .lqr import Gain, LqrProblem, cost, evaluate, gradient, optimal_gain  # noqa: E402

__all__ = [
    "CertificationError",
    "ControllabilityError",
    "DimensionError",
    "Gain",
    "IllConditionedWarning",
    "LqrProblem",
    "NumericalError",
    "PliLabError",
    "SamplingError",
    "SearchError",
    "StabilityError",
    "cost",
    "evaluate",
    "gradient",
    "optimal_gain",
]
