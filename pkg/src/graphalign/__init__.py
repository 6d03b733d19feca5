"""Joint alignment of multiple correlated Gaussian graphs."""
from .core import (
    GraphStack,
    GuardError,
    Instance,
    ParameterError,
    PermutationTuple,
    ProblemParams,
    sample_instance,
)

__version__ = "0.1.0"

__all__ = [
    "GraphStack",
    "GuardError",
    "Instance",
    "ParameterError",
    "PermutationTuple",
    "ProblemParams",
    "sample_instance",
]
