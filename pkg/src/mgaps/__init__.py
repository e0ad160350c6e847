"""Online controller-gain tuning by non-episodic model-based policy optimization."""

from mgaps.errors import (
    ControllerSingular,
    DomainError,
    MgapsError,
    OptimizerDiverged,
    ReferenceSingular,
    SimulationDiverged,
    SingularModel,
)

__version__ = "0.1.0"

__all__ = [
    "ControllerSingular",
    "DomainError",
    "MgapsError",
    "OptimizerDiverged",
    "ReferenceSingular",
    "SimulationDiverged",
    "SingularModel",
    "__version__",
]
