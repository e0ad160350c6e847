"""Exception hierarchy shared by the simulators, controllers and optimizers."""


class MgapsError(Exception):
    pass


class DomainError(MgapsError, ValueError):
    """A rotation left the single-cover region of the exponential map."""


class SimulationDiverged(MgapsError):
    pass


class ControllerSingular(MgapsError):
    """The commanded thrust vector has no well-defined shortest rotation."""


class ReferenceSingular(MgapsError):
    pass


class SingularModel(MgapsError):
    pass


class OptimizerDiverged(MgapsError):
    pass
