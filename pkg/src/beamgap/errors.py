"""Exception hierarchy shared by all beamgap modules."""


class BeamgapError(Exception):
    """Base class for domain errors (the CLI maps these to exit code 1)."""


class GeometryError(BeamgapError):
    pass


class ConfigError(BeamgapError):
    """A lattice config file could not be parsed."""


class ValidationError(BeamgapError):
    """A lattice violates one of the graph invariants."""


class StructuralError(BeamgapError):
    """Inconsistent periodic identifications or dof constraints."""


class SingularSystemError(BeamgapError):
    pass


class EigenSolverError(BeamgapError):
    pass


class AsymmetryError(BeamgapError):
    pass


class NearResonanceError(BeamgapError):
    """The soft-component system is (numerically) singular at this lambda."""

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest


class PoleError(BeamgapError):
    """A closed-form expression was evaluated at (or too close to) a pole."""


class ConvergenceError(BeamgapError):
    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)
