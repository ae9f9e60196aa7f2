"""Exception hierarchy shared across the package."""


class TwoInfError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(TwoInfError, ValueError):
    """Shapes or ranks are incompatible with the requested operation."""


class SymmetryError(TwoInfError, ValueError):
    """A matrix expected to be symmetric is not."""


class OrthonormalityError(TwoInfError, ValueError):
    """A basis expected to have orthonormal columns does not."""


class DegenerateSpectrumError(TwoInfError, ValueError):
    """The r-th eigen/singular value vanishes, so scaled quantities are undefined."""


class GapError(TwoInfError, ValueError):
    """The spectral gap needed by a bound is not positive."""


class ApplicabilityError(TwoInfError, ValueError):
    """A bound was requested outside the setting it applies to."""


class DomainError(TwoInfError, ValueError):
    """An argument lies outside its admissible domain."""


class InfeasibleError(TwoInfError, ValueError):
    """The requested clustering problem has no solution (e.g. r > n)."""


class DegenerateSeparationError(TwoInfError, ValueError):
    """Two distinct clusters share the same true row."""


class GenerationError(TwoInfError, RuntimeError):
    """A random generator could not satisfy its model constraints."""


class CalibrationError(TwoInfError, RuntimeError):
    """A constant could not be fitted from calibration replicates."""


class ConfigError(TwoInfError, ValueError):
    """Experiment configuration is invalid.

    ``problems`` holds every validation message found, not only the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
