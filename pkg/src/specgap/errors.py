"""Exception hierarchy shared by all specgap modules."""


class SpecGapError(Exception):
    """Base class for every error raised by specgap."""


# -- operator substrate -------------------------------------------------------

class NonHermitianInput(SpecGapError, ValueError):
    pass


class ConvergenceFailure(SpecGapError, RuntimeError):
    pass


class DimensionMismatch(SpecGapError, ValueError):
    pass


class InvalidGap(SpecGapError, ValueError):
    pass


class LambdaOnSpectrum(SpecGapError, ValueError):
    """The spectral parameter sits on (or too close to) the spectrum."""


class AmbiguousEndpoint(SpecGapError, ValueError):
    """An eigenvalue lies inside the tolerance band of an interval endpoint."""


# -- index / Xi ---------------------------------------------------------------

class InconsistentIndex(SpecGapError, ArithmeticError):
    """Kernel-counting and trace routes to the index disagree."""


class NonReducingProjection(SpecGapError, ValueError):
    pass


class GapTooNarrow(SpecGapError, ValueError):
    pass


# -- spectral flow ------------------------------------------------------------

class LambdaOnEndpointSpectrum(LambdaOnSpectrum):
    pass


class RefinementLimit(SpecGapError, RuntimeError):
    pass


class TangentialCrossingUnresolved(SpecGapError, RuntimeError):
    pass


# -- Birman-Schwinger ---------------------------------------------------------

class SingularSolve(SpecGapError, ArithmeticError):
    pass


class ZeroOnBSSpectrum(LambdaOnSpectrum):
    """0 is an eigenvalue of -J^{-1} - T(lambda); retry with ``left_limit=True``."""


class ZeroOnSpectrum(LambdaOnSpectrum):
    pass


class LambdaNotBelowSpectrum(SpecGapError, ValueError):
    pass


class SingularX(SpecGapError, ValueError):
    pass


# -- asymptotics --------------------------------------------------------------

class NotPSD(SpecGapError, ValueError):
    pass


class SpectralCollision(LambdaOnSpectrum):
    pass


# -- landau -------------------------------------------------------------------

class GridTooCoarse(SpecGapError, RuntimeError):
    pass


class NegativePotentialInNonnegMode(SpecGapError, ValueError):
    pass


class UnsupportedPreset(SpecGapError, ValueError):
    pass


class PhiNotAdmissible(SpecGapError, ValueError):
    pass


# -- cli ----------------------------------------------------------------------

class ConfigInvalid(SpecGapError, ValueError):
    pass
