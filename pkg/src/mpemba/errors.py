"""Exception hierarchy shared by every module of the package."""


class MpembaError(Exception):
    """Base class for all errors raised by :mod:`mpemba`."""


class NonHermitianInput(MpembaError, ValueError):
    pass


class NegativeEigenvalue(MpembaError, ValueError):
    pass


class InvalidState(MpembaError, ValueError):
    """Input is not a density matrix (Hermitian, PSD, unit trace)."""


class SupportViolation(MpembaError, ValueError):
    pass


class InvalidBloch(MpembaError, ValueError):
    pass


class DegenerateGap(MpembaError, ValueError):
    """Two Hamiltonian levels are degenerate and the policy forbids skipping."""


class SingularBoseRate(MpembaError, ZeroDivisionError):
    pass


class NonUniqueSteadyState(MpembaError, RuntimeError):
    pass


class NonConvergedSpectrum(MpembaError, RuntimeError):
    pass


class RealSlowestMode(MpembaError, ValueError):
    """Slowest decaying mode lives in the population sector."""


class SameSignEigenvalues(MpembaError, ValueError):
    pass


class NonHermitianL2(MpembaError, ValueError):
    pass


class NonPureProbe(MpembaError, ValueError):
    pass


class DimensionCap(MpembaError, ValueError):
    pass


class DegenerateLiouvillianEigenvalue(UserWarning):
    """Two Liouvillian eigenvalues coincide; biorthogonalization ran blockwise."""


class DegenerateGapWarning(UserWarning):
    pass
