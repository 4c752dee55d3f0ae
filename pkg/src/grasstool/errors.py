"""Exception hierarchy shared by all grasstool modules."""


class GrassError(Exception):
    """Base class for every error raised by grasstool."""


class NonFiniteError(GrassError, ValueError):
    pass


class DimensionMismatch(GrassError, ValueError):
    pass


class NearSingular(GrassError, ArithmeticError):
    """Smallest singular value fell below the spectral tolerance."""


class NotAProjection(GrassError, ValueError):
    pass


class RankAmbiguous(GrassError, ValueError):
    pass


class RankMismatch(GrassError, ValueError):
    pass


class RankZero(GrassError, ValueError):
    pass


class NotUnitary(GrassError, ValueError):
    pass


class OutsideNeighbourhood(GrassError, ValueError):
    pass


class InadmissibleScale(GrassError, ValueError):
    pass


class SingularOverlap(GrassError, ArithmeticError):
    pass


class CoarseMesh(GrassError, ArithmeticError):
    pass
