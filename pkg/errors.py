"""
Error hierarchy for the point-interaction toolkit.

Every failure raised by the library derives from PointInteractionError so the
CLI can map the whole family onto exit code 2 in one place.
"""

from typing import List, Optional


class PointInteractionError(Exception):
    """Base class for all library errors"""


class InvalidParameter(PointInteractionError, ValueError):
    """A parameter is malformed, non-finite or outside its domain"""


class ResonantSpectralPoint(PointInteractionError):
    """-kappa^2 sits at (or numerically next to) the delta-prime eigenvalue"""


class DegenerateCoupling(PointInteractionError):
    """A Cheon-Shigehara coupling vanishes, i.e. a == beta / 2"""


class SingularU(PointInteractionError):
    """The u parameter 2*beta*kappa*a / (2a - beta) blows up"""


class SingularGamma(PointInteractionError):
    """Gamma matrix is singular: -kappa^2 is an eigenvalue of the array operator"""


class ThresholdNotFound(PointInteractionError):
    """No spacing on the search grid keeps the spectrum above -kappa^2"""


class DivisionByZeroSeries(PointInteractionError):
    """Series divisor vanishes identically up to the truncation order"""


class ValuationMismatch(PointInteractionError):
    """Series quotient would need negative powers that were not allowed"""


class UnknownExpansionId(PointInteractionError):
    """Requested expansion identity is not registered"""


class NormalizationFailure(PointInteractionError):
    """Potential shape does not integrate to one"""


class GridTooCoarse(PointInteractionError):
    """Sample grid does not resolve the scaled potential support"""


class EigenvalueHit(PointInteractionError):
    """Wronskian vanishes: -kappa^2 is an eigenvalue of the discretized operator"""


class OverflowGuard(PointInteractionError):
    """Solution growth exceeds the representable range even in log scale"""


class PowerIterationStall(PointInteractionError):
    """Power iteration did not settle within the iteration budget"""


class RegimeViolation(PointInteractionError):
    """Study parameters fall outside the regime the convergence result needs"""

    def __init__(self, message: str, failed: Optional[List[str]] = None):
        self.failed = list(failed or [])
        if self.failed:
            message = f"{message}: {'; '.join(self.failed)}"
        super().__init__(message)
