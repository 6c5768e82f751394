"""
Exception hierarchy for the bound pipeline.

Every error carries a one-line machine-readable reason and the CLI exit code
it maps to.
"""

from typing import List, Optional


class NeumannBoundsError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 1

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class ConfigError(NeumannBoundsError):
    """Malformed config, unknown keys or out-of-range parameters"""

    exit_code = 1


class GeometryError(NeumannBoundsError):
    """Invalid domain descriptor, dimension mismatch or missing convexity"""

    exit_code = 1


class SingularPointError(NeumannBoundsError):
    """Mapping evaluated on its singular set (x_n = 0 for the cusp map)"""

    exit_code = 1


class InapplicableError(NeumannBoundsError):
    """A constant or route leaves its validity domain"""

    exit_code = 2


class UnboundedDilatationError(InapplicableError):
    pass


class UnboundedJacobianError(InapplicableError):
    pass


class DivergentIntegralError(InapplicableError):
    pass


class ValidityError(InapplicableError):
    pass


class InapplicableRouteError(InapplicableError):
    pass


class EigensolverError(NeumannBoundsError):
    """Discrete oracle failure; `trace` holds per-round residual history"""

    exit_code = 3

    def __init__(self, reason: str, trace: Optional[List[float]] = None):
        super().__init__(reason)
        self.trace = trace or []


class ReproductionMismatch(NeumannBoundsError):
    """A regenerated quantity differs from its pinned value beyond tolerance"""

    exit_code = 4


class OrderingViolation(NeumannBoundsError):
    """A certificate falls on the wrong side of the oracle value plus slack"""

    exit_code = 4
