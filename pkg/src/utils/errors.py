"""
Exception hierarchy for the six-vertex toolkit.

Library code raises these; only the command line interface turns them into
exit codes.
"""


class SixVertexError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SixVertexError):
    """Invalid run configuration or command line input."""


# Lattice combinatorics

class LatticeError(SixVertexError):
    """Invalid lattice state or boundary data."""


class IceRuleViolation(LatticeError):
    """An edge pattern at a vertex is not one of the six legal patterns."""


class NoCompletion(LatticeError):
    """A boundary value admits no height function completion."""


class CapExceeded(LatticeError):
    """Enumeration produced more states than the requested cap."""

    def __init__(self, cap: int):
        super().__init__(f"Enumeration exceeded cap of {cap} states")
        self.cap = cap


# Numerical failures

class NumericalError(SixVertexError):
    """A numerical method failed to produce a trustworthy answer."""


class NoConvergence(NumericalError):
    """Iterative solver stopped without meeting its tolerance."""

    def __init__(self, iterations: int, residual: float, what: str = "solver"):
        super().__init__(f"{what} did not converge after {iterations} iterations (residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class ContourCollision(NumericalError):
    """The density contour came within the separation tolerance of a kernel singular curve."""

    def __init__(self, distance: float, tolerance: float):
        super().__init__(f"Contour within {distance:.3e} of a singular curve (tolerance {tolerance:.1e})")
        self.distance = distance


class PowerIterationStall(NoConvergence):
    """Power iteration on the transfer matrix did not settle."""

    def __init__(self, iterations: int, residual: float):
        super().__init__(iterations, residual, what="power iteration")


class NewtonDivergence(NumericalError):
    """Newton iteration for the Bethe roots diverged."""


class QuadratureFailure(NumericalError):
    """Two quadrature evaluations of the same integral disagree."""


class EllipticRootFailure(NumericalError):
    """Root finding for the elliptic modulus failed."""


class RootBracketFailure(NumericalError):
    """A monotone root could not be bracketed."""


class NonConvergence(NoConvergence):
    """Coordinate descent did not meet its sweep tolerance."""

    def __init__(self, iterations: int, residual: float = float("nan")):
        super().__init__(iterations, residual, what="coordinate descent")


class NotConverged(NumericalError):
    """Markov chain diagnostics indicate the chain has not mixed."""


# Precondition failures

class DomainError(SixVertexError):
    """Inputs lie outside the domain where an operation is defined."""


class DegenerateParam(DomainError):
    """Weights sit exactly on Δ = ±1 where the parameterization breaks down."""

    def __init__(self, delta: float, regime=None):
        super().__init__(f"Degenerate parameterization at Δ = {delta}")
        self.delta = delta
        self.regime = regime


class WrongPhase(DomainError):
    """Formula requested for a phase other than the one it describes."""


class NotFreeFermion(DomainError):
    """Free-fermion formula requested away from Δ = 0."""


class OutOfTentacle(DomainError):
    """Tentacle parameter β outside [-1, 1]."""


class NotOnInterface(DomainError):
    """Point is not on the frozen/disordered interface."""


class WrongRegime(DomainError):
    """Operation requested for the wrong Δ regime."""


class RayOutOfCorner(DomainError):
    """Five-vertex ray direction outside the allowed range."""


class SupDiverges(DomainError):
    """The Legendre supremum is attained at infinite fields."""


class ExpansionInvalid(DomainError):
    """Boundary expansion requested outside its validity range."""


class InfeasibleBoundary(DomainError):
    """Boundary data is not the trace of any admissible height function."""
