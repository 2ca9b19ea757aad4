"""Exception types raised by the geometry, map and analysis layers."""


class BilliardError(Exception):
    """Base class for every numerical failure reported by billiardlab."""


class TangentialRay(BilliardError):
    """A chord meets the boundary at (numerically) grazing incidence."""


class NoConvergence(BilliardError):
    """An iterative solver did not reach its tolerance."""


class PointInside(BilliardError):
    """A point required to lie outside a curve is inside or on it."""


class DegenerateChord(BilliardError):
    """The chord construction has no non-trivial solution."""


class VertexHit(BilliardError):
    """A polygon orbit landed on (or within tolerance of) a vertex."""


class NotTransverse(BilliardError):
    """A transverse line field is parallel to the boundary tangent."""


class InsufficientData(BilliardError):
    """An orbit is too short for the requested statistic."""


class DegenerateOrbit(BilliardError):
    """An orbit terminated before the requested number of steps."""


class FixedPointCountMismatch(BilliardError):
    """A circle map does not have the expected number of fixed points."""


class DegenerateFamily(BilliardError):
    """A line family is (almost) parallel, so it has no envelope."""


class UnresolvedCusp(BilliardError):
    """A sign change of the envelope speed straddles a degenerate gap."""


class NotNested(BilliardError):
    """The inner curve is not strictly inside the outer curve."""


class NotInvariant(BilliardError):
    """An orbit does not look like it lies on an invariant curve."""


class ParallelDegenerate(BilliardError):
    """A straight piece parallel to the sweep direction passes through lattice points."""
