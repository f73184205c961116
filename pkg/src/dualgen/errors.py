"""Exception types shared across the package."""


class DualgenError(Exception):
    """Base class for all package errors."""


class NonCommensurate(DualgenError):
    """Grid spacing does not divide the requested range evenly."""


class EmptyGrid(DualgenError):
    """A grid axis would have fewer than two points."""


class SingularBasis(DualgenError):
    """Cone basis vectors are linearly dependent."""


class DimensionMismatch(DualgenError):
    """Inputs defined on incompatible state spaces."""


class NonLatticeCone(DualgenError):
    """Cone basis vectors are not commensurate with the grid lattice."""


class SingularityUnhandled(DualgenError):
    """A point mass coincides with an evaluation point of a singular kernel."""


class PositivityViolation(DualgenError):
    """A discretized generator acquired a negative off-diagonal entry."""


class NotSeparable(DualgenError):
    """A coefficient declared separable depends on other coordinates."""


class StructureViolation(DualgenError):
    """Declared coefficient structure fails at a probe point."""


class PSDViolation(DualgenError):
    """Diffusion matrix fails positive semidefiniteness at a probe point."""


class TailConditionFail(DualgenError):
    """Jump-rate tails do not vanish at the ends of the probe box."""


class MonotonicityFail(DualgenError):
    """A rate function declared monotone fails at a probe pair."""


class CompensatorDivergent(DualgenError):
    """The principal-value compensator integral does not converge."""


class SignConditionFail(DualgenError):
    """A mixed-derivative sign condition fails at a probe point."""


class MissingDerivative(DualgenError):
    """A required derivative callable was not supplied."""


class RateBoundExceeded(DualgenError):
    """Observed jump rate exceeds the supplied thinning bound."""


class InadmissibleDual(DualgenError):
    """A cone duality estimate was requested without an admissible dual."""


class NonConvergent(DualgenError):
    """A boundary-regularization ladder fails to converge."""


class Overflow(DualgenError):
    """Matrix exponential argument too large; use smaller t or coarser grid."""


class SchemaError(DualgenError):
    """A scenario file violates the published schema."""


class ExpressionParseError(DualgenError):
    """A coefficient expression string could not be parsed."""


class CFLWarning(UserWarning):
    """Drift dominates diffusion at the chosen spacing."""


class ClippingWarning(UserWarning):
    """Cross-diffusion terms were clipped to preserve positivity."""


class StepTooCoarseWarning(UserWarning):
    """Drift moves paths further than the diffusion scale in one step."""
