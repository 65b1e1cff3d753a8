"""Exception types shared across the package."""


class BlindPirError(Exception):
    """Base class for all package errors."""


class FieldMismatch(BlindPirError):
    """Operands belong to different prime fields."""


class DivisionByZero(BlindPirError, ZeroDivisionError):
    """Multiplicative inverse of zero requested."""


class NonPrimeModulus(BlindPirError, ValueError):
    """Field modulus failed the primality check."""


class IndexOutOfRange(BlindPirError, IndexError):
    """Index outside the declared 1-based range."""


class DimensionMismatch(BlindPirError, ValueError):
    """Tensor/vector extents do not line up."""


class DegenerateEvaluationPoints(BlindPirError, ValueError):
    """Evaluation points collide (duplicates, or f_l equal to alpha_n)."""


class SingularMatrix(BlindPirError, ValueError):
    """Linear system has no unique solution."""


class InfeasibleParams(BlindPirError, ValueError):
    """Scheme parameters violate a feasibility constraint."""


class FieldTooSmall(InfeasibleParams):
    """Modulus cannot host the required number of distinct points."""


class DuplicatePoints(InfeasibleParams):
    """Supplied evaluation points are not pairwise distinct."""


class NotPerfectSquare(BlindPirError, ValueError):
    """Server count is not a perfect square."""


class BudgetExceeded(BlindPirError, RuntimeError):
    """Exhaustive enumeration would exceed the configured state budget."""


class UnnormalizedDistribution(BlindPirError, ValueError):
    """Probability table does not sum to one."""


class VerificationFailed(BlindPirError, RuntimeError):
    """Decoded output disagrees with the plaintext oracle."""
