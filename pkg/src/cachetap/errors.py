"""Exception types shared across the package."""


class CachetapError(Exception):
    """Base class for all package-specific errors."""


class LengthMismatch(CachetapError, ValueError):
    """XOR (or comparison) of bit strings with different lengths."""


class LayoutMismatch(CachetapError, ValueError):
    """A subfile layout does not match the file it is applied to."""


class WidthMismatch(CachetapError, ValueError):
    """An index passed to a codebook has the wrong bit width."""


class BlocklengthTooLarge(CachetapError, ValueError):
    """Blocklength beyond the explicit-table regime (n > 24)."""


class IndexOutOfRange(CachetapError, ValueError):
    """A tap position lies outside [1:n]."""


class BudgetTooLarge(CachetapError, ValueError):
    """A pattern enumeration would exceed the configured pattern cap."""


class EnumerationTooLarge(CachetapError, ValueError):
    """An exact-leakage enumeration would exceed the entropy cap."""


class NotNormalized(CachetapError, ValueError):
    """A joint distribution does not sum to one."""


class InconsistentTranscript(CachetapError, ValueError):
    """Decoder inputs that cannot arise from any valid encoding."""


class ConfigViolation:
    """One violated configuration constraint (code + human message)."""

    NON_INTEGRAL_SIZE = "NonIntegralSize"
    CACHE_OVERFLOW = "CacheOverflow"
    ALPHA_OUT_OF_RANGE = "AlphaOutOfRange"
    BAD_MU_SPLIT = "BadMuSplit"

    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message

    def __repr__(self):
        return f"{self.code}: {self.message}"

    def __eq__(self, other):
        return (self.code, self.message) == (other.code, other.message)


class ConfigError(CachetapError, ValueError):
    """Raised by validate_config with the complete list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(repr(v) for v in self.violations))

    def has(self, code: str) -> bool:
        return any(v.code == code for v in self.violations)


class AlphaOutOfRange(CachetapError, ValueError):
    """A rate formula was evaluated outside its alpha domain."""


class BadD(CachetapError, ValueError):
    """A rate formula was evaluated outside its library-size domain."""
