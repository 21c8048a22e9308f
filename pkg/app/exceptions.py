"""
Custom Exceptions for Convolution Lab
Provides a hierarchy of exceptions for better error handling and debugging.
"""

from typing import Dict, List, Optional


class ConvolutionLabException(Exception):
    """Base exception for all Convolution Lab errors."""

    def __init__(self, message: str, details: Optional[Dict] = None):
        """
        Initialize exception with message and optional details.

        Args:
            message: Error message
            details: Optional dictionary with additional error context
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def to_dict(self) -> dict:
        """Convert exception to dictionary for JSON diagnostics."""
        return {
            "error": self.__class__.__name__,
            "message": self.message,
            "details": self.details,
        }


# Series Exceptions
class SeriesException(ConvolutionLabException):
    """Base exception for q-series arithmetic errors."""

    pass


class NonInvertibleSeriesException(SeriesException):
    """Series has a zero leading coefficient."""

    def __init__(self, lead_order: int):
        super().__init__("non-invertible series", {"lead_order": lead_order})


class WindowException(SeriesException):
    """Requested coefficient lies outside the trustworthy window."""

    def __init__(self, exponent: int, lead_order: int, trunc_order: int):
        super().__init__(
            f"exponent {exponent} outside window [{lead_order}, {trunc_order})",
            {
                "exponent": exponent,
                "lead_order": lead_order,
                "trunc_order": trunc_order,
            },
        )


class NotPIntegralException(SeriesException):
    """A coefficient denominator is divisible by the prime."""

    def __init__(self, exponent: int, p: int, denominator: int):
        super().__init__(
            f"coefficient at exponent {exponent} is not {p}-integral",
            {"exponent": exponent, "p": p, "denominator": str(denominator)},
        )


# Modular Form Exceptions
class ModularFormException(ConvolutionLabException):
    """Base exception for modular form construction errors."""

    pass


class FractionalLeadingExponentException(ModularFormException):
    """Eta quotient has a leading exponent that is not an integer."""

    def __init__(self, weighted_sum: int):
        super().__init__(
            "fractional leading exponent",
            {"sum_delta_r": weighted_sum, "required_divisor": 24},
        )


class CoefficientDocumentException(ModularFormException):
    """Imported coefficient document is malformed or mismatched."""

    pass


# Kloosterman Exceptions
class KloostermanException(ConvolutionLabException):
    """Base exception for Kloosterman sum errors."""

    pass


class NonCoprimeException(KloostermanException):
    """Arguments that must be coprime share a factor."""

    def __init__(self, a: int, b: int):
        super().__init__(
            f"{a} and {b} are not coprime", {"a": a, "b": b}
        )


class HypothesisViolationException(KloostermanException):
    """Scan requested outside the range where the vanishing lemma applies."""

    pass


# Poincare Exceptions
class PoincareException(ConvolutionLabException):
    """Base exception for Poincare coefficient errors."""

    pass


class EmptySumException(PoincareException):
    """The truncated c-sum contains no modulus."""

    def __init__(self, c_max: int, level: int):
        super().__init__("empty sum", {"c_max": c_max, "N": level})


class ImaginaryResidueException(PoincareException):
    """A sign factor produced a non-negligible imaginary part."""

    pass


# Shifted Convolution Exceptions
class ShiftedConvolutionException(ConvolutionLabException):
    """Base exception for generating function errors."""

    pass


class AssemblyInvariantException(ShiftedConvolutionException):
    """Assembled generating function violates a structural invariant."""

    def __init__(self, h: int, value: float, tolerance: float):
        super().__init__(
            f"coefficient at h={h} should vanish",
            {"h": h, "value": value, "tolerance": tolerance},
        )


class SingularAnchorException(ShiftedConvolutionException):
    """Anchor exponents do not determine gamma and delta."""

    def __init__(self, anchors: List[int]):
        super().__init__(
            "anchor exponents do not separate the basis", {"anchors": anchors}
        )


# p-adic Exceptions
class PadicException(ConvolutionLabException):
    """Base exception for p-adic analysis errors."""

    pass


class ValuationBoundaryException(PadicException):
    """Residue precision too small for the requested valuations."""

    def __init__(self, modulus_t: int, max_t: int):
        super().__init__(
            "cannot distinguish valuation boundary",
            {"T": modulus_t, "max_t": max_t},
        )


# Validation Exceptions
class ValidationException(ConvolutionLabException):
    """Base exception for validation errors."""

    pass


class InvalidInputException(ValidationException):
    """Invalid input parameters."""

    pass


# Configuration Exceptions
class ConfigurationException(ConvolutionLabException):
    """Base exception for configuration errors."""

    pass


class InvalidConfigurationException(ConfigurationException):
    """Configuration value is invalid."""

    pass


# Acceptance Exceptions
class AcceptanceCheckException(ConvolutionLabException):
    """One or more reproduction checks failed."""

    def __init__(self, failed: List[str]):
        super().__init__(
            f"{len(failed)} check(s) failed", {"failed_checks": failed}
        )


# Progress Tracking Exceptions
class ProgressException(ConvolutionLabException):
    """Base exception for progress tracking errors."""

    pass


class TaskNotFoundException(ProgressException):
    """Progress task not found."""

    pass
