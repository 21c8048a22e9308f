"""
Input Validation Layer for Convolution Lab
Centralized validation functions for library entry points and CLI flags.
"""

from typing import Any, Dict, List, Tuple

from app.exceptions import InvalidInputException

# Residue arithmetic keeps machine-word products safe below this modulus
MAX_MODULUS = 2**31


def require_fields(data: Any, fields: List[str]) -> Dict:
    """Validate that a document is a dictionary carrying all required fields.

    Args:
        data: The parsed JSON document.
        fields: List of required field names.

    Returns:
        The validated data dictionary.

    Raises:
        InvalidInputException: If the document is not a dictionary or a field is missing.
    """
    if not isinstance(data, dict):
        raise InvalidInputException(
            "Document must be a JSON object",
            details={"type": type(data).__name__},
        )
    missing = [f for f in fields if f not in data]
    if missing:
        raise InvalidInputException(
            "Missing required fields",
            details={
                "required": fields,
                "missing": missing,
                "provided": list(data.keys()),
            },
        )
    return data


def validate_positive(value: Any, name: str) -> int:
    """Validate that a value is a positive integer.

    Args:
        value: The value to check.
        name: Parameter name for error messages.

    Returns:
        The value as int.

    Raises:
        InvalidInputException: If the value is not a positive integer.
    """
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise InvalidInputException(
            f"{name} must be an integer", details={name: value}
        )
    if number < 1:
        raise InvalidInputException(
            f"{name} must be positive, got {number}", details={name: number}
        )
    return number


def validate_window(window: Any, minimum: int = 1) -> int:
    """Validate a truncation window (exclusive upper exponent bound).

    Args:
        window: Window to check.
        minimum: Smallest admissible window.

    Returns:
        The window as int.

    Raises:
        InvalidInputException: If the window is below the minimum.
    """
    number = validate_positive(window, "window") if minimum >= 1 else int(window)
    if number < minimum:
        raise InvalidInputException(
            f"window must be at least {minimum}, got {number}",
            details={"window": number, "minimum": minimum},
        )
    return number


def is_prime(n: int) -> bool:
    """Deterministic trial-division primality for the small primes used here."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def validate_prime(p: Any) -> int:
    """Validate that p is a prime.

    Raises:
        InvalidInputException: If p is not prime.
    """
    number = validate_positive(p, "p")
    if not is_prime(number):
        raise InvalidInputException(f"{number} is not prime", details={"p": number})
    return number


def validate_even_weight(k: Any, minimum: int = 2) -> int:
    """Validate an even weight k >= minimum.

    Raises:
        InvalidInputException: If k is odd or too small.
    """
    try:
        weight = int(k)
    except (TypeError, ValueError):
        raise InvalidInputException("weight must be an integer", details={"k": k})
    if weight % 2 != 0 or weight < minimum:
        raise InvalidInputException(
            f"weight must be an even integer >= {minimum}, got {weight}",
            details={"k": weight, "minimum": minimum},
        )
    return weight


def validate_precision(bits: Any) -> int:
    """Validate a working precision in bits (at least 53).

    Raises:
        InvalidInputException: If the precision is below double precision.
    """
    number = validate_positive(bits, "precision")
    if number < 53:
        raise InvalidInputException(
            f"precision must be at least 53 bits, got {number}",
            details={"precision": number},
        )
    return number


def validate_modulus_exponent(p: int, T: Any) -> int:
    """Validate T so that p^T stays a machine-word residue modulus.

    Raises:
        InvalidInputException: If T is not positive or p^T is too large.
    """
    exponent = validate_positive(T, "T")
    if p**exponent >= MAX_MODULUS:
        raise InvalidInputException(
            f"modulus {p}^{exponent} exceeds 2^31",
            details={"p": p, "T": exponent},
        )
    return exponent


def parse_eta_spec(spec: str) -> List[Tuple[int, int]]:
    """Parse an eta quotient spec such as "3:8" or "1:3,9:-3".

    Args:
        spec: Comma-separated scale:exponent pairs.

    Returns:
        List of (scale, exponent) pairs.

    Raises:
        InvalidInputException: If the spec cannot be parsed.
    """
    if not spec or not spec.strip():
        raise InvalidInputException("Empty eta spec", details={"spec": spec})

    factors = []
    for part in spec.split(","):
        try:
            scale, exponent = part.split(":")
            factors.append((int(scale), int(exponent)))
        except ValueError:
            raise InvalidInputException(
                f"Invalid eta factor: {part!r}. Use scale:exponent",
                details={"spec": spec, "factor": part},
            )
    return factors


def parse_int_list(text: str, name: str = "values") -> List[int]:
    """Parse a comma-separated list of integers.

    Raises:
        InvalidInputException: If any entry is not an integer.
    """
    try:
        return [int(item) for item in str(text).split(",") if item.strip()]
    except ValueError:
        raise InvalidInputException(
            f"Invalid integer list for {name}", details={name: text}
        )
