"""
Output encoding shared by the CLI writers.

Floats are written as {"hex": exact hex string, "decimal": rounded string} so
results can be compared bit for bit and still be read by people.
"""

import math
from fractions import Fraction
from typing import Any

import numpy as np
from mpmath import mpf

DECIMAL_DIGITS = 12


def encode_float(value: float) -> Any:
    value = float(value)
    if math.isnan(value):
        return {"hex": "nan", "decimal": "nan"}
    if math.isinf(value):
        text = "inf" if value > 0 else "-inf"
        return {"hex": text, "decimal": text}
    return {"hex": value.hex(), "decimal": f"{value:.{DECIMAL_DIGITS}g}"}


def convert_to_serializable(obj: Any) -> Any:
    """Convert NumPy, mpmath and rational values to JSON-ready structures."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, mpf)):
        return encode_float(float(obj))
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else str(obj.numerator)
    if isinstance(obj, np.ndarray):
        return [convert_to_serializable(item) for item in obj.tolist()]
    if isinstance(obj, dict):
        return {str(key): convert_to_serializable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [convert_to_serializable(item) for item in obj]
    to_dict = getattr(obj, "to_dict", None)
    if callable(to_dict):
        return convert_to_serializable(to_dict())
    return str(obj)
