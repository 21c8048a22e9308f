"""
Special Functions Module

J- and I-Bessel functions of integer order and the incomplete Gamma function
at positive integer first argument, evaluated with mpmath and returned with an
absolute error bound.
"""

import logging
import math
from dataclasses import dataclass
from typing import Union

from mpmath import mp, mpf

from app.validators import validate_positive, validate_precision

logger = logging.getLogger(__name__)

Real = Union[int, float, mpf]

MAX_SERIES_TERMS = 100_000


@dataclass(frozen=True)
class PrecisionReal:
    """A high-precision real together with an absolute error bound."""

    value: mpf
    error_bound: mpf

    def __post_init__(self):
        if self.error_bound < 0 or not mp.isfinite(self.error_bound):
            raise ValueError(f"error bound must be finite and >= 0: {self.error_bound}")

    def __float__(self) -> float:
        return float(self.value)

    @property
    def lower(self) -> mpf:
        return self.value - self.error_bound

    @property
    def upper(self) -> mpf:
        return self.value + self.error_bound

    def contains(self, x: Real) -> bool:
        return self.lower <= x <= self.upper


def _guard_bits(x: mpf) -> int:
    # cancellation in the alternating series loses about x*log2(e) bits
    return int(float(x) * 1.45) + 32


def bessel_J(order: int, x: Real, precision: int = 128) -> PrecisionReal:
    """
    J_order(x) from the ascending series sum (-1)^j (x/2)^{2j+order} / (j! (j+order)!).

    The series is summed at precision + guard bits (the guard absorbs the
    cancellation for x > 2*order) until the terms decrease monotonically and
    fall below 2^-precision; the first omitted term bounds the alternating tail.
    """
    order = int(order)
    if order < 0:
        raise ValueError("order must be non-negative")
    precision = validate_precision(precision)

    with mp.workprec(precision):
        x = mpf(x)
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return PrecisionReal(mpf(1 if order == 0 else 0), mpf(0))

    wp = precision + _guard_bits(x)
    with mp.workprec(wp):
        half_sq = (x / 2) ** 2
        term = (x / 2) ** order / mp.factorial(order)
        total = term
        largest = abs(term)
        target = mpf(2) ** (-precision)
        j = 0
        while j < MAX_SERIES_TERMS:
            j += 1
            ratio = half_sq / (j * (j + order))
            term = -term * ratio
            total += term
            largest = max(largest, abs(term))
            next_ratio = half_sq / ((j + 1) * (j + 1 + order))
            if next_ratio < 1 and abs(term) * next_ratio < target:
                break
        tail = abs(term) * half_sq / ((j + 1) * (j + 1 + order))
        rounding = largest * (j + 1) * mpf(2) ** (-wp + 1)

    with mp.workprec(precision):
        return PrecisionReal(+total, +(tail + rounding + mpf(2) ** (-precision)))


def bessel_I(order: int, x: Real, precision: int = 128) -> PrecisionReal:
    """
    I_order(x) from the positive ascending series with a geometric tail bound.

    Once the term ratio r_j = (x/2)^2 / ((j+1)(j+1+order)) drops below 1 it keeps
    decreasing, so the tail after term t_j is at most t_j r_j / (1 - r_j).
    """
    order = int(order)
    if order < 0:
        raise ValueError("order must be non-negative")
    precision = validate_precision(precision)

    with mp.workprec(precision):
        x = mpf(x)
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return PrecisionReal(mpf(1 if order == 0 else 0), mpf(0))

    wp = precision + 32
    with mp.workprec(wp):
        half_sq = (x / 2) ** 2
        term = (x / 2) ** order / mp.factorial(order)
        total = term
        target = mpf(2) ** (-precision)
        j = 0
        while j < MAX_SERIES_TERMS:
            ratio = half_sq / ((j + 1) * (j + 1 + order))
            if ratio < mpf("0.5") and term * ratio / (1 - ratio) < target * total:
                break
            j += 1
            term = term * ratio
            total += term
        tail = term * ratio / (1 - ratio)
        rounding = total * (j + 1) * mpf(2) ** (-wp + 1)

    with mp.workprec(precision):
        return PrecisionReal(+total, +(tail + rounding + total * mpf(2) ** (-precision)))


def incomplete_gamma_int(n: int, x: Real, precision: int = 128) -> PrecisionReal:
    """Upper incomplete Gamma(n; x) = (n-1)! e^{-x} sum_{j<n} x^j / j! for integer n >= 1."""
    n = validate_positive(n, "n")
    precision = validate_precision(precision)
    wp = precision + 16
    with mp.workprec(wp):
        x = mpf(x)
        if x < 0:
            raise ValueError("x must be non-negative")
        partial = mpf(0)
        term = mpf(1)
        for j in range(n):
            if j:
                term = term * x / j
            partial += term
        value = mp.factorial(n - 1) * mp.exp(-x) * partial
        rounding = abs(value) * (n + 4) * mpf(2) ** (-wp + 1)
    with mp.workprec(precision):
        return PrecisionReal(+value, +(rounding + abs(value) * mpf(2) ** (-precision)))


def bessel_J_majorant(order: int, x: float) -> float:
    """|J_order(x)| <= (x/2)^order / order! for real x >= 0."""
    return (x / 2) ** order / math.factorial(order)


def bessel_I_majorant(order: int, x: float) -> float:
    """I_order(x) <= (x/2)^order / order! * exp(x^2/4) for real x >= 0."""
    return (x / 2) ** order / math.factorial(order) * math.exp(x * x / 4)
