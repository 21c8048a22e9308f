"""
Modular Forms Module
Exact q-expansions of eta quotients, the level 9 forms f = eta(3 tau)^8 and
m(tau), the Eisenstein-type series E2, A and B, and ingestion of published
newform coefficients for cross-validation.
"""

import json
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np

from app.exceptions import (
    CoefficientDocumentException,
    FractionalLeadingExponentException,
    InvalidInputException,
)
from app.modules.qseries import QSeries, ResidueSeries, add, invert, mul, power
from app.validators import require_fields, validate_window

logger = logging.getLogger(__name__)

# f = eta(3 tau)^8, the weight 4 newform of level 9
NEWFORM_LEVEL = 9
NEWFORM_WEIGHT = 4
NEWFORM_FACTORS = ((3, 8),)
# eta(tau)^3 / eta(9 tau)^3, the hauptmodul-like factor of m(tau)
M9_QUOTIENT_FACTORS = ((1, 3), (9, -3))
M9_SHIFT = 3


@dataclass(frozen=True)
class EtaQuotient:
    """Product of eta(delta tau)^r_delta over distinct scales delta."""

    factors: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if not self.factors:
            raise InvalidInputException("Eta quotient needs at least one factor")
        scales = [delta for delta, _ in self.factors]
        if len(set(scales)) != len(scales):
            raise InvalidInputException(
                "Eta quotient scales must be distinct", {"scales": scales}
            )
        if any(delta < 1 for delta in scales):
            raise InvalidInputException(
                "Eta quotient scales must be positive", {"scales": scales}
            )
        if self.weighted_sum % 24:
            raise FractionalLeadingExponentException(self.weighted_sum)

    @classmethod
    def from_factors(cls, factors: Iterable[Tuple[int, int]]) -> "EtaQuotient":
        """Build from (scale, exponent) pairs, merging repeated scales."""
        factors = list(factors)
        if not factors:
            raise InvalidInputException("Eta quotient needs at least one factor")
        merged: Dict[int, int] = {}
        for delta, r in factors:
            merged[int(delta)] = merged.get(int(delta), 0) + int(r)
        # A fully cancelled quotient is kept as eta(tau)^0 = 1
        kept = tuple(sorted((d, r) for d, r in merged.items() if r)) or ((1, 0),)
        return cls(kept)

    @property
    def weighted_sum(self) -> int:
        return sum(delta * r for delta, r in self.factors)

    @property
    def lead_exponent(self) -> int:
        return self.weighted_sum // 24

    @property
    def weight(self) -> Tuple[int, int]:
        """Weight sum(r)/2 as a (numerator, denominator) pair."""
        total = sum(r for _, r in self.factors)
        return (total, 2) if total % 2 else (total // 2, 1)

    def __str__(self) -> str:
        return " * ".join(f"eta({d}t)^{r}" for d, r in self.factors)


def pentagonal_euler_product(window: int) -> List[int]:
    """
    Coefficients of prod_{n>=1} (1 - x^n) below x^window.

    Uses Euler's pentagonal number theorem: the product equals
    sum_k (-1)^k x^{k(3k-1)/2} over all integers k.
    """
    coeffs = [0] * window
    if window > 0:
        coeffs[0] = 1
    k = 1
    while True:
        g1 = k * (3 * k - 1) // 2
        if g1 >= window:
            break
        sign = -1 if k % 2 else 1
        coeffs[g1] += sign
        g2 = k * (3 * k + 1) // 2
        if g2 < window:
            coeffs[g2] += sign
        k += 1
    return coeffs


def euler_product_direct(window: int) -> List[int]:
    """Multiply out prod (1 - x^n) factor by factor; O(window^2) oracle."""
    coeffs = [0] * window
    if window > 0:
        coeffs[0] = 1
    for n in range(1, window):
        for i in range(window - 1, n - 1, -1):
            coeffs[i] -= coeffs[i - n]
    return coeffs


def partition_numbers(window: int) -> List[int]:
    """p(0), ..., p(window-1) from the pentagonal-number recurrence (1/prod(1 - x^n))."""
    p = [0] * window
    if window > 0:
        p[0] = 1
    for n in range(1, window):
        total = 0
        k = 1
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > n:
                break
            sign = 1 if k % 2 else -1
            total += sign * p[n - g1]
            g2 = k * (3 * k + 1) // 2
            if g2 <= n:
                total += sign * p[n - g2]
            k += 1
        p[n] = total
    return p


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def eta_quotient_expand(spec: EtaQuotient, window: int) -> QSeries:
    """
    Exact expansion of prod eta(delta tau)^r_delta below q^window.

    Each factor (x; x)^r is built from the pentagonal series by binary powering
    (inverted for negative r) and then dilated x -> q^delta.

    Raises:
        FractionalLeadingExponentException: Raised when the spec is built.
    """
    window = validate_window(window)
    lead = spec.lead_exponent
    relative = window - lead
    if relative <= 0:
        return QSeries.zero(window, window)

    product = QSeries.one(relative)
    for delta, r in spec.factors:
        x_window = _ceil_div(relative, delta)
        base = QSeries.from_list(pentagonal_euler_product(x_window))
        factor = power(base, abs(r))
        if r < 0:
            factor = invert(factor)
        product = mul(product, factor.dilate(delta))

    logger.debug(f"Expanded {spec} to window {window}")
    return product.shift(lead).truncate(window)


def eta_quotient_expand_mod(spec: EtaQuotient, window: int, p: int, T: int) -> ResidueSeries:
    """Same expansion as eta_quotient_expand, carried out in Z/p^T Z."""
    window = validate_window(window)
    lead = spec.lead_exponent
    relative = window - lead
    if relative <= 0:
        return ResidueSeries(p, T, window, window, np.zeros(0, dtype=np.int64))

    product = ResidueSeries.one(p, T, relative)
    for delta, r in spec.factors:
        x_window = _ceil_div(relative, delta)
        base = ResidueSeries.from_integers(p, T, 0, pentagonal_euler_product(x_window))
        factor = base ** abs(r)
        if r < 0:
            factor = factor.invert()
        product = product * factor.dilate(delta)

    return product.shift(lead).truncate(window)


def newform_f(window: int) -> QSeries:
    """f(tau) = eta(3 tau)^8 = q - 8q^4 + 20q^7 - 70q^13 + ..."""
    return eta_quotient_expand(EtaQuotient(NEWFORM_FACTORS), window)


def newform_coefficients(window: int) -> np.ndarray:
    """
    a_f(n) for 0 <= n < window as int64.

    f = q * prod(1 - q^{3n})^8, so only eta(x)^8 in x = q^3 is expanded, by
    three dense squarings; used where windows reach 10^5.
    """
    window = validate_window(window)
    out = np.zeros(window, dtype=np.int64)
    x_window = _ceil_div(window - 1, 3)
    if x_window == 0:
        return out
    series = np.asarray(pentagonal_euler_product(x_window), dtype=np.int64)
    for _ in range(3):
        series = np.convolve(series, series)[:x_window]
    out[1::3] = series
    return out


def weakform_m9(window: int) -> QSeries:
    """
    m(tau) = (eta(tau)^3 / eta(9 tau)^3 + 3)^2 * eta(3 tau)^8 below q^window.

    m = q^-1 + 2q^2 - 49q^5 + 48q^8 + ..., supported on exponents = 2 mod 3.
    """
    window = validate_window(window)
    quotient = eta_quotient_expand(EtaQuotient(M9_QUOTIENT_FACTORS), window + 2)
    shifted = add(quotient, QSeries.monomial(0, M9_SHIFT, quotient.trunc_order))
    cusp = eta_quotient_expand(EtaQuotient(NEWFORM_FACTORS), window + 2)
    return mul(mul(shifted, shifted), cusp).truncate(window)


def weakform_m9_mod(window: int, p: int, T: int) -> ResidueSeries:
    """m(tau) modulo p^T, without passing through its large integer coefficients."""
    window = validate_window(window)
    quotient = eta_quotient_expand_mod(EtaQuotient(M9_QUOTIENT_FACTORS), window + 2, p, T)
    constant = np.zeros(quotient.trunc_order, dtype=np.int64)
    constant[0] = M9_SHIFT
    shifted = quotient + ResidueSeries(p, T, 0, quotient.trunc_order, constant)
    cusp = eta_quotient_expand_mod(EtaQuotient(NEWFORM_FACTORS), window + 2, p, T)
    return (shifted * shifted * cusp).truncate(window)


def divisor_sums(window: int, exclude_prime: Optional[int] = None) -> List[int]:
    """sigma_1(n) for n < window, optionally only over divisors prime to exclude_prime."""
    sums = np.zeros(max(window, 1), dtype=np.int64)
    for d in range(1, window):
        if exclude_prime and d % exclude_prime == 0:
            continue
        sums[d::d] += d
    return [int(v) for v in sums[:window]]


def eisenstein_E2(window: int) -> QSeries:
    """E2 = 1 - 24 sum sigma_1(n) q^n."""
    window = validate_window(window)
    sigma = divisor_sums(window)
    coeffs = {0: 1}
    coeffs.update({n: -24 * sigma[n] for n in range(1, window)})
    return QSeries(coeffs, window, 0)


def sigma_series_A(window: int) -> QSeries:
    """1 - 24 sum_{n>=1} sigma_1(3n) q^{3n} (unscaled gamma series)."""
    window = validate_window(window)
    sigma = divisor_sums(window)
    coeffs = {0: 1}
    coeffs.update({h: -24 * sigma[h] for h in range(3, window, 3)})
    return QSeries(coeffs, window, 0)


def sigma_series_B(window: int) -> QSeries:
    """1 + 12 sum_{n>=1} (sum_{d | 3n, 3 not dividing d} d) q^{3n} (unscaled delta series)."""
    window = validate_window(window)
    sigma = divisor_sums(window, exclude_prime=3)
    coeffs = {0: 1}
    coeffs.update({h: 12 * sigma[h] for h in range(3, window, 3)})
    return QSeries(coeffs, window, 0)


def import_coefficients(
    document: Union[str, Mapping],
    expected_level: Optional[int] = None,
    expected_weight: Optional[int] = None,
    source: Optional[str] = None,
) -> QSeries:
    """
    Ingest a published coefficient record {"level", "weight", "an": ["a1", ...]}.

    Args:
        document: Parsed JSON object or its text
        expected_level: Level the caller expects, if any
        expected_weight: Weight the caller expects, if any
        source: Free-form provenance label

    Returns:
        QSeries sum a_n q^n with provenance metadata attached

    Raises:
        CoefficientDocumentException: Malformed record or level/weight mismatch
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise CoefficientDocumentException(
                "Coefficient document is not valid JSON", {"error": str(e)}
            )

    try:
        data = require_fields(document, ["level", "weight", "an"])
        level = int(data["level"])
        weight = int(data["weight"])
        an = [int(str(a)) for a in data["an"]]
    except InvalidInputException as e:
        raise CoefficientDocumentException(e.message, e.details)
    except (TypeError, ValueError) as e:
        raise CoefficientDocumentException(
            "Malformed coefficient document", {"error": str(e)}
        )

    if expected_level is not None and level != expected_level:
        raise CoefficientDocumentException(
            "Level mismatch", {"expected": expected_level, "found": level}
        )
    if expected_weight is not None and weight != expected_weight:
        raise CoefficientDocumentException(
            "Weight mismatch", {"expected": expected_weight, "found": weight}
        )
    if not an:
        logger.warning(f"Coefficient document for level {level} weight {weight} is empty")

    provenance = {"level": level, "weight": weight, "source": source, "count": len(an)}
    coeffs = {n: a for n, a in enumerate(an, start=1) if a}
    return QSeries(coeffs, len(an) + 1, 1, provenance=provenance)


def cross_check_coefficients(imported: QSeries, expected: QSeries) -> List[int]:
    """Exponents n >= 1 on the common window where the two series disagree."""
    trunc = min(imported.trunc_order, expected.trunc_order)
    mismatches = [
        n for n in range(1, trunc) if imported.coefficient(n) != expected.coefficient(n)
    ]
    if mismatches:
        logger.warning(
            f"Imported coefficients disagree at {len(mismatches)} exponent(s), first {mismatches[:5]}"
        )
    return mismatches
