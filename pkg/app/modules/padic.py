"""
p-adic Analysis Module

Valuations of the exact rational series f * L_f, the unit congruence modulo 3,
the higher congruence families, the D-power congruences between the mock
modular form and powers of the D operator applied to its shadow, and the
densities pi(3^t; X) of h <= X with 3^t dividing [q^h](f L_f).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from app.exceptions import InvalidInputException, NotPIntegralException, ValuationBoundaryException
from app.modules.modularforms import (
    NEWFORM_WEIGHT,
    newform_coefficients,
    newform_f,
    weakform_m9,
    weakform_m9_mod,
)
from app.modules.qseries import QSeries, ResidueSeries, d_operator, eichler_integral, reduce_mod
from app.modules.shiftedconv import rational_part
from app.validators import validate_modulus_exponent, validate_positive, validate_prime, validate_window

logger = logging.getLogger(__name__)

Valuation = Union[int, float]

DENSITY_PRIME = 3
DEFAULT_T_VALUES = (1, 2, 3, 4, 5)
DEFAULT_X_VALUES = (3000, 6000, 9000, 12000, 15000)


class Statement(str, Enum):
    UNIT_CONGRUENCE = "unit_congruence"
    FAMILY_9N6 = "family_9n6"
    FAMILY_36N30 = "family_36n30"
    D_POWER = "d_power"


@dataclass
class PadicReport:
    p: int
    statement_id: Statement
    range: Tuple[int, int]
    failures: List[Tuple[int, Valuation, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "statement_id": self.statement_id.value,
            "range": list(self.range),
            "pass": self.passed,
            "failures": [list(f) for f in self.failures],
        }


@dataclass(frozen=True)
class DensityRow:
    t: int
    X: int
    count: int
    proportion: Fraction

    def __post_init__(self):
        if not 0 <= self.proportion <= 1:
            raise InvalidInputException(
                "proportion must lie in [0, 1]", {"t": self.t, "X": self.X}
            )


def vp(x: Union[int, Fraction], p: int) -> Valuation:
    """p-adic valuation v_p(num) - v_p(den); math.inf for 0."""
    x = Fraction(x)
    if x == 0:
        return math.inf

    def count(n: int) -> int:
        n = abs(n)
        v = 0
        while n % p == 0:
            n //= p
            v += 1
        return v

    return count(x.numerator) - count(x.denominator)


def _product(window: int, product: Optional[QSeries]) -> QSeries:
    if product is not None and product.trunc_order >= window:
        return product
    return rational_part(window)[2]


def unit_congruence_check(window: int = 2000, product: Optional[QSeries] = None) -> PadicReport:
    """[q^0](f L_f) = 1 and v_3([q^h](f L_f)) >= 1 for 1 <= h < window, exactly."""
    window = validate_window(window, minimum=2)
    product = _product(window, product)
    report = PadicReport(DENSITY_PRIME, Statement.UNIT_CONGRUENCE, (0, window))

    constant = product.coefficient(0)
    if constant != 1:
        report.failures.append((0, vp(constant - 1, DENSITY_PRIME), 1))
    for h in range(1, window):
        v = vp(product.coefficient(h), DENSITY_PRIME)
        if v < 1:
            report.failures.append((h, v, 1))

    logger.info(f"Unit congruence below q^{window}: {'pass' if report.passed else 'FAIL'}")
    return report


def congruence_families_check(
    window: int = 2000, product: Optional[QSeries] = None
) -> List[PadicReport]:
    """v_3 >= 2 on h = 6 mod 9 and v_3 >= 3 on h = 30 mod 36, for h < window."""
    window = validate_window(window, minimum=2)
    if window <= 30:
        logger.warning(f"Window {window} holds no member of the family 36n + 30")
    product = _product(window, product)

    reports = []
    for statement, modulus, residue, required in (
        (Statement.FAMILY_9N6, 9, 6, 2),
        (Statement.FAMILY_36N30, 36, 30, 3),
    ):
        report = PadicReport(DENSITY_PRIME, statement, (residue, window))
        for h in range(residue, window, modulus):
            v = vp(product.coefficient(h), DENSITY_PRIME)
            if v < required:
                report.failures.append((h, v, required))
        logger.info(f"Family {modulus}n+{residue} below q^{window}: {'pass' if report.passed else 'FAIL'}")
        reports.append(report)
    return reports


def normalized_mock_form(alpha: Union[int, Fraction], window: int) -> QSeries:
    """
    F_alpha = L_f - alpha * E_f, with E_f the Eichler integral of f.

    alpha = 0 is the choice available because f has complex multiplication.
    """
    window = validate_window(window)
    L_f = -eichler_integral(weakform_m9(window), NEWFORM_WEIGHT)
    alpha = Fraction(alpha)
    if alpha == 0:
        return L_f
    E_f = eichler_integral(newform_f(window), NEWFORM_WEIGHT)
    return L_f - E_f.scale(alpha)


def minimal_power_multiplier(p: int, t: int, k: int = NEWFORM_WEIGHT) -> int:
    """Smallest r >= 1 with r * phi(p^t) >= k - 1."""
    phi = (p - 1) * p ** (t - 1)
    return max(1, -(-(k - 1) // phi))


def d_power_congruence_check(
    p: int,
    t: int,
    window: int,
    r: Optional[int] = None,
    alpha: Union[int, Fraction] = 0,
) -> PadicReport:
    """
    F_alpha = D^{r phi(p^t) - k + 1}(g_alpha) mod p^t with g_alpha = -m - alpha f.

    Both sides are reduced modulo p^t and compared on every exponent of the
    window. The support of g avoids multiples of p, which is what makes
    D^{r phi(p^t)} act as the identity modulo p^t.

    Raises:
        NotPIntegralException: A coefficient of either side is not p-integral
        InvalidInputException: r is below the admissible minimum
    """
    p = validate_prime(p)
    t = validate_positive(t, "t")
    window = validate_window(window)
    k = NEWFORM_WEIGHT
    phi = (p - 1) * p ** (t - 1)
    minimal = minimal_power_multiplier(p, t, k)
    if r is None:
        r = minimal
    if r < minimal:
        raise InvalidInputException(
            f"r must satisfy r * phi(p^t) >= k - 1", {"r": r, "minimum": minimal}
        )
    exponent = r * phi - k + 1

    alpha = Fraction(alpha)
    g = -weakform_m9(window)
    if alpha:
        g = g - newform_f(window).scale(alpha)
    F = normalized_mock_form(alpha, window)

    left = reduce_mod(F, p, t)
    right = reduce_mod(d_operator(g, exponent), p, t)

    report = PadicReport(p, Statement.D_POWER, (left.lead_order, window))
    for n in range(min(left.lead_order, right.lead_order), window):
        if left.coefficient(n) != right.coefficient(n):
            found = vp(F.coefficient(n) - g.coefficient(n) * n**exponent, p)
            report.failures.append((n, found, t))

    logger.info(
        f"D-power congruence p={p} t={t} r={r} (D^{exponent}) below q^{window}: "
        f"{'pass' if report.passed else 'FAIL'}"
    )
    return report


def mock_product_mod(window: int, T: int, p: int = DENSITY_PRIME) -> ResidueSeries:
    """
    f * L_f modulo p^T below q^window, built from m modulo p^T.

    L_f has coefficient -A(n) n^-3 at n, where A is the coefficient of m; every
    n in the support of m is prime to p.

    Raises:
        NotPIntegralException: A nonzero coefficient of m sits at a multiple of p
    """
    window = validate_window(window, minimum=2)
    T = validate_modulus_exponent(p, T)
    modulus = p**T

    m_mod = weakform_m9_mod(window - 1, p, T)
    values = np.zeros(len(m_mod.values), dtype=np.int64)
    for i, a in enumerate(m_mod.values):
        n = m_mod.lead_order + i
        if a == 0 or n == 0:
            continue
        if n % p == 0:
            raise NotPIntegralException(n, p, p**3)
        values[i] = (-int(a) * pow(n**3 % modulus, -1, modulus)) % modulus
    L_mod = ResidueSeries(p, T, m_mod.lead_order, m_mod.trunc_order, values)

    f_values = newform_coefficients(window + 1)
    f_mod = ResidueSeries(p, T, 1, window + 1, f_values[1:] % modulus)
    return (f_mod * L_mod).truncate(window)


def residue_valuation(residue: int, p: int, T: int) -> int:
    """Valuation of a residue mod p^T, capped at T."""
    if residue == 0:
        return T
    v = 0
    while residue % p == 0:
        residue //= p
        v += 1
    return v


def density_table(
    t_values: Sequence[int] = DEFAULT_T_VALUES,
    X_values: Sequence[int] = DEFAULT_X_VALUES,
    T: int = 8,
    product_mod: Optional[ResidueSeries] = None,
) -> List[DensityRow]:
    """
    pi(3^t; X) = #{1 <= h <= X : 3^t divides [q^h](f L_f)} / X.

    Raises:
        ValuationBoundaryException: If T <= max(t_values)
    """
    t_values = sorted(validate_positive(t, "t") for t in t_values)
    X_values = sorted(validate_positive(X, "X") for X in X_values)
    if not t_values or not X_values:
        raise InvalidInputException("t and X values are required")
    if T <= t_values[-1]:
        raise ValuationBoundaryException(T, t_values[-1])

    window = X_values[-1] + 2
    if product_mod is None or product_mod.trunc_order < window or product_mod.T < T:
        product_mod = mock_product_mod(window, T)
    residues = product_mod.window_values(1, X_values[-1] + 1)

    rows = []
    for X in X_values:
        head = residues[:X]
        for t in t_values:
            count = int(np.count_nonzero(head % DENSITY_PRIME**t == 0))
            rows.append(DensityRow(t, X, count, Fraction(count, X)))
        logger.info(f"Density row X={X}: {[r.count for r in rows[-len(t_values):]]}")
    return rows


def density_frame(rows: Iterable[DensityRow]) -> pd.DataFrame:
    """Rows X, columns 3^t, values pi(3^t; X) as floats."""
    frame = pd.DataFrame(
        [{"X": r.X, "t": r.t, "pi": float(r.proportion)} for r in rows]
    )
    table = frame.pivot(index="X", columns="t", values="pi").sort_index()
    table.columns = [f"{DENSITY_PRIME}^{t}" for t in table.columns]
    return table


def density_mismatches(
    rows: Iterable[DensityRow],
    published: Dict[int, Sequence[float]],
    tolerance: float = 1e-3,
) -> List[Tuple[int, int, float, float]]:
    """
    Cells (X, t, observed, published) where pi(3^t; X) is more than tolerance
    away from a published value printed to three decimals.

    The printed table matches neither floor nor round of the exact proportions
    in every cell, so cells are compared within one unit of the last digit.
    """
    mismatches = []
    for row in rows:
        expected = published.get(row.X)
        if expected is None or row.t > len(expected):
            continue
        observed = float(row.proportion)
        if abs(observed - expected[row.t - 1]) > tolerance + 1e-12:
            mismatches.append((row.X, row.t, observed, expected[row.t - 1]))
    return mismatches


def residue_valuation_agreement(window: int, T: int, product: Optional[QSeries] = None) -> List[int]:
    """Exponents h < window where min(v_3 exact, T) differs from the residue valuation."""
    window = validate_window(window, minimum=2)
    product = _product(window, product)
    residues = mock_product_mod(window, T)
    mismatches = []
    for h in range(1, window):
        exact = vp(product.coefficient(h), DENSITY_PRIME)
        if min(exact, T) != residue_valuation(residues.coefficient(h), DENSITY_PRIME, T):
            mismatches.append(h)
    return mismatches


def scan_congruence_families(
    t: int,
    max_modulus: int,
    window: int,
    product: Optional[QSeries] = None,
    min_members: int = 3,
) -> List[Dict]:
    """
    Arithmetic progressions h = r mod M (M <= max_modulus) on which every
    [q^h](f L_f) with 1 <= h < window has v_3 >= t.

    Progressions whose members all vanish trivially (3 | M, 3 not dividing r)
    and those contained in a smaller reported progression are skipped. This is
    an observation on the window, not a proof.
    """
    t = validate_positive(t, "t")
    max_modulus = validate_positive(max_modulus, "max_modulus")
    window = validate_window(window, minimum=2)
    product = _product(window, product)
    valuations = [math.inf] + [vp(product.coefficient(h), DENSITY_PRIME) for h in range(1, window)]

    found: List[Dict] = []
    for modulus in range(1, max_modulus + 1):
        for residue in range(modulus):
            if modulus % DENSITY_PRIME == 0 and residue % DENSITY_PRIME:
                continue
            if any(modulus % f["modulus"] == 0 and residue % f["modulus"] == f["residue"] for f in found):
                continue
            start = residue or modulus
            members = list(range(start, window, modulus))
            if len(members) < min_members:
                continue
            lowest = min(valuations[h] for h in members)
            if lowest >= t:
                found.append(
                    {
                        "modulus": modulus,
                        "residue": residue,
                        "min_valuation": lowest if lowest != math.inf else None,
                        "members": len(members),
                    }
                )
    logger.info(f"Observed {len(found)} progression(s) with v_3 >= {t} below q^{window}")
    return found
