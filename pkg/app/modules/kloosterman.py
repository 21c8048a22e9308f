"""
Kloosterman Sums Module

K(m, n, c) = sum over d mod c with gcd(d, c) = 1 of e((m * dbar + n * d) / c).

Two evaluation paths are provided: a high-precision mpmath summation with an
explicit error bound (used for the vanishing lemma and small checks) and a
vectorized float64 batch over many moduli (used by the Poincare sums).
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from mpmath import mp, mpf

from app.exceptions import HypothesisViolationException, NonCoprimeException
from app.modules.specialfn import PrecisionReal
from app.validators import validate_positive, validate_precision, validate_prime

logger = logging.getLogger(__name__)

# float64 error per term: rounding of 2*pi*phase/c, the cosine and the summation
FLOAT_TERM_ERROR = 32 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class KloostermanQuery:
    m: int
    n: int
    c: int

    def __post_init__(self):
        validate_positive(self.c, "c")


def mod_inverse(d: int, c: int) -> int:
    """
    Representative of d^-1 mod c in [0, c).

    Raises:
        NonCoprimeException: If gcd(d, c) != 1
    """
    c = validate_positive(c, "c")
    if math.gcd(d, c) != 1:
        raise NonCoprimeException(d, c)
    return pow(d, -1, c) % c


def unit_residues(c: int) -> List[int]:
    """Residues d in [0, c) prime to c (just [0] for c = 1)."""
    return [d for d in range(c) if math.gcd(d, c) == 1]


def euler_phi(c: int) -> int:
    return len(unit_residues(c))


def divisor_count(c: int) -> int:
    count = 0
    d = 1
    while d * d <= c:
        if c % d == 0:
            count += 1 if d * d == c else 2
        d += 1
    return count


def _phase_counts(query: KloostermanQuery) -> Counter:
    """Multiset of (m * dbar + n * d) mod c over the units d."""
    m, n, c = query.m, query.n, query.c
    return Counter((m * pow(d, -1, c) + n * d) % c for d in unit_residues(c))


def kloosterman_sum_complex(query: KloostermanQuery, precision: int = 128) -> Tuple[mpf, mpf]:
    """Real and imaginary parts of the raw exponential sum at the given precision."""
    precision = validate_precision(precision)
    counts = _phase_counts(query)
    with mp.workprec(precision + 16):
        real = mpf(0)
        imag = mpf(0)
        for r, mult in sorted(counts.items()):
            angle = mpf(2 * r) / query.c
            real += mult * mp.cospi(angle)
            imag += mult * mp.sinpi(angle)
    with mp.workprec(precision):
        return +real, +imag


def kloosterman_sum(query: KloostermanQuery, precision: int = 128) -> PrecisionReal:
    """
    K(m, n, c) as a PrecisionReal.

    The sum is real (d -> -d pairs conjugate terms), so only cosines are summed.
    Each of at most c terms carries rounding below c * 2^-precision in total
    magnitude, giving the bound c^2 * 2^-precision.
    """
    precision = validate_precision(precision)
    counts = _phase_counts(query)
    with mp.workprec(precision + 16):
        total = mpf(0)
        for r, mult in sorted(counts.items()):
            total += mult * mp.cospi(mpf(2 * r) / query.c)
    with mp.workprec(precision):
        bound = mpf(query.c) ** 2 * mpf(2) ** (-precision)
        return PrecisionReal(+total, bound)


def _vector_inverse(units: np.ndarray, c: int) -> np.ndarray:
    """units^(phi(c) - 1) mod c elementwise; c < 2^31 keeps products in int64."""
    exponent = len(units) - 1
    result = np.ones_like(units)
    base = units % c
    while exponent:
        if exponent & 1:
            result = (result * base) % c
        base = (base * base) % c
        exponent >>= 1
    return result % c


def kloosterman_sum_batch(m: int, n_values: Sequence[int], moduli: Sequence[int]) -> np.ndarray:
    """
    float64 K(m, n, c) for every c in moduli (rows) and n in n_values (columns).

    Inverses are shared across the n values; the absolute rounding error of an
    entry is below FLOAT_TERM_ERROR * c.
    """
    ns = np.asarray(list(n_values), dtype=np.int64)
    out = np.zeros((len(moduli), len(ns)), dtype=np.float64)
    for row, c in enumerate(moduli):
        c = int(c)
        residues = np.arange(c, dtype=np.int64)
        units = residues[np.gcd(residues, c) == 1]
        if c == 1:
            out[row, :] = 1.0
            continue
        inverses = _vector_inverse(units, c)
        first = ((m % c) * inverses) % c
        for col, n in enumerate(ns):
            phase = (first + (int(n) % c) * units) % c
            out[row, col] = np.cos(2.0 * np.pi * phase / c).sum()
    return out


def check_multiplicativity(
    m: int, n: int, c1: int, c2: int, tol: float = 1e-20, precision: int = 128
) -> bool:
    """
    Twisted multiplicativity K(m,n,c1 c2) = K(m c2bar, n c2bar, c1) * K(m c1bar, n c1bar, c2).

    Raises:
        NonCoprimeException: If gcd(c1, c2) != 1
    """
    if math.gcd(c1, c2) != 1:
        raise NonCoprimeException(c1, c2)
    c1_bar = mod_inverse(c1, c2)
    c2_bar = mod_inverse(c2, c1)
    whole = kloosterman_sum(KloostermanQuery(m, n, c1 * c2), precision)
    left = kloosterman_sum(KloostermanQuery(m * c2_bar, n * c2_bar, c1), precision)
    right = kloosterman_sum(KloostermanQuery(m * c1_bar, n * c1_bar, c2), precision)
    with mp.workprec(precision):
        return bool(abs(whole.value - left.value * right.value) < tol)


def vanishing_scan(
    p: int,
    m: int,
    n_max: int,
    c_max: int,
    precision: int = 128,
    tol: float = 1e-20,
) -> Dict:
    """
    Scan K(m, n p, p^2 c) for 1 <= n <= n_max, 1 <= c <= c_max.

    These sums vanish whenever p does not divide m.

    Returns:
        {"max_abs", "worst_case": [m, n p, p^2 c], "pass"}

    Raises:
        HypothesisViolationException: If p divides m
    """
    p = validate_prime(p)
    n_max = validate_positive(n_max, "n_max")
    c_max = validate_positive(c_max, "c_max")
    if m % p == 0:
        raise HypothesisViolationException(
            f"{p} divides m={m}; the vanishing lemma does not apply",
            {"p": p, "m": m},
        )

    worst = (mpf(-1), [m, p, p * p])
    for c in range(1, c_max + 1):
        for n in range(1, n_max + 1):
            value = kloosterman_sum(KloostermanQuery(m, n * p, p * p * c), precision)
            magnitude = abs(value.value)
            if magnitude > worst[0]:
                worst = (magnitude, [m, n * p, p * p * c])
        logger.debug(f"Vanishing scan p={p}: c={c} done")

    max_abs = float(worst[0])
    report = {"max_abs": max_abs, "worst_case": worst[1], "pass": max_abs < tol}
    logger.info(
        f"Vanishing scan p={p} m={m} n<={n_max} c<={c_max}: max |K| = {max_abs:.3e}"
    )
    return report


def weil_bound_observation(m: int, n: int, moduli: Sequence[int], precision: int = 64) -> Dict:
    """
    Compare |K(m,n,c)| with d(c) * sqrt(gcd(m,n,c)) * sqrt(c) on the given moduli.

    Observational only: exceedances are logged as warnings, never raised.
    """
    exceeded = []
    max_ratio = 0.0
    for c in moduli:
        value = abs(float(kloosterman_sum(KloostermanQuery(m, n, int(c)), precision)))
        bound = divisor_count(c) * math.sqrt(math.gcd(math.gcd(m, n), c)) * math.sqrt(c)
        ratio = value / bound
        max_ratio = max(max_ratio, ratio)
        if ratio > 1 + 1e-9:
            exceeded.append(int(c))
    if exceeded:
        logger.warning(f"Weil-type bound exceeded for m={m}, n={n} at c in {exceeded[:10]}")
    return {"checked": len(moduli), "exceeded": exceeded, "max_ratio": max_ratio}
