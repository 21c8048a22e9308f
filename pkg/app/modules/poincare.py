"""
Poincare Series Module

Fourier coefficients of the classical Poincare series P(m, k, N) and of the
holomorphic part of the Maass-Poincare series Q(-m, k, N), each as a truncated
Kloosterman-Bessel sum over moduli c = 0 mod N with a certified tail bound.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from mpmath import mpf

from app.exceptions import EmptySumException, ImaginaryResidueException, PoincareException
from app.modules.kloosterman import FLOAT_TERM_ERROR, kloosterman_sum_batch
from app.modules.specialfn import (
    PrecisionReal,
    bessel_I,
    bessel_I_majorant,
    bessel_J,
    bessel_J_majorant,
)
from app.validators import validate_even_weight, validate_positive

logger = logging.getLogger(__name__)

# moduli handled per Kloosterman batch
BLOCK_SIZE = 64
BESSEL_PRECISION = 64

BesselFn = Callable[[int, float], PrecisionReal]


@dataclass(frozen=True)
class HarmonicParams:
    m: int
    k: int
    N: int

    def __post_init__(self):
        validate_positive(self.m, "m")
        validate_even_weight(self.k)
        validate_positive(self.N, "N")


@dataclass(frozen=True)
class PoincareCoefficient:
    n: int
    value: float
    tail_bound: float
    c_max: int

    def __post_init__(self):
        if not math.isfinite(self.tail_bound) or self.tail_bound < 0:
            raise PoincareException(
                "tail bound must be finite", {"n": self.n, "tail_bound": self.tail_bound}
            )

    def normalized(self, factor: float) -> "PoincareCoefficient":
        """Divide value and bound by a positive normalizing factor (e.g. Gamma(k))."""
        return replace(self, value=self.value / factor, tail_bound=self.tail_bound / abs(factor))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "value": self.value,
            "tail_bound": self.tail_bound,
            "c_max": self.c_max,
        }


def _real_unit_power(exponent: int) -> int:
    """i^exponent, which must be real."""
    value = (1, 1j, -1, -1j)[exponent % 4]
    if isinstance(value, complex):
        raise ImaginaryResidueException(
            f"i^{exponent} is not real", {"exponent": exponent}
        )
    return value


def _moduli(params: HarmonicParams, c_max: int) -> List[int]:
    if c_max < params.N:
        raise EmptySumException(c_max, params.N)
    return list(range(params.N, c_max + 1, params.N))


def _block_terms(
    m_arg: int,
    n_args: Sequence[int],
    block: Sequence[int],
    bessel: Callable[[int, int], PrecisionReal],
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-(c, n) terms K(m_arg, n_arg, c)/c * B(c, n) and their rounding bounds."""
    sums = kloosterman_sum_batch(m_arg, n_args, block)
    terms = np.zeros_like(sums)
    errors = np.zeros_like(sums)
    for row, c in enumerate(block):
        for col in range(len(n_args)):
            b = bessel(c, col)
            b_value = float(b.value)
            k_value = sums[row, col]
            terms[row, col] = k_value / c * b_value
            errors[row, col] = (
                FLOAT_TERM_ERROR * abs(b_value)
                + abs(k_value) / c * float(b.error_bound)
                + abs(terms[row, col]) * FLOAT_TERM_ERROR
            )
    return terms, errors


def _kloosterman_bessel_sums(
    m_arg: int,
    n_args: Sequence[int],
    moduli: Sequence[int],
    bessel: Callable[[int, int], PrecisionReal],
    workers: int = 1,
) -> Tuple[List[float], List[float]]:
    """
    Sum the terms over all moduli for every n, with the rounding bound.

    Blocks are independent and the final reduction is math.fsum (exactly
    rounded), so the value does not depend on the worker count.
    """
    blocks = [moduli[i : i + BLOCK_SIZE] for i in range(0, len(moduli), BLOCK_SIZE)]

    def run(block):
        return _block_terms(m_arg, n_args, block, bessel)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(block) for block in blocks]

    values, rounding = [], []
    for col in range(len(n_args)):
        values.append(math.fsum(t for terms, _ in results for t in terms[:, col]))
        rounding.append(math.fsum(e for _, errors in results for e in errors[:, col]))
    logger.debug(f"Summed {len(moduli)} moduli in {len(blocks)} blocks for n={list(n_args)}")
    return values, rounding


def _power_tail(params: HarmonicParams, c_max: int, power: int) -> float:
    """Bound for sum_{c > c_max, N | c} c^-power with power >= 2."""
    if power < 2:
        raise PoincareException(
            "trivial bound gives no finite tail", {"k": params.k, "power": power}
        )
    J = c_max // params.N
    return params.N ** (-power) * J ** (1 - power) / (power - 1)


def classical_coeffs(
    params: HarmonicParams, ns: Sequence[int], c_max: int, workers: int = 1
) -> Dict[int, PoincareCoefficient]:
    """
    a_m(n) = delta_{mn} + 2 pi (-1)^{k/2} (n/m)^{(k-1)/2}
             * sum_{N | c <= c_max} K(m, n, c)/c * J_{k-1}(4 pi sqrt(mn)/c)

    for several n sharing one pass over the moduli.

    The tail uses |K| <= c and |J_{k-1}(x)| <= (x/2)^{k-1}/(k-1)!, so each
    omitted term is at most (2 pi sqrt(mn))^{k-1}/(k-1)! * c^{1-k}.
    """
    ns = [validate_positive(n, "n") for n in ns]
    moduli = _moduli(params, c_max)
    m, k = params.m, params.k
    order = k - 1
    sign = _real_unit_power(k)  # (-1)^{k/2}

    def bessel(c: int, col: int) -> PrecisionReal:
        return bessel_J(order, 4 * math.pi * math.sqrt(m * ns[col]) / c, BESSEL_PRECISION)

    values, rounding = _kloosterman_bessel_sums(m, ns, moduli, bessel, workers)
    tail_power = _power_tail(params, c_max, order)

    result = {}
    for col, n in enumerate(ns):
        prefactor = 2 * math.pi * (n / m) ** (order / 2)
        majorant = bessel_J_majorant(order, 4 * math.pi * math.sqrt(m * n))
        value = (1.0 if n == m else 0.0) + sign * prefactor * values[col]
        tail = prefactor * (majorant * tail_power + rounding[col])
        result[n] = PoincareCoefficient(n, value, tail, c_max)
    return result


def classical_coeff(
    params: HarmonicParams, n: int, c_max: int, workers: int = 1
) -> PoincareCoefficient:
    """The n-th Fourier coefficient of P(m, k, N), including the leading q^m term."""
    coefficient = classical_coeffs(params, [n], c_max, workers)[n]
    logger.info(
        f"a_P({n}) for (m,k,N)=({params.m},{params.k},{params.N}), c_max={c_max}: "
        f"{coefficient.value:.6f} +/- {coefficient.tail_bound:.2e}"
    )
    return coefficient


def maass_hol_coeffs(
    params: HarmonicParams, ns: Sequence[int], c_max: int, workers: int = 1
) -> Dict[int, PoincareCoefficient]:
    """
    c_m(n) = -2 pi i^k Gamma(k) (n/m)^{(1-k)/2}
             * sum_{N | c <= c_max} K(-m, n, c)/c * I_{k-1}(4 pi sqrt(mn)/c)

    The principal part of Q+ is Gamma(k) q^-m; divide by Gamma(k) to compare
    with forms normalized to leading coefficient 1.
    """
    ns = [validate_positive(n, "n") for n in ns]
    moduli = _moduli(params, c_max)
    m, k = params.m, params.k
    order = k - 1
    sign = _real_unit_power(k)
    gamma_k = math.factorial(k - 1)

    def bessel(c: int, col: int) -> PrecisionReal:
        return bessel_I(order, 4 * math.pi * math.sqrt(m * ns[col]) / c, BESSEL_PRECISION)

    values, rounding = _kloosterman_bessel_sums(-m, ns, moduli, bessel, workers)
    tail_power = _power_tail(params, c_max, order)
    first_omitted = params.N * (c_max // params.N + 1)

    result = {}
    for col, n in enumerate(ns):
        prefactor = 2 * math.pi * gamma_k * (n / m) ** (-order / 2)
        x_scale = 4 * math.pi * math.sqrt(m * n)
        # I_{k-1}(x_scale/c) <= (x_scale/2c)^{k-1}/(k-1)! * exp((x_scale/c)^2/4)
        growth = math.exp((x_scale / first_omitted) ** 2 / 4)
        majorant = bessel_J_majorant(order, x_scale) * growth
        value = -sign * prefactor * values[col]
        tail = prefactor * (majorant * tail_power + rounding[col])
        result[n] = PoincareCoefficient(n, value, tail, c_max)
    return result


def maass_hol_coeff(
    params: HarmonicParams, n: int, c_max: int, workers: int = 1
) -> PoincareCoefficient:
    """The y-independent coefficient of q^n in Q+(-m, k, N)."""
    coefficient = maass_hol_coeffs(params, [n], c_max, workers)[n]
    logger.info(
        f"c_Q({n}) for (m,k,N)=({params.m},{params.k},{params.N}), c_max={c_max}: "
        f"{coefficient.value:.6f} +/- {coefficient.tail_bound:.2e}"
    )
    return coefficient


def maass_const_term(params: HarmonicParams, c_max: int, workers: int = 1) -> PoincareCoefficient:
    """-(2 pi i)^k m^{k-1} sum_{N | c <= c_max} K(-m, 0, c) / c^k."""
    moduli = _moduli(params, c_max)
    m, k = params.m, params.k

    def weight(c: int, col: int) -> PrecisionReal:
        return PrecisionReal(mpf(float(c) ** (1 - k)), mpf(0))

    values, rounding = _kloosterman_bessel_sums(-m, [0], moduli, weight, workers)
    prefactor = (2 * math.pi) ** k * m ** (k - 1)
    value = -_real_unit_power(k) * prefactor * values[0]
    tail = prefactor * (_power_tail(params, c_max, k - 1) + rounding[0])
    return PoincareCoefficient(0, value, tail, c_max)


def beta_constant(c_max: int, workers: int = 1) -> PrecisionReal:
    """
    beta = (4 pi)^3 / 2 * ||P(1, 4, 9)||^2.

    By the Petersson coefficient formula ||P||^2 = (k-2)!/(4 pi)^{k-1} * a_P(1),
    so for k = 4 beta is the first Fourier coefficient of P(1, 4, 9).
    """
    coefficient = classical_coeff(HarmonicParams(1, 4, 9), 1, c_max, workers)
    return PrecisionReal(mpf(coefficient.value), mpf(coefficient.tail_bound))


def xi_relation_check(
    params: HarmonicParams, n: int, c_max: int, tol: float = 1e-6, workers: int = 1
) -> bool:
    """
    Compare the J-Bessel Kloosterman series of the negative-index coefficients
    of Q(-m, k, N) (arguments -m, -n) with the one in the coefficients of
    P(m, k, N) (arguments m, n).

    Agreement shows at coefficient level that xi_{2-k} Q is proportional to P
    with constant (4 pi)^{k-1} m^{k-1} (k-1).
    """
    n = validate_positive(n, "n")
    moduli = _moduli(params, c_max)
    m, k = params.m, params.k
    order = k - 1
    x_scale = 4 * math.pi * math.sqrt(m * n)

    def bessel(c: int, col: int) -> PrecisionReal:
        return bessel_J(order, x_scale / c, BESSEL_PRECISION)

    from_maass, err_maass = _kloosterman_bessel_sums(-m, [-n], moduli, bessel, workers)
    from_classical, err_classical = _kloosterman_bessel_sums(m, [n], moduli, bessel, workers)
    difference = abs(from_maass[0] - from_classical[0])
    shadow = (4 * math.pi) ** order * m**order * order
    logger.info(
        f"xi check n={n}: maass sum {from_maass[0]:.10g}, classical sum "
        f"{from_classical[0]:.10g}, shadow constant {shadow:.6g}, diff {difference:.2e}"
    )
    return difference < tol + err_maass[0] + err_classical[0]
