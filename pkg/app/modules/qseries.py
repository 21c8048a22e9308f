"""
Truncated Laurent q-series Module
Exact rational q-series, residue q-series modulo p^T, and the formal
operators (D, Eichler integral, Serre derivative, reduction) built on them.
"""

import logging
import math
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np

from app.exceptions import (
    InvalidInputException,
    NonInvertibleSeriesException,
    NotPIntegralException,
    WindowException,
)

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]

# int64 accumulation stays exact below this bound
_INT64_SAFE = 2**62
# Above this many sparse products the dense numpy kernel is used when it is exact
_SPARSE_PRODUCT_LIMIT = 2_000_000
# Common-denominator fast path is skipped when the lcm grows past this
_COMMON_DENOMINATOR_BITS = 4096


def _to_fraction(value: Rational) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    raise InvalidInputException(
        "Series coefficients must be exact rationals",
        details={"type": type(value).__name__, "value": repr(value)},
    )


def _convolve_integers(xs: List[int], ys: List[int], size: int) -> List[int]:
    """First `size` coefficients of the product of two dense integer lists."""
    xs = xs[:size]
    ys = ys[:size]
    nz_x = [(i, x) for i, x in enumerate(xs) if x]
    nz_y = [(j, y) for j, y in enumerate(ys) if y]
    if not nz_x or not nz_y:
        return [0] * size

    max_x = max(abs(x) for _, x in nz_x)
    max_y = max(abs(y) for _, y in nz_y)
    products = len(nz_x) * len(nz_y)
    exact_in_int64 = max_x * max_y * min(len(nz_x), len(nz_y)) < _INT64_SAFE

    if products > _SPARSE_PRODUCT_LIMIT and exact_in_int64:
        a = np.asarray(xs, dtype=np.int64)
        b = np.asarray(ys, dtype=np.int64)
        return [int(v) for v in np.convolve(a, b)[:size]]

    out = [0] * size
    for i, x in nz_x:
        limit = size - i
        for j, y in nz_y:
            if j >= limit:
                break
            out[i + j] += x * y
    return out


def _convolve_mod(a: np.ndarray, b: np.ndarray, modulus: int, size: int) -> np.ndarray:
    """First `size` coefficients of a residue product, exact for modulus < 2^31."""
    a = a[:size].astype(np.int64)
    b = b[:size].astype(np.int64)
    if len(a) == 0 or len(b) == 0:
        return np.zeros(size, dtype=np.int64)

    if modulus * modulus * min(len(a), len(b)) < _INT64_SAFE:
        out = np.convolve(a, b)[:size] % modulus
    else:
        # 16-bit limbs keep every partial product and sum inside int64
        base = 1 << 16
        a_hi, a_lo = a >> 16, a & (base - 1)
        b_hi, b_lo = b >> 16, b & (base - 1)
        hh = np.convolve(a_hi, b_hi)[:size] % modulus
        mid = (np.convolve(a_hi, b_lo)[:size] + np.convolve(a_lo, b_hi)[:size]) % modulus
        ll = np.convolve(a_lo, b_lo)[:size] % modulus
        shift = base % modulus
        high = (hh * shift % modulus) * shift % modulus
        out = (high + mid * shift % modulus + ll) % modulus

    if len(out) < size:
        out = np.concatenate([out, np.zeros(size - len(out), dtype=np.int64)])
    return out.astype(np.int64)


class QSeries:
    """
    Truncated Laurent series in q with exact rational coefficients.

    A series stands for sum(c_n q^n for lead_order <= n < trunc_order) + O(q^trunc_order).
    Instances are immutable; every operation returns a new series whose window
    only covers coefficients that are fully determined by the operands.
    """

    __slots__ = ("_coeffs", "lead_order", "trunc_order", "provenance")

    def __init__(
        self,
        coeffs: Mapping[int, Rational],
        trunc_order: int,
        lead_order: Optional[int] = None,
        provenance: Optional[Dict] = None,
    ):
        """
        Initialize a series.

        Args:
            coeffs: Map exponent -> exact rational coefficient
            trunc_order: Exclusive upper exponent bound
            lead_order: Minimal exponent; defaults to the smallest stored exponent
            provenance: Optional metadata (e.g. source of imported coefficients)
        """
        data = {int(n): _to_fraction(c) for n, c in coeffs.items()}
        if lead_order is None:
            lead_order = min(data) if data else trunc_order
        for n in data:
            if not lead_order <= n < trunc_order:
                raise WindowException(n, lead_order, trunc_order)
        self._coeffs = data
        self.lead_order = int(lead_order)
        self.trunc_order = int(trunc_order)
        self.provenance = provenance

    # Constructors

    @classmethod
    def zero(cls, trunc_order: int, lead_order: int = 0) -> "QSeries":
        return cls({}, trunc_order, lead_order)

    @classmethod
    def one(cls, trunc_order: int) -> "QSeries":
        return cls({0: 1}, trunc_order, 0)

    @classmethod
    def monomial(cls, exponent: int, coefficient: Rational, trunc_order: int) -> "QSeries":
        return cls({exponent: coefficient}, trunc_order, exponent)

    @classmethod
    def from_list(cls, values: Iterable[Rational], lead_order: int = 0) -> "QSeries":
        """Series whose coefficients start at lead_order and fill the window."""
        values = list(values)
        coeffs = {lead_order + i: v for i, v in enumerate(values) if v}
        return cls(coeffs, lead_order + len(values), lead_order)

    # Access

    def __getitem__(self, exponent: int) -> Fraction:
        return self.coefficient(exponent)

    def coefficient(self, exponent: int) -> Fraction:
        """Coefficient of q^exponent; raises outside the trustworthy window."""
        if exponent >= self.trunc_order:
            raise WindowException(exponent, self.lead_order, self.trunc_order)
        return self._coeffs.get(exponent, Fraction(0))

    def items(self) -> Iterator[Tuple[int, Fraction]]:
        """Stored (exponent, coefficient) pairs in increasing exponent order."""
        for n in sorted(self._coeffs):
            yield n, self._coeffs[n]

    def support(self) -> List[int]:
        """Exponents carrying a nonzero coefficient."""
        return [n for n, c in self.items() if c]

    def valuation(self) -> int:
        """Smallest exponent with a nonzero coefficient (trunc_order for zero)."""
        support = self.support()
        return support[0] if support else self.trunc_order

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self._coeffs.values())

    def dense(self, start: int, stop: int) -> List[Fraction]:
        return [self._coeffs.get(n, Fraction(0)) for n in range(start, stop)]

    def normalized(self) -> "QSeries":
        """Same series with stored zeros removed."""
        return QSeries(
            {n: c for n, c in self._coeffs.items() if c},
            self.trunc_order,
            self.lead_order,
            self.provenance,
        )

    # Structural helpers

    def truncate(self, window: int) -> "QSeries":
        trunc = min(self.trunc_order, window)
        lead = min(self.lead_order, trunc)
        return QSeries(
            {n: c for n, c in self._coeffs.items() if n < trunc}, trunc, lead
        )

    def shift(self, k: int) -> "QSeries":
        """Multiply by q^k."""
        return QSeries(
            {n + k: c for n, c in self._coeffs.items()},
            self.trunc_order + k,
            self.lead_order + k,
        )

    def dilate(self, d: int) -> "QSeries":
        """Substitute q -> q^d (d >= 1)."""
        if d < 1:
            raise InvalidInputException("dilation factor must be positive", {"d": d})
        return QSeries(
            {n * d: c for n, c in self._coeffs.items()},
            self.trunc_order * d,
            self.lead_order * d,
        )

    def scale(self, factor: Rational) -> "QSeries":
        factor = _to_fraction(factor)
        return QSeries(
            {n: c * factor for n, c in self._coeffs.items()},
            self.trunc_order,
            self.lead_order,
        )

    # Arithmetic

    def __add__(self, other: "QSeries") -> "QSeries":
        return add(self, other)

    def __sub__(self, other: "QSeries") -> "QSeries":
        return add(self, -other)

    def __neg__(self) -> "QSeries":
        return self.scale(-1)

    def __mul__(self, other: Union["QSeries", Rational]) -> "QSeries":
        if isinstance(other, QSeries):
            return mul(self, other)
        return self.scale(other)

    def __rmul__(self, other: Rational) -> "QSeries":
        return self.scale(other)

    def __pow__(self, exponent: int) -> "QSeries":
        return power(self, exponent)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        return (
            self.trunc_order == other.trunc_order
            and dict(self.normalized().items()) == dict(other.normalized().items())
        )

    def __hash__(self):
        return hash((self.trunc_order, tuple(self.normalized().items())))

    def equal_on_window(self, other: "QSeries") -> bool:
        """Exact equality on the common window of both series."""
        trunc = min(self.trunc_order, other.trunc_order)
        return self.truncate(trunc) == other.truncate(trunc)

    def __repr__(self) -> str:
        terms = [f"({c})q^{n}" for n, c in self.items() if c][:6]
        more = " + ..." if len(self.support()) > 6 else ""
        body = " + ".join(terms) if terms else "0"
        return f"QSeries({body}{more} + O(q^{self.trunc_order}))"

    # Serialization

    def to_dict(self) -> dict:
        """JSON-ready form: {"lead", "trunc", "coeffs": [[n, "num/den"], ...]}."""
        return {
            "lead": self.lead_order,
            "trunc": self.trunc_order,
            "coeffs": [[n, str(c)] for n, c in self.items() if c],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "QSeries":
        try:
            coeffs = {int(n): Fraction(str(c)) for n, c in data["coeffs"]}
            return cls(coeffs, int(data["trunc"]), int(data["lead"]))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputException(
                "Malformed series document", details={"error": str(e)}
            )


def add(a: QSeries, b: QSeries) -> QSeries:
    """Coefficientwise sum on the intersection window."""
    trunc = min(a.trunc_order, b.trunc_order)
    lead = min(a.lead_order, b.lead_order, trunc)
    coeffs: Dict[int, Fraction] = {}
    for n, c in a.items():
        if n < trunc:
            coeffs[n] = c
    for n, c in b.items():
        if n < trunc:
            coeffs[n] = coeffs.get(n, Fraction(0)) + c
    return QSeries(coeffs, trunc, lead)


def _common_denominator(series: QSeries) -> int:
    denominator = 1
    for _, c in series.items():
        denominator = math.lcm(denominator, c.denominator)
        if denominator.bit_length() > _COMMON_DENOMINATOR_BITS:
            return 0
    return denominator


def mul(a: QSeries, b: QSeries) -> QSeries:
    """
    Exact Cauchy product.

    The result window is min(a.trunc + b.lead, b.trunc + a.lead). Integer
    operands (after extracting a common denominator) go through an integer
    kernel; otherwise the schoolbook rational product is used.
    """
    lead = a.lead_order + b.lead_order
    trunc = min(a.trunc_order + b.lead_order, b.trunc_order + a.lead_order)
    size = max(trunc - lead, 0)
    if size == 0:
        return QSeries.zero(trunc, min(lead, trunc))

    den_a = _common_denominator(a)
    den_b = _common_denominator(b) if den_a else 0

    if den_a and den_b:
        xs = [int(c * den_a) for c in a.dense(a.lead_order, a.lead_order + size)]
        ys = [int(c * den_b) for c in b.dense(b.lead_order, b.lead_order + size)]
        values = _convolve_integers(xs, ys, size)
        denominator = den_a * den_b
        coeffs = {
            lead + i: Fraction(v, denominator) for i, v in enumerate(values) if v
        }
        return QSeries(coeffs, trunc, lead)

    nz_a = [(n, c) for n, c in a.items() if c]
    nz_b = [(n, c) for n, c in b.items() if c]
    # Integer operand first keeps the inner products as Fraction * int
    if a.is_integral() and not b.is_integral():
        nz_a, nz_b = nz_b, nz_a
    buckets: Dict[int, List[Fraction]] = {}
    for n, x in nz_a:
        for m, y in nz_b:
            e = n + m
            if e >= trunc:
                break
            buckets.setdefault(e, []).append(x * y)
    coeffs = {e: sum(terms, Fraction(0)) for e, terms in buckets.items()}
    return QSeries(coeffs, trunc, lead)


def power(a: QSeries, exponent: int) -> QSeries:
    """Binary powering; negative exponents go through invert."""
    if exponent < 0:
        return power(invert(a), -exponent)
    window = a.trunc_order - a.lead_order
    result = QSeries.one(window)
    base = a
    while exponent:
        if exponent & 1:
            result = mul(result, base)
        exponent >>= 1
        if exponent:
            base = mul(base, base)
    return result


def invert(a: QSeries) -> QSeries:
    """
    Multiplicative inverse by the convolution recurrence.

    Raises:
        NonInvertibleSeriesException: If the coefficient at lead_order is zero.
    """
    v = a.lead_order
    u = a.coefficient(v) if v < a.trunc_order else Fraction(0)
    if u == 0:
        raise NonInvertibleSeriesException(v)

    size = a.trunc_order - v
    tail = [(n - v, c) for n, c in a.items() if c and n > v]
    inv_u = 1 / u
    b: List[Fraction] = [inv_u] + [Fraction(0)] * (size - 1)
    for n in range(1, size):
        acc = Fraction(0)
        for i, c in tail:
            if i > n:
                break
            acc += c * b[n - i]
        b[n] = -acc * inv_u
    coeffs = {i - v: c for i, c in enumerate(b) if c}
    return QSeries(coeffs, size - v, -v)


def d_operator(a: QSeries, j: int = 1) -> QSeries:
    """Apply D = q d/dq j times: c_n -> n^j c_n."""
    if j < 0:
        raise InvalidInputException("D-power must be non-negative", {"j": j})
    return QSeries(
        {n: c * n**j for n, c in a.items()}, a.trunc_order, a.lead_order
    )


def eichler_integral(a: QSeries, k: int) -> QSeries:
    """Formal Eichler integral sum_{n != 0} A(n) n^{1-k} q^n."""
    if k < 2 or k % 2:
        raise InvalidInputException(
            "Eichler integral needs an even weight k >= 2", {"k": k}
        )
    return QSeries(
        {n: c / Fraction(n) ** (k - 1) for n, c in a.items() if n != 0},
        a.trunc_order,
        a.lead_order,
    )


def serre_derivative(a: QSeries, k: int, e2: QSeries) -> QSeries:
    """Serre derivative theta_k(a) = D(a) - (k/12) E2 a."""
    return add(d_operator(a, 1), mul(e2, a).scale(Fraction(-k, 12)))


class ResidueSeries:
    """
    Truncated Laurent series with coefficients in Z/p^T Z.

    Coefficients are stored densely as int64 residues in [0, p^T), index i
    standing for the exponent lead_order + i.
    """

    __slots__ = ("p", "T", "modulus", "lead_order", "trunc_order", "values")

    def __init__(self, p: int, T: int, lead_order: int, trunc_order: int, values: np.ndarray):
        self.p = int(p)
        self.T = int(T)
        self.modulus = self.p**self.T
        self.lead_order = int(lead_order)
        self.trunc_order = int(trunc_order)
        size = max(self.trunc_order - self.lead_order, 0)
        array = np.zeros(size, dtype=np.int64)
        values = np.asarray(values, dtype=np.int64) % self.modulus
        array[: min(size, len(values))] = values[:size]
        self.values = array
        self.values.setflags(write=False)

    @classmethod
    def from_integers(
        cls, p: int, T: int, lead_order: int, values: Iterable[int]
    ) -> "ResidueSeries":
        modulus = p**T
        residues = [int(v) % modulus for v in values]
        return cls(p, T, lead_order, lead_order + len(residues), np.asarray(residues, dtype=np.int64))

    @classmethod
    def one(cls, p: int, T: int, trunc_order: int) -> "ResidueSeries":
        values = np.zeros(trunc_order, dtype=np.int64)
        if trunc_order > 0:
            values[0] = 1
        return cls(p, T, 0, trunc_order, values)

    def coefficient(self, exponent: int) -> int:
        if exponent >= self.trunc_order:
            raise WindowException(exponent, self.lead_order, self.trunc_order)
        if exponent < self.lead_order:
            return 0
        return int(self.values[exponent - self.lead_order])

    def __getitem__(self, exponent: int) -> int:
        return self.coefficient(exponent)

    def items(self) -> Iterator[Tuple[int, int]]:
        for i in np.nonzero(self.values)[0]:
            yield self.lead_order + int(i), int(self.values[i])

    def window_values(self, start: int, stop: int) -> np.ndarray:
        """Dense residues for exponents start <= n < stop."""
        if stop > self.trunc_order:
            raise WindowException(stop - 1, self.lead_order, self.trunc_order)
        out = np.zeros(max(stop - start, 0), dtype=np.int64)
        lo = max(start, self.lead_order)
        if lo < stop:
            out[lo - start:] = self.values[lo - self.lead_order: stop - self.lead_order]
        return out

    def _check_compatible(self, other: "ResidueSeries") -> None:
        if (self.p, self.T) != (other.p, other.T):
            raise InvalidInputException(
                "Residue series have different moduli",
                {"left": f"{self.p}^{self.T}", "right": f"{other.p}^{other.T}"},
            )

    def __add__(self, other: "ResidueSeries") -> "ResidueSeries":
        self._check_compatible(other)
        trunc = min(self.trunc_order, other.trunc_order)
        lead = min(self.lead_order, other.lead_order, trunc)
        values = self.window_values(lead, trunc) + other.window_values(lead, trunc)
        return ResidueSeries(self.p, self.T, lead, trunc, values)

    def __neg__(self) -> "ResidueSeries":
        return ResidueSeries(self.p, self.T, self.lead_order, self.trunc_order, -self.values)

    def __sub__(self, other: "ResidueSeries") -> "ResidueSeries":
        return self + (-other)

    def scale(self, factor: int) -> "ResidueSeries":
        factor = int(factor) % self.modulus
        if self.modulus * self.modulus < _INT64_SAFE:
            values = self.values * factor
        else:
            values = np.array([int(v) * factor for v in self.values], dtype=object)
            values = np.asarray(values % self.modulus, dtype=np.int64)
        return ResidueSeries(self.p, self.T, self.lead_order, self.trunc_order, values)

    def shift(self, k: int) -> "ResidueSeries":
        return ResidueSeries(
            self.p, self.T, self.lead_order + k, self.trunc_order + k, self.values
        )

    def truncate(self, window: int) -> "ResidueSeries":
        trunc = min(self.trunc_order, window)
        lead = min(self.lead_order, trunc)
        return ResidueSeries(self.p, self.T, lead, trunc, self.values[: trunc - lead])

    def dilate(self, d: int) -> "ResidueSeries":
        trunc = self.trunc_order * d
        lead = self.lead_order * d
        values = np.zeros(trunc - lead, dtype=np.int64)
        values[::d] = self.values
        return ResidueSeries(self.p, self.T, lead, trunc, values)

    def __mul__(self, other: "ResidueSeries") -> "ResidueSeries":
        self._check_compatible(other)
        lead = self.lead_order + other.lead_order
        trunc = min(
            self.trunc_order + other.lead_order, other.trunc_order + self.lead_order
        )
        size = max(trunc - lead, 0)
        values = _convolve_mod(self.values, other.values, self.modulus, size)
        return ResidueSeries(self.p, self.T, lead, trunc, values)

    def __pow__(self, exponent: int) -> "ResidueSeries":
        if exponent < 0:
            return self.invert() ** (-exponent)
        result = ResidueSeries.one(self.p, self.T, self.trunc_order - self.lead_order)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def invert(self) -> "ResidueSeries":
        """Inverse of a series whose leading coefficient is a unit mod p^T."""
        u = int(self.values[0]) if len(self.values) else 0
        if u % self.p == 0:
            raise NonInvertibleSeriesException(self.lead_order)
        M = self.modulus
        inv_u = pow(u, -1, M)
        size = len(self.values)
        a = self.values
        nz = np.nonzero(a[1:])[0] + 1
        use_numpy = M * M * max(len(nz), 1) < _INT64_SAFE
        b = np.zeros(size, dtype=np.int64)
        b[0] = inv_u
        for n in range(1, size):
            idx = nz[nz <= n]
            if len(idx) == 0:
                continue
            if use_numpy:
                acc = int(np.dot(a[idx], b[n - idx]))
            else:
                acc = sum(int(a[i]) * int(b[n - i]) for i in idx)
            b[n] = (-acc * inv_u) % M
        v = self.lead_order
        return ResidueSeries(self.p, self.T, -v, size - v, b)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ResidueSeries):
            return NotImplemented
        if (self.p, self.T, self.trunc_order) != (other.p, other.T, other.trunc_order):
            return False
        lead = min(self.lead_order, other.lead_order)
        return bool(
            np.array_equal(
                self.window_values(lead, self.trunc_order),
                other.window_values(lead, other.trunc_order),
            )
        )

    def __hash__(self):
        return hash((self.p, self.T, self.trunc_order, tuple(self.items())))

    def __repr__(self) -> str:
        return (
            f"ResidueSeries(mod {self.p}^{self.T}, "
            f"[{self.lead_order}, {self.trunc_order}), nonzero={np.count_nonzero(self.values)})"
        )

    def to_dict(self) -> dict:
        return {
            "lead": self.lead_order,
            "trunc": self.trunc_order,
            "modulus": f"{self.p}^{self.T}",
            "coeffs": [[n, str(r)] for n, r in self.items()],
        }


def reduce_mod(a: QSeries, p: int, T: int) -> ResidueSeries:
    """
    Reduce an exact series modulo p^T, mapping num/den to num * den^{-1}.

    Raises:
        NotPIntegralException: If a denominator in the window is divisible by p.
    """
    modulus = p**T
    size = a.trunc_order - a.lead_order
    values = np.zeros(max(size, 0), dtype=np.int64)
    for n, c in a.items():
        if c.denominator % p == 0:
            raise NotPIntegralException(n, p, c.denominator)
        values[n - a.lead_order] = (
            c.numerator * pow(c.denominator, -1, modulus)
        ) % modulus
    return ResidueSeries(p, T, a.lead_order, a.trunc_order, values)
