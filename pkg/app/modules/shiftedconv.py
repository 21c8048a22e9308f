"""
Shifted Convolution Module

Assembles the generating function L(f, f; tau) = sum_h Dhat(f, f, h; 3) q^h for
f = eta(3 tau)^8 from the exact rational part f * L_f / beta and the
quasimodular correction gamma * A + delta * B, fits gamma and delta, and
provides a direct-summation oracle for single values.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.exceptions import (
    AssemblyInvariantException,
    InvalidInputException,
    SingularAnchorException,
    WindowException,
)
from app.modules.modularforms import (
    NEWFORM_WEIGHT,
    newform_coefficients,
    newform_f,
    sigma_series_A,
    sigma_series_B,
    weakform_m9,
)
from app.modules.qseries import QSeries, eichler_integral, mul
from app.validators import validate_positive, validate_window

logger = logging.getLogger(__name__)

CLOSED_FORM = "closed_form"
ORACLE = "oracle"
DEFAULT_TOLERANCE = 1e-3


@dataclass
class GenFunctionAssembly:
    """L(f, f; tau) = (f * L_f) / beta + gamma * A + delta * B on a window."""

    beta: float
    gamma: float
    delta: float
    f: QSeries
    L_f: QSeries
    product: QSeries
    Q_f: pd.Series
    L: pd.Series

    @property
    def window(self) -> int:
        return len(self.L)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "gamma": self.gamma,
            "delta": self.delta,
            "f": self.f.to_dict(),
            "L_f": self.L_f.to_dict(),
            "L": [[int(h), float(v)] for h, v in self.L.items()],
        }


@dataclass(frozen=True)
class ShiftedValue:
    h: int
    value: float
    method: str
    band: Optional[float] = None
    stage_bands: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        validate_positive(self.h, "h")
        if self.method not in (CLOSED_FORM, ORACLE):
            raise InvalidInputException(f"Unknown method: {self.method}", {"method": self.method})


def mock_modular_form(window: int) -> QSeries:
    """L_f = -E_m, the negated Eichler integral of m, below q^window."""
    return -eichler_integral(weakform_m9(window), NEWFORM_WEIGHT)


def rational_part(window: int) -> Tuple[QSeries, QSeries, QSeries]:
    """
    Exact f, L_f and f * L_f, the product valid below q^window.

    f * L_f starts 1 - 33/4 q^3 + 2799/125 q^6 - 32919/4000 q^9 + ...
    """
    window = validate_window(window)
    f = newform_f(window + 1)
    L_f = mock_modular_form(max(window - 1, 1))
    product = mul(f, L_f).truncate(window)
    logger.info(f"Exact rational part f * L_f computed below q^{window}")
    return f, L_f, product


def _coefficient_array(series: QSeries, window: int) -> np.ndarray:
    return np.array([float(series.coefficient(h)) for h in range(window)], dtype=np.float64)


def _quasimodular_part(gamma: float, delta: float, window: int) -> pd.Series:
    A = _coefficient_array(sigma_series_A(window), window)
    B = _coefficient_array(sigma_series_B(window), window)
    return pd.Series(gamma * A + delta * B, index=pd.RangeIndex(window, name="h"))


def _validate_assembly(L: pd.Series, tol: float) -> None:
    """Constant term and every coefficient at h not divisible by 3 must vanish."""
    for h, value in L.items():
        if h % 3 == 0 and h != 0:
            continue
        if abs(value) > tol:
            raise AssemblyInvariantException(int(h), float(value), tol)


def assemble(
    beta: float,
    gamma: float,
    delta: float,
    window: int,
    tol: float = DEFAULT_TOLERANCE,
    rational: Optional[Tuple[QSeries, QSeries, QSeries]] = None,
) -> GenFunctionAssembly:
    """
    Build L(f, f; tau) below q^window.

    Args:
        beta: Petersson constant (nonzero)
        gamma: Coefficient of the E2-type series A
        delta: Coefficient of the series B
        window: Exclusive bound on exponents
        tol: Allowed size of coefficients that must vanish
        rational: Precomputed rational_part(window), if available

    Raises:
        AssemblyInvariantException: A coefficient at h = 0 or 3 not dividing h exceeds tol
    """
    if beta == 0:
        raise InvalidInputException("beta must be nonzero", {"beta": beta})
    window = validate_window(window)
    f, L_f, product = rational or rational_part(window)

    Q_f = _quasimodular_part(gamma, delta, window)
    L = pd.Series(_coefficient_array(product, window) / beta, index=Q_f.index) + Q_f
    _validate_assembly(L, tol)
    logger.info(f"Assembled L(f,f) below q^{window} with beta={beta:.6f}, gamma={gamma:.6f}, delta={delta:.6f}")
    return GenFunctionAssembly(beta, gamma, delta, f, L_f, product, Q_f, L)


def assemble_via_poincare(
    beta: float,
    gamma: float,
    delta: float,
    window: int,
    m: int = 1,
    tol: float = DEFAULT_TOLERANCE,
    rational: Optional[Tuple[QSeries, QSeries, QSeries]] = None,
) -> GenFunctionAssembly:
    """
    Same generating function through L(P, P) = Q+ * P / (m^{k-1} (k-1)!) + F
    with the unnormalized Q+ = Gamma(k) L_f and P = beta f, scaled back by 1/beta^2.
    """
    if beta == 0:
        raise InvalidInputException("beta must be nonzero", {"beta": beta})
    window = validate_window(window)
    k = NEWFORM_WEIGHT
    f, L_f, _ = rational or rational_part(window)

    q_plus = L_f.scale(math.factorial(k - 1))
    corollary = mul(q_plus, f).truncate(window).scale(Fraction(1, m ** (k - 1) * math.factorial(k - 1)))
    poincare_part = _coefficient_array(corollary, window) * beta / beta**2

    Q_f = _quasimodular_part(gamma, delta, window)
    L = pd.Series(poincare_part, index=Q_f.index) + Q_f
    _validate_assembly(L, tol)
    return GenFunctionAssembly(beta, gamma, delta, f, L_f, corollary, Q_f, L)


def fit_gamma_delta(
    beta: float,
    anchors: Sequence[Tuple[int, float]],
    window: Optional[int] = None,
    use_constant_term: bool = True,
    rational: Optional[Tuple[QSeries, QSeries, QSeries]] = None,
) -> Tuple[float, float]:
    """
    Solve gamma * A_h + delta * B_h = Dhat(h) - [q^h](f L_f) / beta on the anchors.

    For 3 not dividing h/3, A_h = -8 B_h, so two such anchors give proportional
    rows. With use_constant_term the row gamma + delta = -1/beta (vanishing
    constant term of L) is appended and the system solved by least squares.

    Raises:
        SingularAnchorException: The rows do not determine gamma and delta
    """
    anchors = [(validate_positive(h, "h"), float(value)) for h, value in anchors]
    if len(anchors) < 2:
        raise InvalidInputException("Two anchors are required", {"anchors": anchors})
    hs = [h for h, _ in anchors]
    window = window or max(hs) + 1
    if max(hs) >= window:
        raise WindowException(max(hs), 0, window)

    _, _, product = rational or rational_part(window)
    A = sigma_series_A(window)
    B = sigma_series_B(window)

    rows, rhs = [], []
    for h, value in anchors:
        rows.append([float(A.coefficient(h)), float(B.coefficient(h))])
        rhs.append(value - float(product.coefficient(h)) / beta)
    if use_constant_term:
        rows.append([1.0, 1.0])
        rhs.append(-1.0 / beta)

    matrix = np.array(rows)
    target = np.array(rhs)
    if np.linalg.matrix_rank(matrix, tol=1e-9 * np.abs(matrix).max()) < 2:
        raise SingularAnchorException(hs)

    solution, _, _, _ = np.linalg.lstsq(matrix, target, rcond=None)
    gamma, delta = float(solution[0]), float(solution[1])
    residual = matrix @ solution - target
    logger.info(
        f"Fitted gamma={gamma:.6f}, delta={delta:.6f} from anchors {hs}; "
        f"gamma + delta + 1/beta = {gamma + delta + 1 / beta:.2e}, "
        f"max residual {np.abs(residual).max():.2e}"
    )
    return gamma, delta


def dhat(assembly: GenFunctionAssembly, h: int) -> ShiftedValue:
    """
    Dhat(f, f, h; 3) as the q^h coefficient of L.

    Raises:
        WindowException: If h is outside the assembled window
    """
    h = validate_positive(h, "h")
    if h >= assembly.window:
        raise WindowException(h, 0, assembly.window)
    return ShiftedValue(h, float(assembly.L[h]), CLOSED_FORM)


def dhat_table(assembly: GenFunctionAssembly, hs: Iterable[int]) -> pd.DataFrame:
    """Closed-form values for several h as a frame with columns h, dhat_closed."""
    values = [dhat(assembly, h) for h in hs]
    return pd.DataFrame({"h": [v.h for v in values], "dhat_closed": [v.value for v in values]})


def _oscillation(block: np.ndarray) -> float:
    return float(block.max() - block.min()) if len(block) else 0.0


def oracle_dhat(
    h: int,
    X: int = 100_000,
    averaging_depth: int = 3,
    coefficients: Optional[np.ndarray] = None,
    band_tolerance: Optional[float] = None,
) -> ShiftedValue:
    """
    Heuristic Dhat(f, f, h; 3) from the telescoped series

        sum_{n >= 1} a(n) a(n + h) (n^-3 - (n + h)^-3)

    whose partial sums are kept on the trailing block X//2 < n <= X and smoothed
    by averaging_depth rounds of running means started at the head of the block.
    A running mean stays inside the range of what it averages, so the spread of
    each stage over the block is at most that of the stage before. The reported
    band is the spread of the final stage. The series converges only
    conditionally, so this is a cross-check and never ground truth.
    """
    h = validate_positive(h, "h")
    X = validate_positive(X, "X")
    averaging_depth = validate_positive(averaging_depth, "averaging_depth")
    if coefficients is None or len(coefficients) < X + h + 1:
        coefficients = newform_coefficients(X + h + 1)

    a = coefficients.astype(np.float64)
    n = np.arange(1, X + 1, dtype=np.float64)
    weights = n**-3 - (n + h) ** -3
    terms = a[1 : X + 1] * a[1 + h : X + h + 1] * weights

    stage = np.cumsum(terms)[X // 2 :]
    bands = [_oscillation(stage)]
    counts = np.arange(1, len(stage) + 1, dtype=np.float64)
    for _ in range(averaging_depth):
        stage = np.cumsum(stage) / counts
        bands.append(_oscillation(stage))

    value = float(stage[-1])
    band = bands[-1]
    if band_tolerance is not None and band > band_tolerance:
        logger.warning(f"Oracle band {band:.3e} at h={h} exceeds {band_tolerance:.3e}")
    logger.info(f"Oracle Dhat(h={h}) over X={X}, depth {averaging_depth}: {value:.6f} +/- {band:.2e}")
    return ShiftedValue(h, value, ORACLE, band, tuple(bands))


def lvalues_frame(
    assembly: GenFunctionAssembly,
    hs: Iterable[int],
    oracle_X: Optional[int] = None,
    averaging_depth: int = 3,
) -> pd.DataFrame:
    """Columns h, dhat_closed, dhat_oracle, oscillation_band (oracle columns NaN when skipped)."""
    frame = dhat_table(assembly, hs)
    oracle_values: List[float] = []
    bands: List[float] = []
    coefficients = None
    if oracle_X:
        coefficients = newform_coefficients(oracle_X + int(frame["h"].max()) + 1)
    for h in frame["h"]:
        if oracle_X:
            value = oracle_dhat(int(h), oracle_X, averaging_depth, coefficients)
            oracle_values.append(value.value)
            bands.append(value.band)
        else:
            oracle_values.append(float("nan"))
            bands.append(float("nan"))
    frame["dhat_oracle"] = oracle_values
    frame["oscillation_band"] = bands
    return frame
