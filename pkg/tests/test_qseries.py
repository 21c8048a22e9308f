from fractions import Fraction

import numpy as np
import pytest

from app.exceptions import (
    InvalidInputException,
    NonInvertibleSeriesException,
    NotPIntegralException,
    WindowException,
)
from app.modules.modularforms import eisenstein_E2
from app.modules.qseries import (
    QSeries,
    ResidueSeries,
    d_operator,
    eichler_integral,
    invert,
    mul,
    reduce_mod,
    serre_derivative,
)

WINDOW = 8


def random_series(rng, lead=0, trunc=WINDOW, denominators=(1, 2, 5, 7)):
    coeffs = {
        n: Fraction(rng.randint(-9, 9), rng.choice(denominators)) for n in range(lead, trunc)
    }
    return QSeries(coeffs, trunc, lead)


def random_unit_series(rng, lead=0, trunc=WINDOW):
    series = random_series(rng, lead, trunc)
    coeffs = dict(series.items())
    coeffs[lead] = Fraction(rng.choice([-3, -1, 1, 2, 5]), rng.choice([1, 2, 7]))
    return QSeries(coeffs, trunc, lead)


def test_ring_axioms_randomized(rng):
    for _ in range(1000):
        a, b, c = (random_series(rng) for _ in range(3))
        assert (a + b) + c == a + (b + c)
        assert a * b == b * a
        assert a * (b + c) == a * b + a * c
        assert a - a == QSeries.zero(WINDOW)


def test_inverse_randomized_laurent(rng):
    for _ in range(200):
        a = random_unit_series(rng, lead=rng.randint(-3, 2))
        product = mul(a, invert(a))
        assert product.lead_order == 0
        assert product == QSeries.one(product.trunc_order)


def test_bol_round_trip_randomized(rng):
    for _ in range(1000):
        k = rng.choice([2, 4, 6])
        a = random_series(rng, lead=rng.randint(-3, 0))
        expected = QSeries({n: c for n, c in a.items() if n != 0}, a.trunc_order, a.lead_order)
        assert d_operator(eichler_integral(a, k), k - 1) == expected


def test_product_window():
    a = QSeries({1: 1, 2: 3}, 10, 1)
    b = QSeries({-1: 1, 0: 2}, 6, -1)
    product = a * b
    assert product.lead_order == 0
    assert product.trunc_order == min(10 - 1, 6 + 1)
    assert product[0] == 1
    assert product[1] == 5
    assert product[2] == 6


def test_coefficient_outside_window_raises():
    a = QSeries.from_list([1, 2, 3])
    with pytest.raises(WindowException) as exc:
        a.coefficient(3)
    assert exc.value.details["exponent"] == 3


def test_invert_zero_leading_coefficient_raises():
    with pytest.raises(NonInvertibleSeriesException):
        invert(QSeries({1: 1}, 5, 0))


def test_power_matches_repeated_product(rng):
    a = random_series(rng)
    assert a**3 == a * a * a
    assert a**0 == QSeries.one(WINDOW)


def test_structural_helpers():
    a = QSeries.from_list([1, -1, 2])
    assert a.shift(2).lead_order == 2
    assert a.shift(2)[4] == 2
    dilated = a.dilate(3)
    assert dilated.trunc_order == 9
    assert dilated[3] == -1 and dilated[4] == 0 and dilated[6] == 2
    assert a.truncate(2).trunc_order == 2
    assert a.scale(Fraction(1, 2))[2] == 1
    assert a.support() == [0, 1, 2]
    with pytest.raises(InvalidInputException):
        a.dilate(0)


def test_float_coefficients_rejected():
    with pytest.raises(InvalidInputException):
        QSeries({0: 0.5}, 3)


def test_serialization_round_trip():
    a = QSeries({-1: 1, 2: Fraction(-1, 4), 5: Fraction(49, 125)}, 8, -1)
    data = a.to_dict()
    assert data["coeffs"][1] == [2, "-1/4"]
    assert QSeries.from_dict(data) == a


def test_serre_derivative_of_constant():
    e2 = eisenstein_E2(WINDOW)
    one = QSeries.one(WINDOW)
    assert serre_derivative(one, 0, e2) == QSeries.zero(WINDOW)
    assert serre_derivative(one, 12, e2) == -e2


def test_eichler_integral_requires_even_weight():
    with pytest.raises(InvalidInputException):
        eichler_integral(QSeries.one(3), 3)


def test_reduce_mod_matches_exact_product(rng):
    for _ in range(100):
        a = random_series(rng, denominators=(1, 2, 4, 5))
        b = random_series(rng, lead=-1, denominators=(1, 2, 7))
        assert reduce_mod(a * b, 3, 4) == reduce_mod(a, 3, 4) * reduce_mod(b, 3, 4)


def test_reduce_mod_rejects_non_integral():
    with pytest.raises(NotPIntegralException) as exc:
        reduce_mod(QSeries({0: 1, 2: Fraction(1, 3)}, 4), 3, 2)
    assert exc.value.details["exponent"] == 2


def test_residue_product_large_modulus(rng):
    # 2^30 forces the limb-split convolution
    values_a = [rng.randint(-(10**12), 10**12) for _ in range(40)]
    values_b = [rng.randint(-(10**12), 10**12) for _ in range(40)]
    a = QSeries.from_list(values_a)
    b = QSeries.from_list(values_b)
    left = ResidueSeries.from_integers(2, 30, 0, values_a) * ResidueSeries.from_integers(2, 30, 0, values_b)
    assert left == reduce_mod(a * b, 2, 30)


def test_residue_inverse(rng):
    values = [1] + [rng.randint(0, 80) for _ in range(30)]
    r = ResidueSeries.from_integers(3, 4, 0, values)
    assert r * r.invert() == ResidueSeries.one(3, 4, 31)
    with pytest.raises(NonInvertibleSeriesException):
        ResidueSeries.from_integers(3, 4, 0, [3, 1]).invert()


def test_residue_series_helpers():
    r = ResidueSeries.from_integers(3, 2, -1, [1, 0, -1, 4])
    assert r.coefficient(-1) == 1
    assert r.coefficient(1) == 8
    assert r.coefficient(-5) == 0
    assert r.scale(2).coefficient(2) == 8
    assert list(r.window_values(0, 3)) == [0, 8, 4]
    assert r.to_dict()["modulus"] == "3^2"
    assert np.all(r.dilate(2).window_values(-2, 6) == np.array([1, 0, 0, 0, 8, 0, 4, 0]))
    with pytest.raises(WindowException):
        r.coefficient(3)


@pytest.mark.parametrize("t", [1, 2, 3, 4, 5, 6])
def test_eichler_weights_agree_modulo_powers_of_three(t):
    units = QSeries.from_list([1 if n % 3 else 0 for n in range(1000)])
    residues = reduce_mod(eichler_integral(units, 4), 3, t)
    modulus = 3**t
    shifted = 2 * 3 ** (t - 1) + 1 - 4
    for n in range(1, 1000):
        if n % 3:
            assert residues.coefficient(n) == pow(n, shifted, modulus)
