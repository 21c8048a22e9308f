import math

import pytest
from mpmath import mpf

from app.exceptions import (
    HypothesisViolationException,
    InvalidInputException,
    NonCoprimeException,
)
from app.modules.kloosterman import (
    FLOAT_TERM_ERROR,
    KloostermanQuery,
    check_multiplicativity,
    divisor_count,
    euler_phi,
    kloosterman_sum,
    kloosterman_sum_batch,
    kloosterman_sum_complex,
    mod_inverse,
    unit_residues,
    vanishing_scan,
    weil_bound_observation,
)


def K(m, n, c, precision=128):
    return kloosterman_sum(KloostermanQuery(m, n, c), precision)


def test_small_values():
    assert K(0, 0, 6).contains(2)
    assert K(1, 1, 3).contains(-1)
    assert K(1, 3, 9).contains(0)
    assert K(5, -7, 1).contains(1)


def test_error_bound_is_tiny():
    result = K(2, 5, 97)
    assert result.error_bound <= mpf(97) ** 2 * mpf(2) ** -128


def test_arithmetic_helpers():
    assert mod_inverse(4, 9) == 7
    assert mod_inverse(-2, 9) == 4
    assert unit_residues(1) == [0]
    assert unit_residues(9) == [1, 2, 4, 5, 7, 8]
    assert euler_phi(9) == 6
    assert divisor_count(12) == 6
    assert divisor_count(49) == 3


def test_non_coprime_inverse_raises():
    with pytest.raises(NonCoprimeException) as exc:
        mod_inverse(3, 9)
    assert exc.value.details == {"a": 3, "b": 9}


def test_query_rejects_non_positive_modulus():
    with pytest.raises(InvalidInputException):
        KloostermanQuery(1, 1, 0)


def test_sum_is_real():
    real, imag = kloosterman_sum_complex(KloostermanQuery(3, 7, 20))
    assert abs(imag) < 1e-30
    assert abs(real - K(3, 7, 20).value) < 1e-30


def test_symmetries(rng):
    for _ in range(50):
        c = rng.randint(2, 60)
        m, n = rng.randint(-30, 30), rng.randint(-30, 30)
        assert abs(K(m, n, c).value - K(n, m, c).value) < 1e-25
        assert abs(K(m, n, c).value - K(-m, -n, c).value) < 1e-25
        if math.gcd(m, c) == 1:
            assert abs(K(m, n, c).value - K(1, m * n, c).value) < 1e-25


def test_batch_matches_precise_path(rng):
    moduli = list(range(1, 61))
    n_values = [rng.randint(-20, 20) for _ in range(5)]
    m = rng.randint(-20, 20)
    batch = kloosterman_sum_batch(m, n_values, moduli)
    assert batch.shape == (len(moduli), len(n_values))
    for row, c in enumerate(moduli):
        for col, n in enumerate(n_values):
            precise = float(K(m, n, c, precision=64))
            assert abs(batch[row, col] - precise) <= FLOAT_TERM_ERROR * c + 1e-15


@pytest.mark.parametrize("c1, c2", [(4, 9), (5, 7), (8, 3)])
def test_twisted_multiplicativity(rng, c1, c2):
    for _ in range(3):
        m, n = rng.randint(-15, 15), rng.randint(-15, 15)
        assert check_multiplicativity(m, n, c1, c2)


def test_multiplicativity_needs_coprime_moduli():
    with pytest.raises(NonCoprimeException):
        check_multiplicativity(1, 1, 6, 9)


@pytest.mark.parametrize("p, m", [(3, 1), (3, -2), (2, 1), (5, 3)])
def test_vanishing_scan_passes(p, m):
    report = vanishing_scan(p, m, n_max=4, c_max=4)
    assert report["pass"]
    assert report["max_abs"] < 1e-20
    assert len(report["worst_case"]) == 3


def test_vanishing_scan_rejects_divisible_m():
    with pytest.raises(HypothesisViolationException) as exc:
        vanishing_scan(3, 6, n_max=2, c_max=2)
    assert exc.value.details == {"p": 3, "m": 6}


def test_vanishing_scan_rejects_composite_p():
    with pytest.raises(InvalidInputException):
        vanishing_scan(9, 1, n_max=2, c_max=2)


def test_weil_bound_holds():
    report = weil_bound_observation(1, 1, list(range(1, 60)))
    assert report["checked"] == 59
    assert report["exceeded"] == []
    assert 0 < report["max_ratio"] <= 1


def test_trivial_bound(rng):
    for c in range(1, 80):
        m, n = rng.randint(-50, 50), rng.randint(-50, 50)
        result = K(m, n, c)
        assert abs(result.value) <= euler_phi(c) + result.error_bound


@pytest.mark.parametrize("p, m, size", [(3, 1, 20), (2, 1, 10)])
def test_vanishing_scan_at_full_size(p, m, size):
    report = vanishing_scan(p, m, n_max=size, c_max=size)
    assert report["pass"]
    assert report["max_abs"] < 1e-20
