import pytest

from app.exceptions import InvalidInputException
from app.validators import (
    is_prime,
    parse_eta_spec,
    parse_int_list,
    require_fields,
    validate_even_weight,
    validate_modulus_exponent,
    validate_positive,
    validate_precision,
    validate_prime,
    validate_window,
)


def test_parse_eta_spec():
    assert parse_eta_spec("3:8") == [(3, 8)]
    assert parse_eta_spec("1:3,9:-3") == [(1, 3), (9, -3)]
    with pytest.raises(InvalidInputException):
        parse_eta_spec("")
    with pytest.raises(InvalidInputException) as exc:
        parse_eta_spec("3:8,9")
    assert exc.value.details["factor"] == "9"


def test_parse_int_list():
    assert parse_int_list("3, 6,9") == [3, 6, 9]
    with pytest.raises(InvalidInputException):
        parse_int_list("3,six", "h")


def test_numeric_validators():
    assert validate_positive("7", "c") == 7
    with pytest.raises(InvalidInputException):
        validate_positive(0, "c")
    with pytest.raises(InvalidInputException):
        validate_positive("x", "c")
    assert validate_window(5) == 5
    with pytest.raises(InvalidInputException):
        validate_window(3, minimum=4)
    assert validate_precision(53) == 53
    with pytest.raises(InvalidInputException):
        validate_precision(52)


def test_primes():
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]
    assert validate_prime(3) == 3
    with pytest.raises(InvalidInputException):
        validate_prime(9)


def test_weights():
    assert validate_even_weight(4) == 4
    with pytest.raises(InvalidInputException):
        validate_even_weight(3)
    with pytest.raises(InvalidInputException):
        validate_even_weight(0)


def test_modulus_exponent():
    assert validate_modulus_exponent(3, 19) == 19
    with pytest.raises(InvalidInputException):
        validate_modulus_exponent(3, 20)


def test_require_fields():
    assert require_fields({"level": 9, "an": []}, ["level", "an"])
    with pytest.raises(InvalidInputException) as exc:
        require_fields({"level": 9}, ["level", "weight"])
    assert exc.value.details["missing"] == ["weight"]
    with pytest.raises(InvalidInputException):
        require_fields([1, 2], ["level"])
