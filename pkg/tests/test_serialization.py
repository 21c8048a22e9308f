import json
from fractions import Fraction

import numpy as np
from mpmath import mpf

from app.exceptions import AcceptanceCheckException
from app.modules.padic import PadicReport, Statement
from app.serialization import convert_to_serializable, encode_float


def test_encode_float_is_exact_and_readable():
    encoded = encode_float(-10.7466)
    assert float.fromhex(encoded["hex"]) == -10.7466
    assert encoded["decimal"] == "-10.7466"
    assert encode_float(float("nan")) == {"hex": "nan", "decimal": "nan"}
    assert encode_float(float("-inf"))["hex"] == "-inf"


def test_convert_nested_values():
    data = {
        1: np.int64(3),
        "ratio": Fraction(-33, 4),
        "whole": Fraction(6, 3),
        "flag": True,
        "values": np.array([1.5]),
        "precise": mpf("0.25"),
        "missing": None,
    }
    converted = convert_to_serializable(data)
    assert converted["1"] == 3
    assert converted["ratio"] == "-33/4"
    assert converted["whole"] == "2"
    assert converted["flag"] is True
    assert converted["values"][0]["decimal"] == "1.5"
    assert converted["precise"]["hex"] == (0.25).hex()
    assert converted["missing"] is None
    json.dumps(converted)


def test_convert_objects_with_to_dict():
    report = PadicReport(3, Statement.UNIT_CONGRUENCE, (0, 10))
    assert convert_to_serializable(report)["pass"] is True
    error = AcceptanceCheckException(["beta"])
    assert convert_to_serializable(error.to_dict()) == {
        "error": "AcceptanceCheckException",
        "message": "1 check(s) failed",
        "details": {"failed_checks": ["beta"]},
    }
