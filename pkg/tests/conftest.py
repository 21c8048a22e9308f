"""Shared fixtures: small exact windows of f, m, L_f and f * L_f."""

import random
from pathlib import Path

import pytest

from app.modules.modularforms import newform_f, weakform_m9
from app.modules.shiftedconv import mock_modular_form, rational_part

GOLDEN_DIR = Path(__file__).parent / "golden"
SMALL_WINDOW = 120


@pytest.fixture(scope="session")
def f_small():
    return newform_f(SMALL_WINDOW)


@pytest.fixture(scope="session")
def m_small():
    return weakform_m9(SMALL_WINDOW)


@pytest.fixture(scope="session")
def lf_small():
    return mock_modular_form(SMALL_WINDOW)


@pytest.fixture(scope="session")
def rational_small():
    """(f, L_f, f * L_f) below q^SMALL_WINDOW."""
    return rational_part(SMALL_WINDOW)


@pytest.fixture(scope="session")
def product_small(rational_small):
    return rational_small[2]


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture
def golden():
    def read(name: str) -> str:
        return (GOLDEN_DIR / name).read_text()

    return read
