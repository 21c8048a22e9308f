from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

from app import reference
from app.exceptions import (
    AssemblyInvariantException,
    InvalidInputException,
    SingularAnchorException,
    WindowException,
)
from app.modules.modularforms import newform_coefficients
from app.modules.shiftedconv import (
    CLOSED_FORM,
    ORACLE,
    ShiftedValue,
    assemble,
    assemble_via_poincare,
    dhat,
    dhat_table,
    fit_gamma_delta,
    lvalues_frame,
    oracle_dhat,
    rational_part,
)

ANCHORS = [(h, reference.DHAT[h]) for h in reference.ANCHORS]


@pytest.fixture(scope="module")
def fitted(rational_small):
    return fit_gamma_delta(reference.BETA, ANCHORS, rational=rational_small)


@pytest.fixture(scope="module")
def assembly(rational_small, fitted):
    gamma, delta = fitted
    return assemble(reference.BETA, gamma, delta, rational_small[2].trunc_order, rational=rational_small)


def test_mock_form_leading_coefficients(lf_small):
    assert lf_small.lead_order == -1
    assert lf_small[-1] == 1
    assert lf_small[2] == Fraction(-1, 4)
    assert lf_small[5] == Fraction(49, 125)
    assert lf_small[8] == Fraction(-3, 32)
    assert lf_small[0] == 0


def test_rational_part_leading_coefficients(product_small):
    assert product_small[0] == 1
    assert product_small[3] == Fraction(-33, 4)
    assert product_small[6] == Fraction(2799, 125)
    assert product_small[9] == Fraction(-32919, 4000)
    assert all(n % 3 == 0 for n in product_small.support())


def test_rational_part_window():
    f, L_f, product = rational_part(20)
    assert product.trunc_order == 20
    assert f.trunc_order == 21
    assert L_f.trunc_order == 19


def test_fit_reproduces_published_constants(fitted):
    gamma, delta = fitted
    assert gamma == pytest.approx(reference.GAMMA, abs=5e-4)
    assert delta == pytest.approx(reference.DELTA, abs=5e-4)
    assert gamma + delta == pytest.approx(-1 / reference.BETA, abs=1e-6)


def test_assembled_values_match_published_table(assembly):
    for h, expected in reference.DHAT.items():
        assert dhat(assembly, h).value == pytest.approx(expected, abs=reference.DHAT_TOLERANCE)


def test_assembly_vanishes_off_multiples_of_three(assembly):
    off = [assembly.L[h] for h in range(assembly.window) if h % 3]
    assert np.max(np.abs(off)) == 0.0
    assert abs(assembly.L[0]) < 1e-6


def test_assemble_with_published_constants(rational_small):
    window = rational_small[2].trunc_order
    published = assemble(reference.BETA, reference.GAMMA, reference.DELTA, window, rational=rational_small)
    assert abs(published.L[0]) < 2e-4
    assert published.L[3] == pytest.approx(-10.7468, abs=1e-3)


def test_assemble_rejects_nonvanishing_constant_term(rational_small):
    with pytest.raises(AssemblyInvariantException) as exc:
        assemble(reference.BETA, 0.0, 0.0, rational_small[2].trunc_order, rational=rational_small)
    assert exc.value.details["h"] == 0
    with pytest.raises(InvalidInputException):
        assemble(0.0, 0.0, 0.0, 10)


def test_poincare_route_agrees(rational_small, fitted, assembly):
    gamma, delta = fitted
    other = assemble_via_poincare(
        reference.BETA, gamma, delta, assembly.window, rational=rational_small
    )
    assert np.allclose(other.L.to_numpy(), assembly.L.to_numpy(), rtol=0, atol=1e-9)


def test_anchors_without_constant_row_are_singular(rational_small):
    with pytest.raises(SingularAnchorException) as exc:
        fit_gamma_delta(reference.BETA, ANCHORS, use_constant_term=False, rational=rational_small)
    assert exc.value.details["anchors"] == [3, 6]


def test_anchor_at_nine_separates_the_basis(rational_small, fitted):
    anchors = [(3, reference.DHAT[3]), (9, reference.DHAT[9])]
    gamma, delta = fit_gamma_delta(
        reference.BETA, anchors, use_constant_term=False, rational=rational_small
    )
    assert gamma == pytest.approx(fitted[0], abs=5e-3)
    assert delta == pytest.approx(fitted[1], abs=5e-3)


def test_fit_argument_validation(rational_small):
    with pytest.raises(InvalidInputException):
        fit_gamma_delta(reference.BETA, [(3, 1.0)], rational=rational_small)
    with pytest.raises(WindowException):
        fit_gamma_delta(reference.BETA, [(3, 1.0), (30, 1.0)], window=20)


def test_dhat_bounds(assembly):
    with pytest.raises(WindowException):
        dhat(assembly, assembly.window)
    with pytest.raises(InvalidInputException):
        dhat(assembly, 0)
    assert dhat(assembly, 3).method == CLOSED_FORM


def test_dhat_table_columns(assembly):
    frame = dhat_table(assembly, [3, 6, 9])
    assert list(frame.columns) == ["h", "dhat_closed"]
    assert frame["h"].tolist() == [3, 6, 9]


def test_oracle_vanishes_for_shift_one():
    value = oracle_dhat(1, X=2000)
    assert value.value == 0.0
    assert value.band == 0.0
    assert value.method == ORACLE


def test_oracle_stages_and_shared_coefficients():
    coefficients = newform_coefficients(3000)
    shared = oracle_dhat(3, X=2500, averaging_depth=2, coefficients=coefficients)
    fresh = oracle_dhat(3, X=2500, averaging_depth=2)
    assert shared.value == fresh.value
    assert len(shared.stage_bands) == 3
    assert shared.band == shared.stage_bands[-1]


@pytest.mark.parametrize("h", [3, 6])
def test_oracle_stage_bands_contract(h):
    value = oracle_dhat(h, X=20_000, averaging_depth=3)
    bands = value.stage_bands
    assert len(bands) == 4
    for earlier, later in zip(bands, bands[1:]):
        assert later <= earlier + 1e-12
    assert bands[-1] < bands[0]


def test_oracle_band_warning(caplog):
    with caplog.at_level("WARNING"):
        oracle_dhat(3, X=500, averaging_depth=1, band_tolerance=0.0)
    assert "exceeds" in caplog.text


def test_lvalues_frame_layout(assembly, golden):
    frame = lvalues_frame(assembly, [3, 6])
    assert ",".join(frame.columns) == golden("lvalues_header.csv").strip()
    assert frame["dhat_oracle"].isna().all()

    with_oracle = lvalues_frame(assembly, [3], oracle_X=400, averaging_depth=1)
    assert not pd.isna(with_oracle.loc[0, "dhat_oracle"])
    assert with_oracle.loc[0, "oscillation_band"] >= 0


def test_shifted_value_validation():
    with pytest.raises(InvalidInputException):
        ShiftedValue(3, 1.0, "guess")
    with pytest.raises(InvalidInputException):
        ShiftedValue(0, 1.0, CLOSED_FORM)


def test_assembly_serialization(assembly):
    data = assembly.to_dict()
    assert set(data) == {"beta", "gamma", "delta", "f", "L_f", "L"}
    assert data["L"][3][0] == 3


@pytest.mark.slow
@pytest.mark.parametrize("h", [3, 6])
def test_oracle_tracks_closed_form(h):
    value = oracle_dhat(h, X=100_000)
    assert value.value == pytest.approx(reference.DHAT[h], abs=0.5)
    bands = value.stage_bands
    assert all(later <= earlier + 1e-12 for earlier, later in zip(bands, bands[1:]))
