import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pdola.exceptions import CalibrationError, InvalidParameterError
from pdola.mcs_mapping import (
    MIN_THRESHOLD_STEP,
    LogisticErrorModel,
    McsEntry,
    McsTable,
    StepErrorModel,
    calibrate,
    empirical_bler,
    load_base_table,
    transport_block_bits,
)

BASE = load_base_table()
MODEL = LogisticErrorModel()


def test_base_table_contents():
    assert len(BASE) == 29
    assert [e.index for e in BASE.entries] == list(range(29))
    assert BASE[0].q_m == 2 and BASE[0].code_rate == pytest.approx(120 / 1024)
    assert BASE[28].q_m == 6 and BASE[28].spectral_efficiency == pytest.approx(5.5547, abs=1e-4)
    assert BASE[10].q_m == 4 and BASE[17].q_m == 6
    for e in BASE.entries:
        assert e.spectral_efficiency == pytest.approx(e.q_m * e.code_rate)


def test_spectral_efficiency_nondecreasing_except_at_modulation_switch():
    se = BASE.spectral_efficiency
    drops = [k + 1 for k in np.flatnonzero(np.diff(se) < 0)]
    # 64QAM rate 438/1024 sits just below 16QAM rate 658/1024 in the standard table
    assert drops == [17]
    assert se[16] - se[17] == pytest.approx(0.0039, abs=1e-4)


@pytest.fixture(scope="module")
def calibrated():
    return calibrate(BASE, MODEL, 0.1, 0.01, drops=20000, seed=0)


def test_mi_to_mcs_examples(calibrated):
    table = calibrated.table
    assert table.mi_to_mcs(0.0) == 0
    assert table.mi_to_mcs(-5.0) == 0
    assert table.mi_to_mcs(table.thresholds.max()) == 28
    assert table.mi_to_mcs(100.0) == 28
    assert table.mi_to_mcs(table[10].mi_threshold) == 10
    assert table.mi_to_mcs(np.nextafter(table[10].mi_threshold, -np.inf)) == 9


def test_self_consistency(calibrated):
    for e in calibrated.table.entries:
        assert calibrated.table.mi_to_mcs(e.mi_threshold) == e.index


@given(st.floats(-2, 10), st.floats(-2, 10))
def test_mi_to_mcs_nondecreasing(a, b):
    lo, hi = sorted((a, b))
    assert BASE.mi_to_mcs(lo) <= BASE.mi_to_mcs(hi)


def test_step_model_threshold_equals_se():
    result = calibrate(BASE, StepErrorModel(), 0.1, 0.01, drops=2000, seed=1)
    raw = result.diagnostics["raw_thresholds"]
    assert np.allclose(raw, BASE.spectral_efficiency, atol=1e-9)


def test_logistic_median_is_se_plus_gap():
    delta = 0.3
    model = LogisticErrorModel(slope=0.2, gap=delta)
    result = calibrate(BASE, model, 0.5, 0.01, drops=40000, seed=2)
    expected = BASE.spectral_efficiency + delta
    assert np.allclose(result.diagnostics["raw_thresholds"], expected, atol=0.02)


def test_calibrated_thresholds_strictly_increasing_and_close_to_closed_form(calibrated):
    t = calibrated.thresholds
    assert np.all(np.diff(t) >= MIN_THRESHOLD_STEP - 1e-12)
    closed = np.array([MODEL.threshold_for(e, 0.1) for e in BASE.entries])
    raw = calibrated.diagnostics["raw_thresholds"]
    assert np.allclose(raw, closed, atol=0.02)
    assert np.all(t >= BASE.spectral_efficiency)
    assert np.all(np.abs(calibrated.achieved_bler - 0.1) <= 0.01)
    # only MCS 17 is moved by the isotonic pass, since its SE is below MCS 16
    moved = np.flatnonzero(t != raw)
    assert moved.tolist() == [17]


def test_calibration_out_of_sample(calibrated):
    rng = np.random.default_rng(12345)
    for e in calibrated.table.entries:
        u = rng.random(20000)
        assert abs(empirical_bler(MODEL, e, e.mi_threshold, u) - 0.1) <= 0.015


def test_calibration_deterministic(calibrated):
    again = calibrate(BASE, MODEL, 0.1, 0.01, drops=20000, seed=0)
    assert again.table.to_text() == calibrated.table.to_text()


def test_calibration_errors():
    with pytest.raises(InvalidParameterError):
        calibrate(BASE, MODEL, 1.5)
    with pytest.raises(InvalidParameterError):
        calibrate(BASE, MODEL, 0.1, drops=0)

    class Hopeless:
        def bler(self, mi, entry):
            return np.ones_like(np.asarray(mi, dtype=float))

    with pytest.raises(CalibrationError) as err:
        calibrate(BASE, Hopeless(), 0.1, drops=100)
    assert err.value.diagnostics[0]["reason"] == "target not bracketed"


def test_logistic_model_shape():
    e = BASE[5]
    assert MODEL.bler(e.spectral_efficiency + MODEL.gap, e) == pytest.approx(0.5)
    assert MODEL.bler(MODEL.threshold_for(e, 0.1), e) == pytest.approx(0.1)
    assert MODEL.bler(-1e6, e) == pytest.approx(1.0) and MODEL.bler(1e6, e) == pytest.approx(0.0)
    with pytest.raises(InvalidParameterError):
        LogisticErrorModel(slope=0)


def test_transport_block_bits_examples():
    one = McsEntry(0, 2, 0.5)
    assert transport_block_bits(one, 96) == 96
    assert transport_block_bits(McsEntry(0, 2, 0.5, spectral_efficiency=0.0), 96) == 0
    assert transport_block_bits(McsEntry(28, 6, 948 / 1024, spectral_efficiency=5.5547), 96) == 533
    assert transport_block_bits(BASE[28], 96) == math.floor(BASE[28].spectral_efficiency * 96)
    with pytest.raises(InvalidParameterError):
        transport_block_bits(one, 0)


def test_text_round_trip(calibrated, tmp_path):
    path = tmp_path / "table.txt"
    calibrated.table.save(path)
    loaded = McsTable.load(path)
    assert np.allclose(loaded.thresholds, calibrated.table.thresholds, atol=1e-10)
    assert loaded.to_text() == calibrated.table.to_text()
    assert path.read_text().count("\n") == 30


def test_entry_and_table_validation():
    with pytest.raises(InvalidParameterError):
        McsEntry(0, 3, 0.5)
    with pytest.raises(InvalidParameterError):
        McsEntry(0, 2, 1.0)
    with pytest.raises(InvalidParameterError):
        McsTable(()).mi_to_mcs(1.0)
    with pytest.raises(InvalidParameterError):
        McsTable.from_text("# nothing\n")
