import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdola.codebook import load_codebook
from pdola.csi_engine import mi_for_fixed_selection, run_algorithm1
from pdola.exceptions import InvalidParameterError
from pdola.link_simulator import default_mcs_table
from pdola.mcs_mapping import load_base_table
from pdola.pdo_adaptation import (
    AdaptationConfig,
    MiCurve,
    adapted_mi,
    build_mi_curve,
    schedule,
    schedule_without_adaptation,
)

CB4 = load_codebook(4)
seeds = st.integers(0, 2**32 - 1)


def rand_h(seed, n_rbg=4, n=4, snr_db=10.0):
    rng = np.random.default_rng(seed)
    h = (rng.standard_normal((n_rbg, n, n)) + 1j * rng.standard_normal((n_rbg, n, n))) / np.sqrt(2)
    return h * 10 ** (snr_db / 20)


EXAMPLE = MiCurve(np.array([-10.0, 0.0, 10.0]), np.array([[2.0], [4.0], [5.0]]))


def test_reference_pdos():
    assert AdaptationConfig().reference_pdos_db == pytest.approx((-10.0, 0.0, 10.0))
    assert AdaptationConfig(alpha_scale=2.0).reference_pdos_db[2] == pytest.approx(6.0206, abs=1e-4)
    assert AdaptationConfig().q_max == 6
    with pytest.raises(InvalidParameterError):
        AdaptationConfig(alpha_scale=0.5)


def test_interpolation_examples():
    assert adapted_mi(EXAMPLE, 5.0, 12.0) == pytest.approx([4.5])
    assert adapted_mi(EXAMPLE, -20.0, 12.0) == pytest.approx([0.0])
    assert adapted_mi(EXAMPLE, -20.0) == pytest.approx([0.0])  # 2 - 2 = 0 even unclamped
    assert adapted_mi(EXAMPLE, -25.0) == pytest.approx([-1.0])
    assert adapted_mi(EXAMPLE, 30.0) == pytest.approx([7.0])
    assert adapted_mi(EXAMPLE, 30.0, 6.0) == pytest.approx([6.0])
    assert adapted_mi(EXAMPLE, -5.0) == pytest.approx([3.0])


def test_knots_are_exact():
    for q, row in zip(EXAMPLE.pdo_db, EXAMPLE.mi):
        assert np.array_equal(adapted_mi(EXAMPLE, q), row)


def test_curve_validation():
    with pytest.raises(InvalidParameterError):
        adapted_mi(MiCurve(np.array([0.0]), np.array([[1.0]])), 1.0)
    with pytest.raises(InvalidParameterError):
        MiCurve(np.array([1.0, 0.0]), np.ones((2, 3)))
    with pytest.raises(InvalidParameterError):
        MiCurve(np.array([0.0, 1.0]), np.ones((3, 3)))
    with pytest.raises(InvalidParameterError):
        adapted_mi(EXAMPLE, math.nan)


def test_alpha_one_gives_identical_points():
    report, curve = build_mi_curve(rand_h(1), np.eye(4), CB4, AdaptationConfig(alpha_scale=1.0))
    assert np.array_equal(curve.mi[0], curve.mi[1]) and np.array_equal(curve.mi[1], curve.mi[2])
    assert np.array_equal(adapted_mi(curve, 13.0), report.mi_per_rbg)


def test_zero_channel_gives_zero_curve():
    _, curve = build_mi_curve(np.zeros((3, 4, 4)), np.eye(4), CB4)
    assert np.all(curve.mi == 0)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(-10, 30))
def test_curve_monotone_and_middle_point_is_algorithm1(seed, snr_db):
    h = rand_h(seed, snr_db=snr_db)
    report, curve = build_mi_curve(h, np.eye(4), CB4)
    assert np.all(np.diff(curve.mi, axis=0) >= -1e-12)
    ref, _ = run_algorithm1(h, np.eye(4), CB4)
    assert np.array_equal(curve.mi[1], ref.mi_per_rbg)
    assert (report.wb_ri, report.wb_tpmi) == (ref.wb_ri, ref.wb_tpmi)
    high = mi_for_fixed_selection(h * math.sqrt(10), np.eye(4), ref.wb_tpmi, ref.wb_ri, CB4)
    assert np.array_equal(curve.mi[2], high)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(-10, 30))
def test_adapted_mi_monotone_in_pdo(seed, snr_db):
    report, curve = build_mi_curve(rand_h(seed, snr_db=snr_db), np.eye(4), CB4)
    sweep = np.stack([adapted_mi(curve, q, report.wb_ri * 6) for q in np.arange(-20.0, 20.01, 0.5)])
    assert np.all(np.diff(sweep, axis=0) >= -1e-12)
    assert np.all((sweep >= 0) & (sweep <= report.wb_ri * 6))


TABLE = load_base_table()


def test_zero_pdo_matches_no_adaptation_path():
    h = rand_h(3)
    on = schedule(h, np.eye(4), CB4, AdaptationConfig(), 0.0, TABLE)
    off = schedule_without_adaptation(h, np.eye(4), CB4, TABLE)
    assert np.array_equal(on.mcs, off.mcs)
    assert (on.wb_ri, on.wb_tpmi) == (off.wb_ri, off.wb_tpmi)


def test_large_negative_pdo_floors_mcs():
    decision = schedule(rand_h(4, snr_db=20), np.eye(4), CB4, AdaptationConfig(), -40.0, TABLE)
    assert np.all(decision.mcs == 0)


def test_plus_ten_db_uses_the_scaled_reference_point():
    h = rand_h(5, snr_db=5)
    decision = schedule(h, np.eye(4), CB4, AdaptationConfig(), 10.0, TABLE)
    report, _ = run_algorithm1(h, np.eye(4), CB4)
    high = mi_for_fixed_selection(h * math.sqrt(10), np.eye(4), report.wb_tpmi, report.wb_ri, CB4)
    expected = [TABLE.mi_to_mcs(min(m, report.wb_ri * 6) / report.wb_ri) for m in high]
    assert decision.mcs.tolist() == expected


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_selection_independent_of_actual_pdo(seed):
    h = rand_h(seed)
    picks = {
        (d.wb_ri, d.wb_tpmi)
        for d in (schedule(h, np.eye(4), CB4, AdaptationConfig(), q, TABLE) for q in (-20.0, -3.0, 0.0, 7.5, 20.0))
    }
    assert len(picks) == 1


def test_rbg_subset_and_clamp_toggle():
    h = rand_h(6, snr_db=30)
    full = schedule(h, np.eye(4), CB4, AdaptationConfig(), 20.0, TABLE)
    sub = schedule(h, np.eye(4), CB4, AdaptationConfig(), 20.0, TABLE, rbgs=[1, 3])
    assert np.array_equal(sub.mcs, full.mcs[[1, 3]])
    unclamped = schedule(h, np.eye(4), CB4, AdaptationConfig(clamp=False), 20.0, TABLE)
    assert np.all(full.mi_per_rbg <= full.wb_ri * 6)
    assert np.all(unclamped.mi_per_rbg >= full.mi_per_rbg)


def test_calibrated_table_pipeline_runs():
    decision = schedule(rand_h(7), np.eye(4), CB4, AdaptationConfig(), 3.0, default_mcs_table())
    assert decision.mcs.shape == (4,)
    assert np.all((decision.mcs >= 0) & (decision.mcs <= 28))
