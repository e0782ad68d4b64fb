"""MCS adaptation to a power density offset between PUSCH and SRS.

The SRS channel estimate is scaled by ``alpha`` and ``1/alpha`` to emulate a
PUSCH sent ``+/-20 log10(alpha)`` dB above the SRS density.  Rank and TPMI come
from the unscaled estimate only; the scaled copies reuse them.  The resulting
per-RBG MI-vs-PDO curve is interpolated (or extrapolated) at the actual PDO
and mapped to an MCS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import csi_engine
from .codebook import Codebook
from .csi_engine import CsiReport
from .exceptions import InvalidParameterError
from .mcs_mapping import McsTable
from .modulation import MiTable, bits_per_symbol

__all__ = [
    "AdaptationConfig",
    "MiCurve",
    "ScheduleDecision",
    "build_mi_curve",
    "adapted_mi",
    "schedule",
    "schedule_without_adaptation",
]


@dataclass(frozen=True)
class AdaptationConfig:
    alpha_scale: float = math.sqrt(10.0)
    clamp: bool = True
    modulations: tuple[str, ...] = csi_engine.DEFAULT_MODULATIONS

    def __post_init__(self):
        if not self.alpha_scale >= 1.0:
            raise InvalidParameterError(f"alpha_scale must be >= 1, got {self.alpha_scale}")

    @property
    def reference_pdos_db(self) -> tuple[float, float, float]:
        step = 20.0 * math.log10(self.alpha_scale)
        return (-step, 0.0, step)

    @property
    def q_max(self) -> int:
        return max(bits_per_symbol(m) for m in self.modulations)


@dataclass(frozen=True)
class MiCurve:
    """Per-RBG MI sampled at increasing reference PDOs.

    ``pdo_db`` has shape (N,) and ``mi`` shape (N, N_RBG).
    """

    pdo_db: np.ndarray
    mi: np.ndarray

    def __post_init__(self):
        pdo = np.asarray(self.pdo_db, dtype=float)
        mi = np.atleast_2d(np.asarray(self.mi, dtype=float))
        if mi.shape[0] != pdo.size:
            raise InvalidParameterError("one MI row per reference PDO is required")
        if pdo.size > 1 and np.any(np.diff(pdo) < 0):
            raise InvalidParameterError("reference PDOs must be increasing")
        object.__setattr__(self, "pdo_db", pdo)
        object.__setattr__(self, "mi", mi)

    @property
    def points(self):
        return list(zip(self.pdo_db.tolist(), self.mi))


@dataclass(frozen=True)
class ScheduleDecision:
    mcs: np.ndarray
    wb_ri: int
    wb_tpmi: int
    mi_per_rbg: np.ndarray


def build_mi_curve(
    h_est_per_rbg,
    w_per_rbg,
    codebook: Codebook,
    cfg: AdaptationConfig = AdaptationConfig(),
    table: MiTable | None = None,
) -> tuple[CsiReport, MiCurve]:
    """Three-point MI curve at ``(-20log10 a, 0, +20log10 a)`` dB."""
    h = np.asarray(h_est_per_rbg, dtype=complex)
    report, _ = csi_engine.run_algorithm1(h, w_per_rbg, codebook, cfg.modulations, table)
    if cfg.alpha_scale == 1.0:
        rows = [report.mi_per_rbg] * 3
    else:
        low, high = (
            csi_engine.mi_for_fixed_selection(
                h * s, w_per_rbg, report.wb_tpmi, report.wb_ri, codebook, cfg.modulations, table
            )
            for s in (1.0 / cfg.alpha_scale, cfg.alpha_scale)
        )
        rows = [low, report.mi_per_rbg, high]
    pdos = cfg.reference_pdos_db
    if cfg.alpha_scale == 1.0:
        # all three knots collapse onto 0 dB
        pdos = (0.0, 0.0, 0.0)
    return report, MiCurve(np.array(pdos), np.stack(rows))


def adapted_mi(curve: MiCurve, actual_pdo_db: float, mi_cap: float | None = None) -> np.ndarray:
    """Per-RBG MI at ``actual_pdo_db`` by piecewise-linear inter/extrapolation.

    Knots are returned exactly.  Outside the reference span the nearest
    segment is extended.  With ``mi_cap`` set the result is clipped to
    ``[0, mi_cap]``.
    """
    x = curve.pdo_db
    if x.size < 2:
        raise InvalidParameterError("MI curve needs at least two points")
    if not math.isfinite(actual_pdo_db):
        raise InvalidParameterError(f"actual PDO must be finite, got {actual_pdo_db}")
    hit = np.flatnonzero(x == actual_pdo_db)
    if hit.size:
        out = curve.mi[hit[0]].copy()
    else:
        # segment index j such that x[j] <= pdo < x[j+1], clamped to the end segments
        j = int(np.clip(np.searchsorted(x, actual_pdo_db, side="right") - 1, 0, x.size - 2))
        while j > 0 and x[j + 1] == x[j]:
            j -= 1
        x0, x1 = x[j], x[j + 1]
        if x1 == x0:
            out = curve.mi[j].copy()
        else:
            frac = (actual_pdo_db - x0) / (x1 - x0)
            out = curve.mi[j] + frac * (curve.mi[j + 1] - curve.mi[j])
    if mi_cap is not None:
        out = np.clip(out, 0.0, mi_cap)
    return out


def _to_mcs(mi_per_rbg: np.ndarray, rank: int, mcs_table: McsTable) -> np.ndarray:
    # MCS spectral efficiencies are per layer
    return np.array([mcs_table.mi_to_mcs(m / rank) for m in mi_per_rbg], dtype=int)


def schedule(
    h_est_per_rbg,
    w_per_rbg,
    codebook: Codebook,
    cfg: AdaptationConfig,
    actual_pdo_db: float,
    mcs_table: McsTable,
    table: MiTable | None = None,
    rbgs: Sequence[int] | None = None,
) -> ScheduleDecision:
    """Adapted per-RBG MCS plus the wideband rank/TPMI.

    ``rbgs`` restricts the returned MCS to the RBGs of the PUSCH allocation;
    rank and TPMI are always chosen over every SRS RBG.
    """
    report, curve = build_mi_curve(h_est_per_rbg, w_per_rbg, codebook, cfg, table)
    cap = report.wb_ri * cfg.q_max if cfg.clamp else None
    mi = adapted_mi(curve, actual_pdo_db, cap)
    if rbgs is not None:
        mi = mi[list(rbgs)]
    return ScheduleDecision(_to_mcs(mi, report.wb_ri, mcs_table), report.wb_ri, report.wb_tpmi, mi)


def schedule_without_adaptation(
    h_est_per_rbg,
    w_per_rbg,
    codebook: Codebook,
    mcs_table: McsTable,
    modulations: Sequence[str] = csi_engine.DEFAULT_MODULATIONS,
    table: MiTable | None = None,
    rbgs: Sequence[int] | None = None,
) -> ScheduleDecision:
    """Baseline scheduler: MCS straight from the SRS-density MI, PDO ignored."""
    report, _ = csi_engine.run_algorithm1(h_est_per_rbg, w_per_rbg, codebook, modulations, table)
    mi = report.mi_per_rbg if rbgs is None else report.mi_per_rbg[list(rbgs)]
    return ScheduleDecision(_to_mcs(mi, report.wb_ri, mcs_table), report.wb_ri, report.wb_tpmi, mi)
