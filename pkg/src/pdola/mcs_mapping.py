"""MCS table, MI-to-MCS mapping and its calibration against a block error model.

MI thresholds are expressed per layer in bits/RE, i.e. on the same scale as
spectral efficiency.  A threshold is the received MI at which the error model
yields the target BLER for that MCS.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .exceptions import CalibrationError, InvalidParameterError

__all__ = [
    "McsEntry",
    "McsTable",
    "load_base_table",
    "ErrorModel",
    "LogisticErrorModel",
    "StepErrorModel",
    "CalibrationResult",
    "calibrate",
    "empirical_bler",
    "transport_block_bits",
]

MIN_THRESHOLD_STEP = 1e-3


@dataclass(frozen=True)
class McsEntry:
    index: int
    q_m: int
    code_rate: float
    spectral_efficiency: float = None
    mi_threshold: float = None

    def __post_init__(self):
        if self.q_m not in (2, 4, 6, 8):
            raise InvalidParameterError(f"unsupported modulation order {self.q_m}")
        if not 0.0 < self.code_rate < 1.0:
            raise InvalidParameterError(f"code rate must lie in (0, 1), got {self.code_rate}")
        if self.spectral_efficiency is None:
            object.__setattr__(self, "spectral_efficiency", self.q_m * self.code_rate)
        if self.mi_threshold is None:
            object.__setattr__(self, "mi_threshold", self.spectral_efficiency)


@dataclass(frozen=True)
class McsTable:
    entries: tuple[McsEntry, ...]

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e.index))
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_thresholds", np.array([e.mi_threshold for e in entries]))

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, index: int) -> McsEntry:
        return self.entries[index]

    @property
    def thresholds(self) -> np.ndarray:
        return self._thresholds.copy()

    @property
    def spectral_efficiency(self) -> np.ndarray:
        return np.array([e.spectral_efficiency for e in self.entries])

    def mi_to_mcs(self, mi: float) -> int:
        """Highest index whose threshold is <= ``mi``; index 0 when none is."""
        if not self.entries:
            raise InvalidParameterError("MCS table is empty")
        ok = np.flatnonzero(self._thresholds <= mi)
        return int(self.entries[ok[-1]].index) if ok.size else int(self.entries[0].index)

    def with_thresholds(self, thresholds: Sequence[float]) -> "McsTable":
        return McsTable(tuple(replace(e, mi_threshold=float(t)) for e, t in zip(self.entries, thresholds)))

    def to_text(self) -> str:
        """Calibrated table as plain text, one MCS per line."""
        lines = ["# index q_m code_rate spectral_efficiency mi_threshold"]
        for e in self.entries:
            lines.append(
                f"{e.index} {e.q_m} {e.code_rate:.10f} {e.spectral_efficiency:.10f} {e.mi_threshold:.10f}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "McsTable":
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            idx, q_m, rate, se, thr = line.split()
            entries.append(McsEntry(int(idx), int(q_m), float(rate), float(se), float(thr)))
        if not entries:
            raise InvalidParameterError("no MCS entries found")
        return cls(tuple(entries))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "McsTable":
        return cls.from_text(Path(path).read_text())


def load_base_table() -> McsTable:
    """The 29-entry 64QAM table with thresholds defaulting to spectral efficiency."""
    text = resources.files("pdola.data").joinpath("mcs_table_64qam.csv").read_text()
    rows = csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#"))
    return McsTable(
        tuple(McsEntry(int(r["index"]), int(r["q_m"]), int(r["rate_x1024"]) / 1024) for r in rows)
    )


def transport_block_bits(mcs: McsEntry, n_re: int) -> int:
    """Information bits carried by ``n_re`` layer-REs at the MCS spectral efficiency."""
    if n_re < 1:
        raise InvalidParameterError(f"n_re must be >= 1, got {n_re}")
    # rounding guards against 0.999999... from the float product
    return math.floor(round(mcs.spectral_efficiency * n_re, 9))


class ErrorModel(Protocol):
    def bler(self, mi, entry: McsEntry) -> np.ndarray: ...


@dataclass(frozen=True)
class LogisticErrorModel:
    """BLER = 1 / (1 + exp((mi - SE - gap) / slope)), mi per layer in bits/RE.

    ``gap`` is the MI margin a finite-length code needs over its rate for a
    50 % BLER; ``slope`` sets how fast the waterfall drops.
    """

    slope: float = 0.2
    gap: float = 0.1

    def __post_init__(self):
        if self.slope <= 0:
            raise InvalidParameterError("slope must be positive")

    def bler(self, mi, entry: McsEntry) -> np.ndarray:
        z = (np.asarray(mi, dtype=float) - entry.spectral_efficiency - self.gap) / self.slope
        return 0.5 * (1.0 - np.tanh(z / 2.0))

    def threshold_for(self, entry: McsEntry, target_bler: float) -> float:
        """Closed-form MI at which BLER equals ``target_bler``."""
        return entry.spectral_efficiency + self.gap + self.slope * math.log((1 - target_bler) / target_bler)


@dataclass(frozen=True)
class StepErrorModel:
    """Decoding fails exactly when MI is below the spectral efficiency."""

    def bler(self, mi, entry: McsEntry) -> np.ndarray:
        return (np.asarray(mi, dtype=float) < entry.spectral_efficiency).astype(float)


def empirical_bler(error_model, entry: McsEntry, mi: float, uniforms: np.ndarray) -> float:
    """Fraction of blocks failing at ``mi`` for the given uniform draws."""
    return float(np.mean(uniforms < error_model.bler(mi, entry)))


@dataclass(frozen=True)
class CalibrationResult:
    table: McsTable
    thresholds: np.ndarray
    achieved_bler: np.ndarray
    drops: int
    target_bler: float
    diagnostics: dict = field(default_factory=dict)


def _bisect(fn, lo, hi, target, max_iter):
    """Smallest t in [lo, hi] with fn(t) <= target for nonincreasing fn."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if fn(mid) <= target:
            hi = mid
        else:
            lo = mid
    return lo, hi


def calibrate(
    table: McsTable,
    error_model,
    target_bler: float = 0.1,
    tol: float = 0.01,
    drops: int = 4000,
    seed: int = 0,
    max_iter: int = 200,
) -> CalibrationResult:
    """Per-MCS MI thresholds giving ``target_bler`` under ``error_model``.

    Each MCS gets its own fixed set of uniform draws, which makes the simulated
    BLER a nonincreasing step function of the threshold, so bisection is exact.
    Thresholds are then made strictly increasing in MCS index.
    """
    if not 0.0 < target_bler < 1.0:
        raise InvalidParameterError(f"target_bler must lie in (0, 1), got {target_bler}")
    if drops < 1:
        raise InvalidParameterError("drops must be >= 1")
    if not len(table):
        raise InvalidParameterError("MCS table is empty")

    seeds = np.random.SeedSequence(seed).spawn(len(table))
    raw, failed = [], {}
    for entry, ss in zip(table.entries, seeds):
        u = np.random.default_rng(ss).random(drops)

        def sim(t, entry=entry, u=u):
            return empirical_bler(error_model, entry, t, u)

        lo, hi = -1.0, 2.0 * entry.q_m + 1.0
        if sim(hi) > target_bler or sim(lo) <= target_bler:
            failed[entry.index] = {"reason": "target not bracketed", "bler_lo": sim(lo), "bler_hi": sim(hi)}
            raw.append(float("nan"))
            continue
        lo, hi = _bisect(sim, lo, hi, target_bler, max_iter)
        b_hi, b_lo = sim(hi), sim(lo)
        jump = b_lo > target_bler + tol and b_hi < target_bler - tol
        if abs(b_hi - target_bler) > tol and not jump:
            failed[entry.index] = {"reason": "no threshold within tolerance", "threshold": hi, "bler": b_hi}
        raw.append(hi)
    if failed:
        raise CalibrationError(f"calibration failed for MCS {sorted(failed)}", failed)

    thresholds = np.array(raw)
    for k in range(1, thresholds.size):
        thresholds[k] = max(thresholds[k], thresholds[k - 1] + MIN_THRESHOLD_STEP)
    calibrated = table.with_thresholds(thresholds)

    achieved = []
    for entry, ss in zip(calibrated.entries, seeds):
        u = np.random.default_rng(ss).random(drops)
        achieved.append(empirical_bler(error_model, entry, entry.mi_threshold, u))
    return CalibrationResult(
        calibrated,
        thresholds,
        np.array(achieved),
        drops,
        target_bler,
        {"raw_thresholds": np.array(raw)},
    )
