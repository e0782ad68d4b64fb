"""Drop-based link-level Monte-Carlo of uplink scheduling with and without PDO adaptation.

One drop is one fading channel trajectory.  The SRS is received at density
``SNR - PDO`` (noise is 0 dBm per RE), the scheduler picks rank, TPMI and a
per-RBG MCS from the SRS estimate, and the PUSCH is received ``srs_to_pusch_slots``
later at density ``SNR`` on the true channel.  Each PUSCH RBG carries its own
transport block whose success is drawn from the block error model evaluated at
the received per-layer MI.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from . import csi_engine
from .channel_model import (
    SUBCARRIERS_PER_RB,
    ChannelProfile,
    GridConfig,
    estimate_from_srs,
    preset,
    realize,
)
from .codebook import load_codebook
from .exceptions import InvalidParameterError
from .mcs_mapping import LogisticErrorModel, McsTable, calibrate, load_base_table, transport_block_bits
from .pdo_adaptation import AdaptationConfig, schedule, schedule_without_adaptation
from .power_control import Kind, SchedulingContext, TxRecord, scheduling_pdo

__all__ = [
    "Adaptation",
    "Scenario",
    "DropRecord",
    "SimResult",
    "default_mcs_table",
    "run_drop",
    "run_scenario",
    "throughput_gain",
    "write_results_csv",
    "read_results_csv",
    "CSV_FIELDS",
]

NOISE_DBM_PER_RE = 0.0
CSV_FIELDS = [
    "scenario_id",
    "adaptation",
    "pdo_db",
    "snr_db",
    "bler",
    "throughput_bits_per_slot",
    "mean_mcs",
    "drops",
    "seed",
]


class Adaptation(enum.Enum):
    ON = "ON"
    OFF = "OFF"


@dataclass(frozen=True)
class Scenario:
    """One curve: a channel, a grid, an imposed PDO and an SNR sweep.

    ``snr_grid_db`` is the PUSCH SNR per RE per receive antenna, i.e. it
    already includes the PDO.
    """

    profile: ChannelProfile
    grid: GridConfig
    pdo_db: float
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    adaptation: Adaptation = Adaptation.ON
    drops: int = 500
    seed: int = 1
    name: str = ""
    pusch_rbgs: tuple[int, ...] = (0, 1)
    alpha_scale: float = math.sqrt(10.0)
    clamp: bool = True
    data_symbols: int = 12
    k2: int = 3
    srs_to_pusch_slots: int = 4
    error_model: LogisticErrorModel = field(default_factory=LogisticErrorModel)

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "pusch_rbgs", tuple(int(b) for b in self.pusch_rbgs))
        object.__setattr__(self, "adaptation", Adaptation(self.adaptation))
        if not self.snr_grid_db:
            raise InvalidParameterError("snr_grid_db must not be empty")
        if self.drops < 1:
            raise InvalidParameterError("drops must be >= 1")
        if not math.isfinite(self.pdo_db):
            raise InvalidParameterError("pdo_db must be finite")
        if not self.pusch_rbgs or max(self.pusch_rbgs) >= self.grid.n_rbg or min(self.pusch_rbgs) < 0:
            raise InvalidParameterError("pusch_rbgs must index RBGs of the SRS grid")
        if self.srs_to_pusch_slots < self.k2 + 1:
            raise InvalidParameterError("the SRS must precede the grant: srs_to_pusch_slots >= k2 + 1")

    @property
    def scenario_id(self) -> str:
        return self.name or f"{self.profile.name}_{self.profile.n_tx}x{self.profile.n_rx}_pdo{self.pdo_db:+g}"

    def config_dict(self) -> dict:
        d = asdict(self)
        d["adaptation"] = self.adaptation.value
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.config_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_preset(cls, channel: str, n_ant: int, srs_comb: int, pdo_db: float, **kwargs) -> "Scenario":
        grid_kwargs = {k: kwargs.pop(k) for k in ("n_rbg", "rbs_per_rbg", "subcarrier_spacing_hz", "srs_symbols") if k in kwargs}
        return cls(
            preset(channel, n_ant, n_ant),
            GridConfig(srs_comb=srs_comb, **grid_kwargs),
            pdo_db,
            **kwargs,
        )


@dataclass(frozen=True)
class DropRecord:
    mcs: np.ndarray
    success: np.ndarray
    bits: np.ndarray
    wb_ri: int
    wb_tpmi: int
    scheduled_mi: np.ndarray
    received_mi: np.ndarray
    pdo_used_db: float


@dataclass(frozen=True)
class SimResult:
    scenario_id: str
    adaptation: Adaptation
    pdo_db: float
    snr_db: np.ndarray
    bler: np.ndarray
    throughput_bits_per_slot: np.ndarray
    mean_mcs: np.ndarray
    drops: int
    seed: int
    config_hash: str = ""

    def rows(self) -> list[dict]:
        return [
            {
                "scenario_id": self.scenario_id,
                "adaptation": self.adaptation.value,
                "pdo_db": self.pdo_db,
                "snr_db": float(s),
                "bler": float(b),
                "throughput_bits_per_slot": float(t),
                "mean_mcs": float(m),
                "drops": self.drops,
                "seed": self.seed,
            }
            for s, b, t, m in zip(self.snr_db, self.bler, self.throughput_bits_per_slot, self.mean_mcs)
        ]


@lru_cache(maxsize=8)
def default_mcs_table(error_model: LogisticErrorModel = LogisticErrorModel(), target_bler: float = 0.1) -> McsTable:
    """Base 64QAM table calibrated to ``target_bler`` under ``error_model``."""
    return calibrate(load_base_table(), error_model, target_bler, tol=0.01, drops=20000, seed=0).table


def _records(scenario: Scenario, srs_density: float, pusch_density: float, srs_slot: int, grant_slot: int):
    """Last SRS and PUSCH occasions at the requested densities."""
    grid = scenario.grid
    n_rb_srs = grid.n_rbg * grid.rbs_per_rbg
    n_re_srs = SUBCARRIERS_PER_RB // grid.srs_comb
    n_rb_pusch = len(scenario.pusch_rbgs) * grid.rbs_per_rbg
    srs = TxRecord(srs_slot, Kind.SRS, srs_density + 10 * math.log10(n_rb_srs * n_re_srs), n_rb_srs, n_re_srs)
    pusch = TxRecord(
        max(grant_slot - 1, 0),
        Kind.PUSCH,
        pusch_density + 10 * math.log10(n_rb_pusch * SUBCARRIERS_PER_RB),
        n_rb_pusch,
        SUBCARRIERS_PER_RB,
    )
    return SchedulingContext(grant_slot, scenario.k2, [pusch], [srs])


def _drop_seeds(seed: int, drop_index: int):
    return np.random.SeedSequence([seed, drop_index]).spawn(3)


def run_drop(
    scenario: Scenario,
    snr_db: float,
    drop_index: int,
    mcs_table: McsTable | None = None,
) -> DropRecord:
    """Simulate one scheduling decision and the PUSCH transmission it leads to."""
    mcs_table = mcs_table or default_mcs_table(scenario.error_model)
    grid, profile = scenario.grid, scenario.profile
    codebook = load_codebook(profile.n_tx)
    ch_seed, est_seed, dec_seed = _drop_seeds(scenario.seed, drop_index)

    srs_slot = 1
    pusch_slot = srs_slot + scenario.srs_to_pusch_slots
    grant_slot = pusch_slot - scenario.k2
    pusch_density = snr_db
    srs_density = snr_db - scenario.pdo_db

    true_srs = realize(profile, grid, srs_slot, ch_seed)
    true_pusch = realize(profile, grid, pusch_slot, ch_seed)
    est = estimate_from_srs(true_srs, grid, srs_density, NOISE_DBM_PER_RE, est_seed)
    # white noise: W = I / sigma, cheaper than a Cholesky per RBG
    w = np.eye(profile.n_rx) / math.sqrt(est.noise_cov[0, 0, 0].real)

    rbgs = scenario.pusch_rbgs
    if scenario.adaptation is Adaptation.ON:
        ctx = _records(scenario, srs_density, pusch_density, srs_slot, grant_slot)
        pdo_used = scheduling_pdo(ctx)
        cfg = AdaptationConfig(alpha_scale=scenario.alpha_scale, clamp=scenario.clamp)
        decision = schedule(est.per_rbg_h, w, codebook, cfg, pdo_used, mcs_table, rbgs=rbgs)
    else:
        pdo_used = 0.0
        decision = schedule_without_adaptation(est.per_rbg_h, w, codebook, mcs_table, rbgs=rbgs)

    w_pusch = np.eye(profile.n_rx) * 10.0 ** ((pusch_density - NOISE_DBM_PER_RE) / 20.0)
    rx_mi = csi_engine.mi_for_fixed_selection(
        true_pusch.per_rbg_h[list(rbgs)], w_pusch, decision.wb_tpmi, decision.wb_ri, codebook
    ) / decision.wb_ri

    u = np.random.default_rng(dec_seed).random(len(rbgs))
    entries = [mcs_table[int(k)] for k in decision.mcs]
    bler = np.array([scenario.error_model.bler(m, e) for m, e in zip(rx_mi, entries)])
    success = u >= bler
    n_re = grid.rbs_per_rbg * SUBCARRIERS_PER_RB * scenario.data_symbols * decision.wb_ri
    bits = np.array([transport_block_bits(e, n_re) if ok else 0 for e, ok in zip(entries, success)])
    return DropRecord(
        decision.mcs, success, bits, decision.wb_ri, decision.wb_tpmi,
        decision.mi_per_rbg / decision.wb_ri, rx_mi, pdo_used,
    )


def run_scenario(scenario: Scenario, mcs_table: McsTable | None = None) -> SimResult:
    """BLER, throughput and mean MCS at every SNR of the grid.

    Drop ``d`` uses the same channel and noise draws at every SNR point, so
    curves are smooth and reruns with the same seed are bit-identical.
    """
    mcs_table = mcs_table or default_mcs_table(scenario.error_model)
    n = len(scenario.snr_grid_db)
    bler, tput, mcs = np.zeros(n), np.zeros(n), np.zeros(n)
    for i, snr in enumerate(scenario.snr_grid_db):
        fails = blocks = 0
        bits = mcs_sum = 0.0
        for d in range(scenario.drops):
            rec = run_drop(scenario, snr, d, mcs_table)
            fails += int(np.count_nonzero(~rec.success))
            blocks += rec.success.size
            bits += float(rec.bits.sum())
            mcs_sum += float(rec.mcs.sum())
        bler[i] = fails / blocks
        tput[i] = bits / scenario.drops
        mcs[i] = mcs_sum / blocks
    return SimResult(
        scenario.scenario_id,
        scenario.adaptation,
        scenario.pdo_db,
        np.array(scenario.snr_grid_db),
        bler,
        tput,
        mcs,
        scenario.drops,
        scenario.seed,
        scenario.config_hash(),
    )


def throughput_gain(result_on: SimResult, result_off: SimResult) -> float:
    """Relative throughput gain of ON over OFF averaged over the SNR grid.

    Returns ``inf`` when OFF delivers nothing at any SNR.
    """
    if not np.array_equal(result_on.snr_db, result_off.snr_db):
        raise InvalidParameterError("results were produced on different SNR grids")
    t_on = float(np.mean(result_on.throughput_bits_per_slot))
    t_off = float(np.mean(result_off.throughput_bits_per_slot))
    if t_off == 0.0:
        return math.inf
    return (t_on - t_off) / t_off


def write_results_csv(path, results: Sequence[SimResult]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for res in results:
            for row in res.rows():
                writer.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})


def read_results_csv(path) -> list[SimResult]:
    """Group CSV rows back into one ``SimResult`` per (scenario, adaptation)."""
    groups: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            groups.setdefault((row["scenario_id"], row["adaptation"]), []).append(row)
    out = []
    for (sid, adapt), rows in groups.items():
        col = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
        out.append(
            SimResult(
                sid,
                Adaptation(adapt),
                float(rows[0]["pdo_db"]),
                col("snr_db"),
                col("bler"),
                col("throughput_bits_per_slot"),
                col("mean_mcs"),
                int(rows[0]["drops"]),
                int(rows[0]["seed"]),
            )
        )
    return out
