"""Uplink transmit power and power density offset (PDO) between PUSCH and SRS.

All quantities stay in the dB domain.  The transmit power formula is the
abridged open-loop + closed-loop form shared by PUSCH and SRS::

    P = min(P_CMAX, P_O + 10 log10(2^mu * M_RB) + alpha * PL + delta_TF + g)

where ``g`` is the PUSCH adjustment state ``f`` or the SRS state ``h`` and
``delta_TF`` is zero for SRS.  The power density is the transmit power spread
over every occupied resource element.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

from .exceptions import InvalidParameterError, NoReferenceError

__all__ = [
    "Kind",
    "PowerParams",
    "DynamicPowerState",
    "TxRecord",
    "SchedulingContext",
    "tx_power",
    "power_density",
    "latest_records",
    "compute_pdo",
    "scheduling_pdo",
]

SUBCARRIERS_PER_RB = 12


class Kind(enum.Enum):
    PUSCH = "PUSCH"
    SRS = "SRS"


def _check_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class PowerParams:
    """Semi-static power control configuration of one channel (PUSCH or SRS)."""

    p_cmax_dbm: float
    p_o_dbm: float
    alpha_pc: float
    mu: int = 0

    def __post_init__(self):
        _check_finite(p_cmax_dbm=self.p_cmax_dbm, p_o_dbm=self.p_o_dbm, alpha_pc=self.alpha_pc)
        if not 0.0 <= self.alpha_pc <= 1.0:
            raise InvalidParameterError(f"alpha_pc must lie in [0, 1], got {self.alpha_pc}")
        if self.mu not in (0, 1, 2, 3, 4):
            raise InvalidParameterError(f"mu must be one of 0..4, got {self.mu}")


@dataclass(frozen=True)
class DynamicPowerState:
    """Per-occasion inputs: pathloss, transport format offset, closed-loop state."""

    pathloss_db: float
    delta_tf_db: float = 0.0
    closed_loop_db: float = 0.0

    def __post_init__(self):
        _check_finite(
            pathloss_db=self.pathloss_db,
            delta_tf_db=self.delta_tf_db,
            closed_loop_db=self.closed_loop_db,
        )
        if self.pathloss_db < 0:
            raise InvalidParameterError(f"pathloss_db must be >= 0, got {self.pathloss_db}")


@dataclass(frozen=True)
class TxRecord:
    """One transmitted PUSCH or SRS occasion."""

    slot: int
    kind: Kind
    tx_power_dbm: float
    n_rb: int
    n_re_per_rb: int

    def __post_init__(self):
        if self.slot < 0:
            raise InvalidParameterError(f"slot must be >= 0, got {self.slot}")
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind(self.kind))
        _check_finite(tx_power_dbm=self.tx_power_dbm)
        if self.n_rb < 1:
            raise InvalidParameterError(f"n_rb must be >= 1, got {self.n_rb}")
        if not 1 <= self.n_re_per_rb <= SUBCARRIERS_PER_RB:
            raise InvalidParameterError(
                f"n_re_per_rb must lie in [1, {SUBCARRIERS_PER_RB}], got {self.n_re_per_rb}"
            )


@dataclass(frozen=True)
class SchedulingContext:
    """Snapshot of what the gNB knows when it issues an uplink grant.

    ``grant_slot`` is the slot carrying the grant; the PUSCH itself goes out
    ``k2`` slots later.  Only records strictly before ``grant_slot`` count.
    """

    grant_slot: int
    k2: int = 0
    pusch_history: Sequence[TxRecord] = field(default_factory=tuple)
    srs_history: Sequence[TxRecord] = field(default_factory=tuple)

    def __post_init__(self):
        if self.k2 < 0:
            raise InvalidParameterError(f"k2 must be >= 0, got {self.k2}")
        for name in ("pusch_history", "srs_history"):
            hist = tuple(getattr(self, name))
            slots = [r.slot for r in hist]
            if slots != sorted(slots):
                raise InvalidParameterError(f"{name} must be sorted by slot")
            object.__setattr__(self, name, hist)

    @property
    def pusch_slot(self) -> int:
        return self.grant_slot + self.k2


def tx_power(params: PowerParams, state: DynamicPowerState, n_rb: int) -> float:
    """Transmit power in dBm for an allocation of ``n_rb`` resource blocks.

    For SRS pass a state with ``delta_tf_db=0`` and the SRS adjustment state
    as ``closed_loop_db``.
    """
    if n_rb < 1:
        raise InvalidParameterError(f"n_rb must be >= 1, got {n_rb}")
    _check_finite(
        p_cmax_dbm=params.p_cmax_dbm,
        p_o_dbm=params.p_o_dbm,
        alpha_pc=params.alpha_pc,
        pathloss_db=state.pathloss_db,
        delta_tf_db=state.delta_tf_db,
        closed_loop_db=state.closed_loop_db,
    )
    unconstrained = (
        params.p_o_dbm
        + 10.0 * math.log10(2**params.mu * n_rb)
        + params.alpha_pc * state.pathloss_db
        + state.delta_tf_db
        + state.closed_loop_db
    )
    return min(params.p_cmax_dbm, unconstrained)


def power_density(record: TxRecord) -> float:
    """Power per resource element in dBm."""
    return record.tx_power_dbm - 10.0 * math.log10(record.n_rb * record.n_re_per_rb)


def latest_records(ctx: SchedulingContext) -> tuple[TxRecord, TxRecord]:
    """Most recent PUSCH and SRS transmitted before the grant slot."""
    pusch = [r for r in ctx.pusch_history if r.slot < ctx.grant_slot]
    srs = [r for r in ctx.srs_history if r.slot < ctx.grant_slot]
    if not pusch or not srs:
        missing = "PUSCH" if not pusch else "SRS"
        raise NoReferenceError(f"no {missing} transmitted before slot {ctx.grant_slot}")
    return max(pusch, key=lambda r: r.slot), max(srs, key=lambda r: r.slot)


def compute_pdo(pusch: TxRecord, srs: TxRecord) -> float:
    """PUSCH minus SRS power density, in dB."""
    if pusch.kind is not Kind.PUSCH or srs.kind is not Kind.SRS:
        raise InvalidParameterError(
            f"expected (PUSCH, SRS) records, got ({pusch.kind.value}, {srs.kind.value})"
        )
    return power_density(pusch) - power_density(srs)


def scheduling_pdo(ctx: SchedulingContext) -> float:
    """PDO seen by the scheduler, falling back to 0 dB when nothing was sent yet."""
    try:
        pusch, srs = latest_records(ctx)
    except NoReferenceError:
        return 0.0
    return compute_pdo(pusch, srs)
