"""Wideband RI/TPMI selection and per-RBG MI from an estimated channel.

For every rank ``r`` and TPMI ``p`` the whitened, precoded channel
``H~ = W H P`` gives linear-MMSE per-layer SINRs, from which the Shannon
capacity and the modulation-constrained MI of every candidate modulation are
computed per RBG.  The best modulation per RBG is averaged over RBGs and the
(r, p) pair with the largest wideband MI wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .codebook import Codebook
from .exceptions import InvalidParameterError
from .modulation import MiTable, bits_per_symbol, default_table

__all__ = [
    "DEFAULT_MODULATIONS",
    "CsiReport",
    "MiDictionary",
    "effective_channel",
    "layer_sinr",
    "capacity",
    "modulation_mi",
    "run_algorithm1",
    "mi_for_fixed_selection",
]

# matches the 64QAM MCS table used for PUSCH
DEFAULT_MODULATIONS = ("QPSK", "16QAM", "64QAM")
TIE_TOL = 1e-12


@dataclass(frozen=True)
class CsiReport:
    wb_ri: int
    wb_tpmi: int
    mi_per_rbg: np.ndarray


@dataclass(frozen=True)
class MiDictionary:
    """MI(r, p, b, m) in bits/RE.

    ``values[i, p, b, k]`` belongs to rank ``ranks[i]`` and modulation
    ``modulations[k]``.  Ranks with fewer TPMIs than the widest rank are padded
    with NaN.  ``capacity[i, p, b]`` is the unconstrained Shannon rate.
    """

    values: np.ndarray
    capacity: np.ndarray
    ranks: tuple[int, ...]
    modulations: tuple[str, ...]

    def mi(self, rank: int, tpmi: int, rbg: int, modulation: str) -> float:
        return float(self.values[self.ranks.index(rank), tpmi, rbg, self.modulations.index(modulation)])

    def best_modulation_mi(self) -> np.ndarray:
        """max over modulations, shape (N_RI, N_TPMI, N_RBG)."""
        return self.values.max(axis=-1)

    def wideband_mi(self) -> np.ndarray:
        """Mean over RBGs of the per-RBG best MI, shape (N_RI, N_TPMI)."""
        return self.best_modulation_mi().mean(axis=-1)


def effective_channel(w, h_est, p) -> np.ndarray:
    """Whitened precoded channel ``W @ H @ P`` (broadcasts over leading axes)."""
    w, h_est, p = (np.asarray(a, dtype=complex) for a in (w, h_est, p))
    if w.shape[-1] != h_est.shape[-2] or w.shape[-2] != w.shape[-1] or h_est.shape[-1] != p.shape[-2]:
        raise InvalidParameterError(
            f"incompatible shapes W{w.shape} H{h_est.shape} P{p.shape}"
        )
    return w @ h_est @ p


def layer_sinr(h_tilde) -> np.ndarray:
    """Linear-MMSE SINR of each layer, ``1 / [(I + H~^H H~)^-1]_ll - 1``."""
    h_tilde = np.asarray(h_tilde, dtype=complex)
    if not np.all(np.isfinite(h_tilde)):
        raise InvalidParameterError("effective channel must be finite")
    r = h_tilde.shape[-1]
    gram = np.conj(np.swapaxes(h_tilde, -1, -2)) @ h_tilde
    inv = np.linalg.inv(np.eye(r) + gram)
    diag = np.real(np.diagonal(inv, axis1=-2, axis2=-1))
    return np.maximum(1.0 / diag - 1.0, 0.0)


def capacity(sinr) -> np.ndarray:
    """Sum over layers (last axis) of log2(1 + SINR)."""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise InvalidParameterError("SINR must be non-negative")
    return np.log2(1.0 + sinr).sum(axis=-1)


def modulation_mi(sinr, modulation: str, table: MiTable | None = None, penalty_db: float = 0.0) -> np.ndarray:
    """Sum over layers of the constrained MI of ``modulation``.

    ``penalty_db`` backs off every layer SINR before the lookup, e.g. to model
    implementation loss of dense constellations.
    """
    bits_per_symbol(modulation)
    table = table or default_table()
    sinr = np.asarray(sinr, dtype=float)
    if penalty_db:
        sinr = sinr * 10.0 ** (-penalty_db / 10.0)
    return table(sinr, modulation).sum(axis=-1)


def _usable_ranks(codebook: Codebook, n_rx: int) -> list[int]:
    ranks = [r for r in codebook.ranks if r <= min(codebook.n_tx, n_rx)]
    if not ranks:
        raise InvalidParameterError("codebook has no usable rank for this antenna configuration")
    return ranks


def _whitened(h_est_per_rbg, w_per_rbg) -> np.ndarray:
    h = np.asarray(h_est_per_rbg, dtype=complex)
    w = np.asarray(w_per_rbg, dtype=complex)
    if h.ndim != 3:
        raise InvalidParameterError(f"h_est_per_rbg must be (n_rbg, n_rx, n_tx), got {h.shape}")
    if h.shape[0] < 1:
        raise InvalidParameterError("need at least one RBG")
    if w.ndim == 2:
        w = np.broadcast_to(w, (h.shape[0],) + w.shape)
    return effective_channel(w, h, np.eye(h.shape[-1]))


def _mi_per_modulation(h_tilde, modulations, table, penalties) -> np.ndarray:
    sinr = layer_sinr(h_tilde)
    per_mod = [modulation_mi(sinr, m, table, penalties.get(m, 0.0)) for m in modulations]
    return np.stack(per_mod, axis=-1), capacity(sinr)


def run_algorithm1(
    h_est_per_rbg,
    w_per_rbg,
    codebook: Codebook,
    modulations: Sequence[str] = DEFAULT_MODULATIONS,
    table: MiTable | None = None,
    penalties_db: Mapping[str, float] | None = None,
) -> tuple[CsiReport, MiDictionary]:
    """Exhaustive (rank, TPMI) search on one channel snapshot.

    Ties in wideband MI resolve to the lowest rank, then the lowest TPMI.
    """
    if not codebook.entries:
        raise InvalidParameterError("codebook is empty")
    penalties = dict(penalties_db or {})
    hw = _whitened(h_est_per_rbg, w_per_rbg)
    n_rbg, n_rx, _ = hw.shape
    ranks = _usable_ranks(codebook, n_rx)
    n_tpmi = max(codebook.n_tpmi(r) for r in ranks)

    values = np.full((len(ranks), n_tpmi, n_rbg, len(modulations)), np.nan)
    caps = np.full((len(ranks), n_tpmi, n_rbg), np.nan)
    for i, r in enumerate(ranks):
        p = codebook.precoders(r)  # (N_p, n_tx, r)
        h_tilde = hw[:, None] @ p[None]  # (n_rbg, N_p, n_rx, r)
        mi, cap = _mi_per_modulation(h_tilde, modulations, table, penalties)
        values[i, : len(p)] = np.moveaxis(mi, 0, 1)
        caps[i, : len(p)] = cap.T

    mi_dict = MiDictionary(values, caps, tuple(ranks), tuple(modulations))
    wb = np.nan_to_num(mi_dict.wideband_mi(), nan=-np.inf)
    # values within rounding of the maximum count as ties; the first one in
    # (rank, tpmi) row-major order wins
    top = wb.max()
    i_best, p_best = np.unravel_index(np.argmax(wb >= top - TIE_TOL * max(1.0, abs(top))), wb.shape)
    report = CsiReport(
        wb_ri=ranks[i_best],
        wb_tpmi=int(p_best),
        mi_per_rbg=mi_dict.best_modulation_mi()[i_best, p_best].copy(),
    )
    return report, mi_dict


def mi_for_fixed_selection(
    h_est_per_rbg,
    w_per_rbg,
    p_fixed: int,
    r_fixed: int,
    codebook: Codebook,
    modulations: Sequence[str] = DEFAULT_MODULATIONS,
    table: MiTable | None = None,
    penalties_db: Mapping[str, float] | None = None,
) -> np.ndarray:
    """Per-RBG MI (best modulation) for a given rank and TPMI, without searching."""
    precoder = codebook[r_fixed, p_fixed]
    hw = _whitened(h_est_per_rbg, w_per_rbg)
    if r_fixed > hw.shape[1]:
        raise InvalidParameterError(f"rank {r_fixed} exceeds {hw.shape[1]} receive antennas")
    mi, _ = _mi_per_modulation(hw @ precoder, modulations, table, dict(penalties_db or {}))
    return mi.max(axis=-1)
