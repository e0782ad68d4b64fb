"""Modulation-constrained mutual information of QAM over AWGN.

Square M-QAM is the product of two independent sqrt(M)-PAM signals on the
I and Q rails, so its constrained capacity is twice the PAM one at the same
per-rail SNR.  The PAM expectation over Gaussian noise is a 1-D integral
evaluated with Gauss-Hermite quadrature.

Lookup tables are sampled on a 0.1 dB grid over [-20, 40] dB and shipped in
``data/mi_tables.npz``; ``MiTable`` interpolates them linearly in dB.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.special import logsumexp

from .exceptions import InvalidParameterError

__all__ = [
    "MODULATIONS",
    "bits_per_symbol",
    "qam_constellation",
    "qam_mi",
    "generate_tables",
    "MiTable",
    "default_table",
]

MODULATIONS = {"QPSK": 2, "16QAM": 4, "64QAM": 6, "256QAM": 8}

TABLE_GRID_DB = np.round(np.arange(-200, 401) * 0.1, 1)
GH_NODES = 120


def bits_per_symbol(modulation: str) -> int:
    try:
        return MODULATIONS[modulation]
    except KeyError:
        raise InvalidParameterError(
            f"unknown modulation {modulation!r}; expected one of {list(MODULATIONS)}"
        ) from None


def _pam_levels(q_m: int) -> np.ndarray:
    """Unit-energy sqrt(2^q_m)-PAM levels for one rail of a unit-energy QAM."""
    n = 2 ** (q_m // 2)
    levels = np.arange(-(n - 1), n, 2, dtype=float)
    return levels / np.sqrt(np.mean(levels**2))


def qam_constellation(modulation: str) -> np.ndarray:
    """Square QAM points with unit average energy."""
    levels = _pam_levels(bits_per_symbol(modulation)) / np.sqrt(2.0)
    return (levels[:, None] + 1j * levels[None, :]).ravel()


def _pam_mi(levels: np.ndarray, snr: np.ndarray, nodes: int) -> np.ndarray:
    # rail amplitude a with E[a^2] = snr, real noise N(0, 1)
    t, w = np.polynomial.hermite.hermgauss(nodes)
    z = np.sqrt(2.0) * t
    a = np.sqrt(snr)[:, None] * levels[None, :]
    d = a[:, :, None] - a[:, None, :]  # (snr, i, j)
    expo = -(d[..., None] ** 2 + 2.0 * d[..., None] * z) / 2.0  # (snr, i, j, node)
    lse = logsumexp(expo, axis=2) / np.log(2.0)  # (snr, i, node)
    expect = (lse * w).sum(-1) / np.sqrt(np.pi)
    return np.log2(levels.size) - expect.mean(-1)


def qam_mi(modulation: str, sinr_db, nodes: int = GH_NODES) -> np.ndarray:
    """Constrained capacity in bits per complex RE at the given SINR (dB)."""
    q_m = bits_per_symbol(modulation)
    snr = 10.0 ** (np.atleast_1d(np.asarray(sinr_db, dtype=float)) / 10.0)
    levels = _pam_levels(q_m)
    out = np.concatenate([_pam_mi(levels, chunk, nodes) for chunk in np.array_split(snr, max(1, snr.size // 64))])
    return np.clip(2.0 * out, 0.0, float(q_m))


def generate_tables(grid_db=TABLE_GRID_DB, nodes: int = GH_NODES) -> dict[str, np.ndarray]:
    """Build the MI lookup tables, one array per modulation on ``grid_db``."""
    tables = {"grid_db": np.asarray(grid_db, dtype=float)}
    for name in MODULATIONS:
        mi = qam_mi(name, grid_db, nodes)
        # quadrature noise near saturation can break monotonicity at the 1e-12 level
        tables[name] = np.maximum.accumulate(mi)
    return tables


class MiTable:
    """Piecewise-linear-in-dB lookup of per-modulation MI.

    Below the table range MI is taken proportional to the linear SINR (the
    low-SNR slope of every constellation); above it MI saturates at the last
    sample, which equals ``q_m`` to within quadrature error.
    """

    def __init__(self, tables: dict[str, np.ndarray]):
        self.grid_db = np.asarray(tables["grid_db"], dtype=float)
        self.values = {m: np.asarray(tables[m], dtype=float) for m in MODULATIONS if m in tables}
        self._lin0 = 10.0 ** (self.grid_db[0] / 10.0)

    @property
    def modulations(self) -> list[str]:
        return list(self.values)

    def __call__(self, sinr, modulation: str) -> np.ndarray:
        """MI in bits/RE for linear SINR values of any shape."""
        bits_per_symbol(modulation)
        if modulation not in self.values:
            raise InvalidParameterError(f"table has no entry for {modulation}")
        sinr = np.asarray(sinr, dtype=float)
        if np.any(sinr < 0) or not np.all(np.isfinite(sinr)):
            raise InvalidParameterError("SINR must be finite and non-negative")
        tab = self.values[modulation]
        with np.errstate(divide="ignore"):
            sinr_db = 10.0 * np.log10(sinr)
        mi = np.interp(sinr_db, self.grid_db, tab)
        low = sinr_db < self.grid_db[0]
        return np.where(low, tab[0] * sinr / self._lin0, mi)


@lru_cache(maxsize=None)
def default_table() -> MiTable:
    """Tables packaged with the library."""
    with resources.files("pdola.data").joinpath("mi_tables.npz").open("rb") as fh:
        data = np.load(fh)
        return MiTable({k: data[k] for k in data.files})
