"""Uplink PUSCH precoding codebooks for 2 and 4 antenna ports (CP-OFDM)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .exceptions import InvalidParameterError

__all__ = ["Codebook", "load_codebook", "CODEBOOK_FILE"]

CODEBOOK_FILE = "ul_codebook.json"
_SYMBOLS = {"0": 0, "1": 1, "-1": -1, "j": 1j, "-j": -1j}


@dataclass(frozen=True)
class Codebook:
    """Precoders keyed by ``(rank, tpmi)``; ranks and TPMIs count from 1 and 0."""

    n_tx: int
    entries: dict

    def __post_init__(self):
        if not self.entries:
            raise InvalidParameterError("codebook is empty")
        for (rank, tpmi), p in self.entries.items():
            if p.shape != (self.n_tx, rank):
                raise InvalidParameterError(
                    f"precoder ({rank}, {tpmi}) has shape {p.shape}, expected {(self.n_tx, rank)}"
                )
        stacks = {}
        for rank in {r for r, _ in self.entries}:
            tpmis = sorted(p for r, p in self.entries if r == rank)
            stacks[rank] = np.stack([self.entries[rank, p] for p in tpmis])
            stacks[rank].flags.writeable = False
        object.__setattr__(self, "_stacks", stacks)

    @property
    def ranks(self) -> list[int]:
        return sorted({r for r, _ in self.entries})

    def n_tpmi(self, rank: int) -> int:
        return sum(1 for r, _ in self.entries if r == rank)

    def precoders(self, rank: int) -> np.ndarray:
        """Stack of all rank-``rank`` precoders ordered by TPMI, shape (N, n_tx, rank)."""
        return self._stacks[rank]

    def __getitem__(self, key) -> np.ndarray:
        try:
            return self.entries[key]
        except KeyError:
            raise InvalidParameterError(f"no precoder for (rank, tpmi) = {key}") from None

    def __contains__(self, key) -> bool:
        return key in self.entries

    def restrict(self, max_rank: int) -> "Codebook":
        return Codebook(self.n_tx, {k: v for k, v in self.entries.items() if k[0] <= max_rank})


@lru_cache(maxsize=None)
def _raw() -> dict:
    return json.loads(resources.files("pdola.data").joinpath(CODEBOOK_FILE).read_text())


@lru_cache(maxsize=None)
def load_codebook(n_tx: int, max_rank: int | None = None) -> Codebook:
    """Standard codebook for ``n_tx`` ports, optionally capped at ``max_rank`` layers."""
    if n_tx == 1:
        return Codebook(1, {(1, 0): np.ones((1, 1), dtype=complex)})
    ports = _raw()["ports"]
    if str(n_tx) not in ports:
        raise InvalidParameterError(f"no codebook for {n_tx} antenna ports; available: {sorted(ports)}")
    entries = {}
    for rank, mats in ports[str(n_tx)].items():
        for tpmi, item in enumerate(mats):
            m = np.array([[_SYMBOLS[s] for s in row] for row in item["matrix"]], dtype=complex)
            entries[int(rank), tpmi] = m / np.sqrt(item["norm_sq"])
    cb = Codebook(n_tx, entries)
    return cb.restrict(max_rank) if max_rank is not None else cb
