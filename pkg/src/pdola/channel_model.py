"""Time-varying MIMO tapped-delay-line channels sampled per RBG, and SRS estimates.

Each tap of every (rx, tx) antenna pair fades independently.  The fading
process is a sum of ``N_SINUSOIDS`` complex exponentials with uniformly random
arrival angles and phases, whose autocorrelation is exactly
``J0(2 pi f_d tau)`` (classical Doppler spectrum).  The frequency response is
evaluated at the centre subcarrier of each RBG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np
import yaml

from .exceptions import InvalidParameterError

__all__ = [
    "ChannelProfile",
    "GridConfig",
    "ChannelRealization",
    "load_profiles",
    "preset",
    "realize",
    "estimate_from_srs",
    "whitening_matrix",
]

N_SINUSOIDS = 32
SUBCARRIERS_PER_RB = 12


@dataclass(frozen=True)
class ChannelProfile:
    tap_delays_ns: tuple[float, ...]
    tap_powers_db: tuple[float, ...]
    doppler_hz: float = 0.0
    n_tx: int = 1
    n_rx: int = 1
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tap_delays_ns", tuple(float(d) for d in self.tap_delays_ns))
        object.__setattr__(self, "tap_powers_db", tuple(float(p) for p in self.tap_powers_db))
        if len(self.tap_delays_ns) != len(self.tap_powers_db) or not self.tap_delays_ns:
            raise InvalidParameterError("tap delay and power lists must be non-empty and equal length")
        if self.doppler_hz < 0:
            raise InvalidParameterError(f"doppler_hz must be >= 0, got {self.doppler_hz}")
        if self.n_tx < 1 or self.n_rx < 1:
            raise InvalidParameterError("n_tx and n_rx must be >= 1")

    @property
    def tap_powers_linear(self) -> np.ndarray:
        """Linear tap powers normalised to unit sum."""
        p = 10.0 ** (np.asarray(self.tap_powers_db) / 10.0)
        return p / p.sum()


@dataclass(frozen=True)
class GridConfig:
    n_rbg: int = 8
    rbs_per_rbg: int = 4
    subcarrier_spacing_hz: float = 30e3
    srs_comb: int = 4
    srs_symbols: int = 1

    def __post_init__(self):
        if self.n_rbg < 1 or self.rbs_per_rbg < 1:
            raise InvalidParameterError("n_rbg and rbs_per_rbg must be >= 1")
        if self.srs_comb not in (2, 4):
            raise InvalidParameterError(f"srs_comb must be 2 or 4, got {self.srs_comb}")
        if self.srs_symbols not in (1, 2, 4):
            raise InvalidParameterError(f"srs_symbols must be 1, 2 or 4, got {self.srs_symbols}")
        if self.subcarrier_spacing_hz <= 0:
            raise InvalidParameterError("subcarrier_spacing_hz must be positive")

    @property
    def slot_duration_s(self) -> float:
        return 1e-3 * 15e3 / self.subcarrier_spacing_hz

    @property
    def srs_res_per_rbg(self) -> int:
        """SRS resource elements averaged per RBG by the LS estimator."""
        return self.rbs_per_rbg * SUBCARRIERS_PER_RB // self.srs_comb * self.srs_symbols

    def rbg_center_hz(self) -> np.ndarray:
        width = self.rbs_per_rbg * SUBCARRIERS_PER_RB * self.subcarrier_spacing_hz
        return (np.arange(self.n_rbg) + 0.5) * width


@dataclass(frozen=True)
class ChannelRealization:
    """Per-RBG channel matrices with the matching noise covariance.

    ``per_rbg_h`` has shape ``(n_rbg, n_rx, n_tx)`` and ``noise_cov`` shape
    ``(n_rbg, n_rx, n_rx)``.  Noise is referenced to a transmission with unit
    power per RE, so ``W @ H`` with ``W = whitening_matrix(noise_cov)`` is the
    SNR-scaled channel.
    """

    per_rbg_h: np.ndarray
    noise_cov: np.ndarray = field(default=None)
    slot: int = 0

    def __post_init__(self):
        h = np.asarray(self.per_rbg_h, dtype=complex)
        if h.ndim != 3:
            raise InvalidParameterError(f"per_rbg_h must be (n_rbg, n_rx, n_tx), got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise InvalidParameterError("per_rbg_h must be finite")
        object.__setattr__(self, "per_rbg_h", h)
        object.__setattr__(self, "noise_cov", _as_cov(self.noise_cov, h.shape[0], h.shape[1]))

    @property
    def n_rbg(self) -> int:
        return self.per_rbg_h.shape[0]

    def with_noise(self, noise_cov) -> "ChannelRealization":
        return replace(self, noise_cov=noise_cov)


def _as_cov(noise_cov, n_rbg, n_rx):
    if noise_cov is None:
        noise_cov = 1.0
    cov = np.asarray(noise_cov, dtype=complex)
    if cov.ndim == 0:
        cov = cov * np.eye(n_rx)
    if cov.ndim == 2 and cov.shape == (n_rx, n_rx):
        cov = np.broadcast_to(cov, (n_rbg, n_rx, n_rx))
    if cov.shape != (n_rbg, n_rx, n_rx):
        raise InvalidParameterError(f"noise_cov shape {cov.shape} incompatible with {n_rbg} RBGs x {n_rx} rx")
    try:
        whitening_matrix(cov)
    except np.linalg.LinAlgError:
        raise InvalidParameterError("noise_cov must be Hermitian positive definite") from None
    return np.array(cov)


def load_profiles() -> dict:
    """Named tap tables from the packaged preset file."""
    text = resources.files("pdola.data").joinpath("channel_profiles.yaml").read_text()
    data = yaml.safe_load(text)
    data.pop("version", None)
    return data


def preset(name: str, n_tx: int = 1, n_rx: int = 1, doppler_hz: float | None = None) -> ChannelProfile:
    """Build a profile from a preset name such as ``"EPA5"`` or ``"EVA20"``.

    The trailing number, if any, is the Doppler frequency in Hz; an explicit
    ``doppler_hz`` overrides it.
    """
    base = name.rstrip("0123456789.")
    suffix = name[len(base):]
    table = load_profiles()
    if base not in table:
        raise InvalidParameterError(f"unknown channel preset {name!r}; known: {sorted(table)}")
    if doppler_hz is None:
        doppler_hz = float(suffix) if suffix else 0.0
    entry = table[base]
    return ChannelProfile(
        entry["tap_delays_ns"], entry["tap_powers_db"], doppler_hz, n_tx, n_rx, name=name
    )


def realize(profile: ChannelProfile, grid: GridConfig, slot: int, seed) -> ChannelRealization:
    """Per-RBG frequency-domain channel at ``slot``.

    The same ``seed`` gives the same fading trajectory, so two calls at
    different slots sample one continuous process.
    """
    rng = np.random.default_rng(seed)
    n_taps = len(profile.tap_delays_ns)
    shape = (n_taps, profile.n_rx, profile.n_tx, N_SINUSOIDS)
    theta = rng.uniform(0.0, 2 * np.pi, shape)
    phi = rng.uniform(0.0, 2 * np.pi, shape)

    t = slot * grid.slot_duration_s
    g = np.exp(1j * (2 * np.pi * profile.doppler_hz * np.cos(theta) * t + phi)).sum(-1)
    g /= math.sqrt(N_SINUSOIDS)
    g *= np.sqrt(profile.tap_powers_linear)[:, None, None]

    delays = np.asarray(profile.tap_delays_ns) * 1e-9
    steering = np.exp(-2j * np.pi * np.outer(grid.rbg_center_hz(), delays))
    h = np.einsum("bk,kij->bij", steering, g)
    return ChannelRealization(h, None, slot)


def estimate_from_srs(
    true_ch: ChannelRealization,
    grid: GridConfig,
    srs_density_dbm_per_re: float,
    noise_dbm_per_re: float,
    seed,
) -> ChannelRealization:
    """Least-squares SRS estimate averaged over the comb REs of each RBG.

    The estimation error per entry is CN(0, N / (S * K)) with N and S the
    linear noise and SRS powers per RE and K the averaged REs per RBG.  The
    returned noise covariance is ``N / S`` times identity.
    """
    rng = np.random.default_rng(seed)
    h = true_ch.per_rbg_h
    noise_to_signal = 10.0 ** ((noise_dbm_per_re - srs_density_dbm_per_re) / 10.0)
    err_var = noise_to_signal / grid.srs_res_per_rbg
    err = rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    h_est = h + math.sqrt(err_var / 2.0) * err
    return ChannelRealization(h_est, noise_to_signal, true_ch.slot)


def whitening_matrix(noise_cov) -> np.ndarray:
    """Inverse Cholesky factor ``W`` with ``W @ R @ W^H = I``.

    Works on a single covariance or a stack of them; raises
    ``numpy.linalg.LinAlgError`` when a covariance is not positive definite.
    """
    r = np.asarray(noise_cov, dtype=complex)
    if not np.allclose(r, np.conj(np.swapaxes(r, -1, -2))):
        raise np.linalg.LinAlgError("noise covariance is not Hermitian")
    chol = np.linalg.cholesky(r)
    return np.linalg.inv(chol)
