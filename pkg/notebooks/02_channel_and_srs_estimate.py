# %% [markdown]
# # Fading channel and SRS-based estimate
#
# EPA5 and EVA20 tapped delay lines, sampled at the centre of each RBG.

# %%
import numpy as np
from scipy.special import j0

from pdola.channel_model import GridConfig, estimate_from_srs, preset, realize, whitening_matrix

grid = GridConfig(n_rbg=8, rbs_per_rbg=4, srs_comb=4, srs_symbols=4)
epa = preset("EPA5", n_tx=4, n_rx=4)
ch = realize(epa, grid, slot=1, seed=7)
ch.per_rbg_h.shape

# %%
# frequency selectivity: |h_00| across the 8 RBGs, EPA vs EVA
eva = preset("EVA20", 4, 4)
print(np.round(np.abs(ch.per_rbg_h[:, 0, 0]), 3))
print(np.round(np.abs(realize(eva, grid, 1, 7).per_rbg_h[:, 0, 0]), 3))

# %% [markdown]
# Time correlation follows J0. At 5 Hz the channel barely moves over the
# 4-slot SRS-to-PUSCH gap; at 300 Hz it decorrelates within a few slots.

# %%
fast = preset("EPA", 8, 8, doppler_hz=300.0)
g1 = GridConfig(n_rbg=1)
for lag in (1, 2, 4):
    x = np.concatenate([realize(fast, g1, 0, s).per_rbg_h.ravel() for s in range(100)])
    y = np.concatenate([realize(fast, g1, lag, s).per_rbg_h.ravel() for s in range(100)])
    rho = np.real(np.vdot(x, y) / np.vdot(x, x))
    print(lag, round(rho, 3), round(j0(2 * np.pi * 300 * g1.slot_duration_s * lag), 3))

# %% [markdown]
# LS estimate at 10 dB SRS SNR. Error variance is N / (S K) with K the
# comb REs averaged per RBG (12 REs per RBG-symbol for comb 4, times 4 symbols).

# %%
est = estimate_from_srs(ch, grid, srs_density_dbm_per_re=10.0, noise_dbm_per_re=0.0, seed=8)
err = est.per_rbg_h - ch.per_rbg_h
print(np.mean(np.abs(err) ** 2), 0.1 / grid.srs_res_per_rbg)

w = whitening_matrix(est.noise_cov[0])
np.round(w.real, 3)
