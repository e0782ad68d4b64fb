# %% [markdown]
# # Rank/TPMI search and the MI-vs-PDO curve

# %%
import numpy as np

from pdola.channel_model import GridConfig, estimate_from_srs, preset, realize
from pdola.codebook import load_codebook
from pdola.csi_engine import run_algorithm1
from pdola.link_simulator import default_mcs_table
from pdola.pdo_adaptation import AdaptationConfig, adapted_mi, build_mi_curve, schedule

grid = GridConfig(srs_symbols=4)
cb = load_codebook(4)
true = realize(preset("EPA5", 4, 4), grid, 1, seed=3)
est = estimate_from_srs(true, grid, 12.0, 0.0, seed=4)
w = np.eye(4) / np.sqrt(est.noise_cov[0, 0, 0].real)

report, mi = run_algorithm1(est.per_rbg_h, w, cb)
print("rank", report.wb_ri, "tpmi", report.wb_tpmi)
print("MI per RBG", np.round(report.mi_per_rbg, 2))
print("dictionary", mi.values.shape)  # (rank, tpmi, rbg, modulation)

# %% [markdown]
# Scale the estimate by sqrt(10) both ways to get MI at -10, 0 and +10 dB,
# keeping the rank and TPMI picked above.

# %%
rep, curve = build_mi_curve(est.per_rbg_h, w, cb, AdaptationConfig())
for q, row in curve.points:
    print(f"{q:+5.1f} dB", np.round(row[:4], 2))

cap = rep.wb_ri * 6
for pdo in (-20, -3, 3, 20):
    print(pdo, np.round(adapted_mi(curve, pdo, cap)[:4], 2))

# %%
table = default_mcs_table()
for pdo in (-10, -3, 0, 3, 10):
    d = schedule(est.per_rbg_h, w, cb, AdaptationConfig(), pdo, table, rbgs=[0, 1])
    print(pdo, d.mcs, (d.wb_ri, d.wb_tpmi))
