# %% [markdown]
# # MI thresholds for the 64QAM MCS table
#
# Block errors follow a logistic curve in received per-layer MI. Each MCS gets
# the MI at which that curve gives 10 % BLER.

# %%
import numpy as np

from pdola.mcs_mapping import LogisticErrorModel, StepErrorModel, calibrate, load_base_table

base = load_base_table()
model = LogisticErrorModel(slope=0.2, gap=0.1)
res = calibrate(base, model, target_bler=0.1, tol=0.01, drops=20000, seed=0)

for e, b in zip(res.table.entries[::4], res.achieved_bler[::4]):
    print(f"MCS {e.index:2d}  Qm {e.q_m}  SE {e.spectral_efficiency:.4f}  thr {e.mi_threshold:.4f}  BLER {b:.3f}")

# %%
# closed form for comparison: SE + gap + slope * ln 9
closed = np.array([model.threshold_for(e, 0.1) for e in base.entries])
print(np.max(np.abs(res.diagnostics["raw_thresholds"] - closed)))

# a hard decoder puts every threshold exactly at SE
step = calibrate(base, StepErrorModel(), 0.1, drops=1000)
print(np.allclose(step.diagnostics["raw_thresholds"], base.spectral_efficiency))

# %%
print(res.table.to_text()[:200])
