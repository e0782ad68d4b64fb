# %% [markdown]
# # BLER and throughput with and without PDO adaptation
#
# Small run (60 drops per point) of the 4x4 EPA5 setting at PDO = +/-3 dB.
# The acceptance suite runs the same thing with 500 drops.

# %%
from pathlib import Path

import numpy as np

from pdola.config import resolve, scenarios
from pdola.link_simulator import run_scenario, throughput_gain, write_results_csv
from pdola.plotting import write_svg

cfg = resolve({"simulation": {"drops": 60}}, preset="setting1")
results = [run_scenario(sc) for sc in scenarios(cfg)]

for r in results:
    print(f"{r.scenario_id:16s} {r.adaptation.value:3s} BLER", np.round(r.bler, 2))

# %%
pairs = {}
for r in results:
    pairs.setdefault(r.scenario_id, {})[r.adaptation.value] = r
for sid, p in pairs.items():
    print(sid, "gain %.0f%%" % (100 * throughput_gain(p["ON"], p["OFF"])))

# %%
out = Path("notebook_out")
out.mkdir(exist_ok=True)
write_results_csv(out / "setting1_small.csv", results)
write_svg(out / "setting1_small.svg", results)
