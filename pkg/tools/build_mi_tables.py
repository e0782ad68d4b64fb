"""Regenerate src/pdola/data/mi_tables.npz.

    python tools/build_mi_tables.py
"""

from pathlib import Path

import numpy as np

from pdola.modulation import generate_tables

OUT = Path(__file__).resolve().parents[1] / "src" / "pdola" / "data" / "mi_tables.npz"

if __name__ == "__main__":
    tables = generate_tables()
    np.savez(OUT, **tables)
    for name, values in tables.items():
        if name != "grid_db":
            print(f"{name:>7}: MI(-20 dB) = {values[0]:.5f}, MI(40 dB) = {values[-1]:.5f}")
    print(f"wrote {OUT}")
