"""Regenerate demo_seafloor.asc, the DEM used by demo.yaml.

Rippled 3 km x 3 km seafloor around 44 m depth with one shallower mound
in the northeast. Deterministic; run from this directory.
"""

import numpy as np

N = 101
CELL_DEG = 0.00027  # ~30 m per cell near the equator

x = np.arange(N) * 30.06
y = np.arange(N) * 30.06
gx, gy = np.meshgrid(x, y)  # row 0 = south

depth = (
    44.0
    + 3.0 * np.sin(2.0 * np.pi * gx / 700.0) * np.cos(2.0 * np.pi * gy / 900.0)
    - 8.0 * np.exp(-(((gx - 2200.0) ** 2) + (gy - 1800.0) ** 2) / 700.0**2)
)

with open("demo_seafloor.asc", "w", encoding="ascii", newline="\n") as fh:
    fh.write(f"ncols {N}\n")
    fh.write(f"nrows {N}\n")
    fh.write("xllcorner 0.0\n")
    fh.write("yllcorner 0.0\n")
    fh.write(f"cellsize {CELL_DEG}\n")
    fh.write("nodata_value -9999\n")
    for row in depth[::-1]:  # north row first
        fh.write(" ".join(f"{v:.3f}" for v in row) + "\n")
print("wrote demo_seafloor.asc")
