"""
Synthetic ODMR map
==================

Lines from the NV and P1 Hamiltonians are broadened into Lorentzians and
rendered as a field-by-frequency intensity map, written as an 8-bit PGM
image that any viewer can open.
"""

import numpy as np

from nvdiamond import SweepGrid, lines_over_sweep
from nvdiamond.odmr_synth import synthesize_map, write_map_csv, write_map_pgm

orientation = (-4.0, 95.0)
grid = SweepGrid(0.0, 0.15, 600)
lines = lines_over_sweep("NV", orientation, grid) + lines_over_sweep("P1", orientation, grid)

f_grid = np.linspace(0.0, 7.0e9, 700)
B_grid = np.linspace(0.0, 0.15, 300)
odmr = synthesize_map(lines, f_grid, B_grid, linewidth_hz=20e6)

print("map shape (fields, frequencies):", odmr.signal.shape)
print("fraction of pixels above half contrast: %.3f" % np.mean(odmr.signal > 0.5))

write_map_pgm(odmr, "odmr_map.pgm")
write_map_csv(odmr, "odmr_map.csv")
print("wrote odmr_map.pgm and odmr_map.csv")
