"""
Resonance lines of NV and P1 centres in a swept field
=====================================================

A field of up to 150 mT is applied a few degrees away from one of the
four <111> axes. Each defect orientation sees a different field
direction, so every transition family appears four times.
"""

import numpy as np

from nvdiamond import SweepGrid, SystemParams, lines_over_sweep
from nvdiamond.hamiltonians import defect_axes
from nvdiamond.spectra import gslac_field, near_parallel_axis, unidentified_line

params = SystemParams()
orientation = (-4.0, 95.0)  # polar and azimuthal angle of the field, degrees
grid = SweepGrid(0.0, 0.15, 1000)

# NV: three transitions per axis, tracked through level crossings
nv_lines = lines_over_sweep("NV", orientation, grid, params=params)
print(f"{len(nv_lines)} NV lines")
for line in nv_lines:
    if line.axis == 0:
        print(f"  axis 0 {line.family:22s} f(0) = {line.f[0] / 1e9:.4f} GHz  f(150 mT) = {line.f[-1] / 1e9:.4f} GHz")

# the axis nearest the field shows the ground-state level anticrossing
k = near_parallel_axis(orientation)
b_gslac = gslac_field(params.nv, defect_axes()[k], orientation)
print(f"\nlevel anticrossing of axis {k} at {b_gslac * 1e3:.2f} mT")

# P1: electron spin 1/2 coupled to a 14N nucleus, nine tracked pairs per axis
p1_lines = lines_over_sweep("P1", orientation, grid, params=params)
strong = [ln for ln in p1_lines if ln.axis == k and ln.strength[-1] > 0.1]
print(f"\n{len(p1_lines)} P1 lines; strongly allowed at 150 mT on axis {k}:")
for line in strong:
    print(f"  {line.family:20s} {line.f[-1] / 1e9:.4f} GHz  strength {line.strength[-1]:.3f}")

# the unexplained resonance F_s - F_NV / 3 mirrors the NV line about the anticrossing
nv_minus = next(ln for ln in nv_lines if ln.axis == k and ln.family == "NV_0_to_minus1")
extra = unidentified_line(2.169e9, nv_minus)
i = int(np.argmin(np.abs(extra.B - b_gslac)))
print(f"\nunidentified line at the anticrossing: {extra.f[i] / 1e9:.4f} GHz")
