# # Grid searches for arrival and departure angles
#
# Departure angles come from the uplink sounding vector: pick the best
# matched steering vector, project it out, repeat.

# %%
import numpy as np

from chanrecon import AngleGrid, aod_nullproj_ula, aod_nullproj_upa, dominant_aoas
from chanrecon.angles import aoa_spectrum
from chanrecon.arrays import ula_response, upa_response
from chanrecon.codebook import build_dft_codebook

grid = AngleGrid()
m1, m2 = grid.ula[2400], grid.ula[1200]
h = ula_response(32, m1) + 0.5 * ula_response(32, m2)
angles, residuals = aod_nullproj_ula(h, 2, grid, return_residuals=True)
print("true   ", np.rad2deg([m1, m2]))
print("found  ", np.rad2deg(angles))
print("|residual| after each pass", [round(float(np.linalg.norm(r)), 12) for r in residuals])

# %%
# Printed-form deflation (conjugate on the wrong factor) leaves most of the
# first component behind whenever its gain is not real.
h = 1j * ula_response(32, m1) + 0.5 * ula_response(32, m2)
for literal in (True, False):
    (pick,), (res,) = aod_nullproj_ula(h, 1, grid, literal=literal, return_residuals=True)
    a = ula_response(32, pick)
    print(f"literal={literal!s:5s} left along the picked beam: {abs(np.vdot(a, res)):.2e}")

# %%
# Planar array: the search runs over (vertical, horizontal) pairs.
h = upa_response(8, 4, 0.3, -0.2)
print("UPA pick (deg):", np.rad2deg(aod_nullproj_upa(h, 1, grid, 8, 4)[0]))

# %%
# Arrival angles come from the PMI. Codewords have orthonormal columns, so
# the arrival spectrum is flat and the search falls back to evenly spread
# angles.
w = build_dft_codebook(4, 2).entries[5]
chi = aoa_spectrum(w, grid)
print("spectrum spread:", np.ptp(chi))
print("AoAs (sin):", np.sin(dominant_aoas(w, grid, 2)))
