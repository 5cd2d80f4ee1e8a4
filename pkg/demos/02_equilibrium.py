"""Juttner equilibria: the relativistic Maxwellians.

The local equilibrium of the relativistic Landau equation is the
Juttner distribution M(p) = n0 gamma / (4 pi T0 K2(gamma)) *
exp(-gamma u^mu p_mu), parameterized by density n0, bulk velocity u,
and rest temperature T0.  This script shows that the implemented
normalization reproduces the prescribed fluid moments on the default
momentum grid, and how the moments degrade when the grid no longer
contains the thermal support.
"""

import numpy as np

from rlandau.equilibrium import FluidState, bessel_k, fluid_moment_check, juttner
from rlandau.phase_space import MomentumGrid

grid = MomentumGrid(6.0, 12)

# -- Bessel normalization ----------------------------------------------------
print("Modified Bessel K2 (integral representation vs recurrence check):")
for z in (1.0, 2.5, 5.0):
    print(f"  K2({z}) = {bessel_k(2, z):.10f}")

# -- a rest-frame equilibrium ------------------------------------------------
rest = FluidState(1.0, np.zeros(3), 0.4)
res = fluid_moment_check(rest, grid)
print("\nRest state (n0 = 1, T0 = 0.4), relative moment residuals:")
print(f"  density  {res.density:.3e}")
print(f"  pressure {res.pressure:.3e}")
print(f"  energy   {res.energy:.3e}")

# -- a gently boosted equilibrium --------------------------------------------
moving = FluidState(1.2, [0.02, 0.0, -0.01], 0.45)
res = fluid_moment_check(moving, grid)
print("\nBoosted state (u = [0.02, 0, -0.01], T0 = 0.45):")
print(f"  density  {res.density:.3e}")
print(f"  pressure {res.pressure:.3e}")
print(f"  energy   {res.energy:.3e}")

# -- what breaks: temperature beyond the box ---------------------------------
print("\nQuadrature support: density residual as T0 grows on a radius-6 box")
for T0 in (0.4, 0.8, 1.2):
    res = fluid_moment_check(FluidState(1.0, np.zeros(3), T0), grid)
    print(f"  T0 = {T0:3.1f}: {res.density:.3e}")
print("(the defaults keep the thermal support well inside the box)")

# -- pointwise shape ---------------------------------------------------------
M = juttner(rest, grid.nodes)
print(f"\nPeak of M: {M.max():.5f}; value at the box corner: {M.min():.3e}")
