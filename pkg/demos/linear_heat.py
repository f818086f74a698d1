"""Linear sanity check: Monte Carlo solve vs the exact heat-kernel solution.

With all cross-diffusion and competition rates zero the two species decouple
into plain heat equations (optionally with exponential growth), whose exact
solution for Gaussian initial data is a widening Gaussian.  The reversed-path
estimator should reproduce it within Monte Carlo noise plus the documented
O(dt) + O(dx^2) scheme bias.

Run:  python3 demos/linear_heat.py        (~15 s)
"""
import numpy as np

import sktmc as sk

params = sk.SKTParameters(d1=0.5, d2=1.0, a1=1.0)  # species 1 also grows
grid = sk.GridSpec(-8.0, 8.0, 121)
initial = sk.gaussian_profile(center=0.0, width=1.0, mass=1.0)

cfg = sk.SolverConfig(npaths=20000, substeps=5, dt=0.05, T=0.25,
                      master_seed=1, workers=4)
result = sk.solve_layered(initial, initial, params, grid, cfg)

x = grid.nodes()
print(f"{'t':>6} {'sup err u1':>12} {'sup err u2':>12} {'mass u1':>10} {'e^t':>8}")
for field in result.trajectory.fields:
    exact1 = sk.exact_linear(0.0, 1.0, 1.0, 0.5, 1.0, field.t, x)
    exact2 = sk.exact_linear(0.0, 1.0, 1.0, 1.0, 0.0, field.t, x)
    mass1 = np.trapezoid(field.u1, dx=grid.dx)
    print(f"{field.t:6.3f} {np.max(np.abs(field.u1 - exact1)):12.2e} "
          f"{np.max(np.abs(field.u2 - exact2)):12.2e} "
          f"{mass1:10.5f} {np.exp(field.t):8.5f}")

print(f"\nclips={result.clips}  clamp fraction={result.clamp_fraction:.2e}")
print("The species-1 mass tracks e^t; both sup errors stay at the few-1e-3 "
      "level set by path noise and the piecewise-linear field interpolation.")
