"""Global Picard closure vs layer-by-layer freezing.

The path coefficients depend on the unknown solution itself.  The layered
solver freezes them one layer at a time (explicit, weak order 1); the Picard
mode instead recomputes the whole trajectory against its own previous iterate
until the fields stop moving, with common random numbers so the residual
measures coefficient feedback rather than resampling noise.

Run:  python3 demos/picard_closure.py     (~60 s)
"""
import numpy as np

import sktmc as sk

params = sk.SKTParameters(d1=0.25, d2=0.25, d11=0.05, d12=0.1, d21=0.1, d22=0.05,
                          a1=0.5, a2=0.5, a11=0.25, a12=0.25, a21=0.25, a22=0.25)
grid = sk.GridSpec(-8.0, 8.0, 81)
initial = sk.make_initial("two-bumps(-1.5, 1.5, 0.8, 3)")

cfg = sk.SolverConfig(npaths=20000, substeps=4, dt=0.05, T=0.2,
                      picard_tol=2e-4, picard_max=8, master_seed=5, workers=4)

print("Picard iteration on the cross-diffusion scenario:")
result = sk.solve_picard(initial, initial, params, grid, cfg,
                         progress=lambda rec: print(
                             f"  pass {rec['iteration']}: residual {rec['residual']:.3e}"))
print(f"converged={result.converged} after {result.iterations} passes\n")

layered = sk.solve_layered(initial, initial, params, grid, cfg)
gap = max(float(np.max(np.abs(a.u1 - b.u1)))
          for a, b in zip(result.trajectory.fields, layered.trajectory.fields))
print(f"sup gap between Picard and layered trajectories: {gap:.3e}")
print("both closures agree to the O(dt) level; the decreasing residuals show "
      "the coefficient feedback contracting at this horizon")

zero = sk.make_initial("constant(0)")
res0 = sk.solve_picard(zero, zero, params, grid, cfg)
print(f"\nzero data: converged={res0.converged} in {res0.iterations} pass "
      f"(residual {res0.residuals[0]}) - zero is a fixed point")
