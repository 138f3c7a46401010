"""
Line energy of charged walls and the zigzag trick
==================================================

In the sharp-interface limit a wall costs ``2 f(sqrt(lam) |n1|)`` per unit
length, where ``f(s) = 1 + s^2`` up to ``s = 1`` and ``2 s`` beyond.  The
linear branch is a relaxation: a wall steeper than the critical normal
``|n1| = lam^(-1/2)`` has the same energy as a fine zigzag of edges sitting
exactly at the critical angle.  The cheapest wall in a strip of period
``ell`` costs ``e(lam)``, which has a kink at ``lam = 1``.

This script tabulates ``e``, refines a random wall into a zigzag with the
same energy and checks the global-minimizer band.
"""
import numpy as np

from chargedwall.limit import (classify_minimizer, ground_state_energy, limit_energy, make_wall,
                               straight_wall, zigzag_refine)

ell = 1.0
for lam in (0.0, 0.5, 1.0, 2.0, 4.0):
    print(f"e({lam:3.1f}) = {ground_state_energy(lam, ell):.4f}")

# %%
# A straight wall stays optimal for the relaxed energy.  For lam > 1 it is
# only a limit of zigzags, which is what the recovery construction needs.
for lam in (0.5, 1.0, 4.0):
    ok, info = classify_minimizer(straight_wall(ell), lam)
    print(f"straight wall at lam={lam}: minimizer={ok}, gap to e(lam) = {info['gap']:.3f}")

# %%
# Refinement replaces steep edges by teeth at the critical angle.  The
# energy does not move, the flux -sum n1 len stays equal to ell.
rng = np.random.default_rng(3)
pts = np.column_stack([rng.uniform(-0.2, 0.2, 5), [0, 0.2, 0.45, 0.6, 0.8]])
wall = make_wall(np.vstack([pts, [pts[0, 0], ell]]), ell)
lam = 4.0
zig = zigzag_refine(wall, lam, k=2)
print(f"\nrandom wall: {len(wall.lengths)} edges, E0 = {limit_energy(wall, lam):.12f}")
print(f"refined:     {len(zig.lengths)} edges, E0 = {limit_energy(zig, lam):.12f}")
print(f"flux before/after: {wall.flux():.12f} {zig.flux():.12f}")

tilted = zigzag_refine(straight_wall(ell, -0.25 * np.sqrt(3) / 2), lam, k=1)
print(f"\none-tooth zigzag of a straight wall: E0 = {limit_energy(tilted, lam):.6f}, "
      f"e(4) = {ground_state_energy(lam, ell):.6f}")
print("minimizer:", classify_minimizer(tilted, lam)[0])
