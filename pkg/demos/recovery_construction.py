"""
Building a low-energy wall from a polygon
=========================================

Given a polygonal wall we round its corners with arcs of radius
``2 beta``, ``beta = eps^(5/6)``, and lay a one-dimensional transition
profile across the rounded curve.  As ``eps`` shrinks, the energy of this
field should approach the line energy ``E0`` of the polygon.  The approach
is logarithmically slow, so we only look at the trend.
"""
import math
import warnings

from chargedwall.energy import EnergyParams, total_energy
from chargedwall.limit import limit_energy, straight_wall, zigzag_refine
from chargedwall.optimizer import extract_wall, slope_stats
from chargedwall.recovery import build_recovery_field, tube_width
from chargedwall.strip import make_background, make_grid

warnings.simplefilter("ignore", RuntimeWarning)

lam = 4.0
wall = zigzag_refine(straight_wall(1.0, -0.25 * math.sqrt(3) / 2), lam, k=1)
print("zigzag vertices:\n", wall.vertices.round(4))
print(f"E0 = {limit_energy(wall, lam):.4f}")

# %%
# Grid spacing eps/2 in both directions; pad 1 keeps memory small.
for eps in (2e-2, 1e-2):
    h = eps / 2
    g = make_grid(1.0, 2.0, int(round(4 / h / 2)) * 2, int(round(1 / h / 2)) * 2)
    f = build_recovery_field(wall, eps, g, lam=lam)
    br = total_energy(f, make_background(g), EnergyParams(eps, lam, pad=1))
    stats = slope_stats(extract_wall(f))
    print(f"eps={eps:g} beta={tube_width(eps):.3f} grid {g.nx}x{g.ny}: "
          f"E/E0 = {br.total / limit_energy(wall, lam):.4f}, "
          f"local {br.exchange + br.anisotropy:.3f}, stray {br.stray:.3f}, "
          f"median |n1| {sorted(stats['n1'])[len(stats['n1']) // 2]:.3f}")
