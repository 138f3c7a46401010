"""
Offsets of polygons and the short-loop decomposition
=====================================================

For a set bounded by polygons we measure the length of the level set
``{d = t}`` of the distance to the boundary exactly (segments and arcs),
watch it drop at merging times, and split the set into a part made of
long boundary loops and a remainder of short loops.
"""
import numpy as np

from chargedwall.levelset import (PolygonalRegion, decompose_global, decompose_local, disk_polygon,
                                  merge_times, neighborhood_euler, offset_length,
                                  random_star_polygon)

rng = np.random.default_rng(5)
star = PolygonalRegion((random_star_polygon(rng, 9),))
P = star.perimeter
print(f"star polygon, perimeter {P:.4f}")
for t in np.linspace(0, P / (2 * np.pi), 6):
    print(f"  t={t:.3f}: level-set length {offset_length(star, t):.4f} (bound {2 * P:.4f})")

# %%
# Euler characteristic of the t-neighbourhood: 0 while it is a ring, 1 once
# the hole has closed.
times = merge_times(star)
print("first merging times:", np.round(times[:4], 4))
for t in (0.05, 0.3, 0.9):
    print(f"  chi(t={t}) = {neighborhood_euler(star, t)}")

# %%
# An annulus with a tiny hole: the hole is a short loop and goes to the remainder.
ring = disk_polygon((0, 0), 1.0, 128).difference(disk_polygon((0, 0), 0.05, 32))
dec = decompose_global(PolygonalRegion.from_geometry(ring), 0.2)
print(f"\nannulus: kept loops {dec.selected}, short loops {dec.rejected}, checks ok: {dec.ok}")

# %%
# Local version inside a ball that cuts the outer circle.
loc = decompose_local(PolygonalRegion.from_geometry(ring), (1.0, 0.0), 0.5, 0.008)
print(f"local: boundary length in the ball {loc.gamma_length:.4f}, checks ok: {loc.ok}")
