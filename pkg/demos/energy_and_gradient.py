"""
The wall energy on a grid
=========================

A magnetization in the strip is an angle field ``theta`` with
``m = (cos theta, sin theta)``, clamped to ``-e1`` left of ``x1 = -1`` and
to ``+e1`` right of ``x1 = 1``.  Its energy has an exchange part, an
anisotropy part and a nonlocal stray part weighted by ``lam``.  We
evaluate the split for a bent layer and check the analytic gradient
against a central difference.
"""
import warnings

import numpy as np

from chargedwall.energy import EnergyParams, energy_and_gradient, total_energy
from chargedwall.optimizer import initial_field
from chargedwall.strip import charge_density, make_background, make_grid

warnings.simplefilter("ignore", RuntimeWarning)     # coarse grid on purpose

grid = make_grid(1.0, 2.0, 128, 32)
eps = 0.05
field = initial_field(grid, eps, seed=2, amplitude=0.2)
bg = make_background(grid)

for lam in (0.0, 1.0, 4.0):
    br = total_energy(field, bg, EnergyParams(eps, lam))
    print(f"lam={lam}: exchange {br.exchange:.4f} anisotropy {br.anisotropy:.4f} "
          f"stray {br.stray:.4f} total {br.total:.4f}")

sigma = charge_density(field, bg)
print(f"total charge {sigma.total:.1e}")

# %%
p = EnergyParams(eps, 2.0)
_, grad = energy_and_gradient(field, bg, p)
rng = np.random.default_rng(0)
d = rng.normal(size=grid.shape) * grid.free_rows[:, None]
h = 1e-6
fd = (total_energy(field.with_theta(field.theta + h * d), bg, p).total
      - total_energy(field.with_theta(field.theta - h * d), bg, p).total) / (2 * h)
print(f"directional derivative: analytic {np.sum(grad * d):.10f}, difference {fd:.10f}")
