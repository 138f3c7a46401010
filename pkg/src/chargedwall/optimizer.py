"""Gradient descent on the angle field and wall-shape diagnostics.

Descent uses the L2 gradient (per-node derivative divided by the cell
area) with Armijo backtracking, so every accepted step lowers the energy.
The ``"bb"`` rule starts each line search from a Barzilai-Borwein step
instead of the previous step, which is much faster on stiff grids but
keeps the monotone certificate.
"""
from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .energy import energy_and_gradient
from .profiles import layer_phase
from .recovery import tube_width
from .strip import CLAMP, make_admissible_field, save_field

__all__ = [
    "DescentOptions", "DescentError", "IterationLog", "WallTrace", "initial_field",
    "minimize", "extract_wall", "slope_stats", "write_log_csv",
]

LOG_COLUMNS = ("iter", "exchange", "anisotropy", "stray", "total", "grad_norm", "step")


@dataclass(frozen=True)
class DescentOptions:
    """Settings of `minimize`.

    Parameters
    ----------
    max_iters : int
        Iteration cap (accepted steps).
    tol : float, optional
        Stop when the sup norm of the L2 gradient is at most ``tol``.
        Default ``1e-4 / epsilon``.
    rule : {"armijo", "bb", "fixed"}
        Step rule.  ``"fixed"`` takes ``step`` without line search and is
        not guaranteed to descend.
    step : float
        Initial (or fixed) step length.
    armijo : float
        Sufficient-decrease constant.
    shrink : float
        Backtracking factor.
    max_backtracks : int
        Line-search budget per iteration.
    seed : int
        Seed of the initial wall perturbation (see `initial_field`).
    dump_dir : str, optional
        Where a failing run writes its state; default the temp directory.
    """

    max_iters: int = 2000
    tol: float | None = None
    rule: str = "armijo"
    step: float = 1e-3
    armijo: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 60
    seed: int = 0
    dump_dir: str | None = None

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be an integer >= 1")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.rule not in ("armijo", "bb", "fixed"):
            raise ValueError(f"unknown step rule {self.rule!r}")
        if not (self.step > 0 and 0 < self.armijo < 1 and 0 < self.shrink < 1):
            raise ValueError("need step > 0, 0 < armijo < 1 and 0 < shrink < 1")

    def tolerance(self, epsilon):
        return self.tol if self.tol is not None else 1e-4 / epsilon


class DescentError(RuntimeError):
    """Line search failed to decrease the energy; ``dump`` is the saved state."""

    def __init__(self, message, dump, log):
        super().__init__(f"{message} (state written to {dump})")
        self.dump = dump
        self.log = log


@dataclass
class IterationLog:
    rows: list = field(default_factory=list)
    converged: bool = False

    def append(self, it, br, grad_norm, step):
        self.rows.append({"iter": it, "exchange": br.exchange, "anisotropy": br.anisotropy,
                          "stray": br.stray, "total": br.total, "grad_norm": grad_norm,
                          "step": step})

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def __len__(self):
        return len(self.rows)


def write_log_csv(path, log):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for r in log.rows:
            w.writerow([r["iter"]] + [repr(float(r[k])) for k in LOG_COLUMNS[1:]])


def initial_field(grid, epsilon, seed=0, amplitude=0.1, modes=(2,), center=0.0):
    """Straight layer bent along a seeded sinusoidal centre line.

    The centre line is ``gamma(x2) = center + amplitude * sum_k a_k
    sin(2 pi k x2 / ell + phi_k)`` with ``a_k`` uniform in ``[0.5, 1]``
    (normalised to sum 1) and uniform phases.  ``amplitude = 0`` gives
    the straight wall.
    """
    rng = np.random.default_rng(seed)
    modes = np.atleast_1d(np.asarray(modes, dtype=float))
    a = rng.uniform(0.5, 1.0, modes.size)
    a /= a.sum()
    ph = rng.uniform(0, 2 * np.pi, modes.size)
    arg = 2 * np.pi * modes[:, None] * grid.x2[None, :] / grid.ell + ph[:, None]
    gamma = center + amplitude * (a[:, None] * np.sin(arg)).sum(axis=0)
    dgamma = amplitude * (a[:, None] * 2 * np.pi * modes[:, None] / grid.ell * np.cos(arg)).sum(axis=0)
    beta = tube_width(epsilon)
    if np.abs(gamma).max() + beta >= CLAMP:
        raise ValueError("perturbed wall leaves |x1| < 1; lower the amplitude")
    t = (grid.x1[:, None] - gamma[None, :]) / np.sqrt(1 + dgamma ** 2)[None, :]
    return make_admissible_field(grid, 0.5 * np.pi - layer_phase(t, epsilon, beta))


def _dump(field, options, tag):
    d = options.dump_dir or tempfile.gettempdir()
    os.makedirs(d, exist_ok=True)
    path = os.path.join(d, f"descent_failure_{tag}.cdwf")
    save_field(path, field)
    return path


def minimize(field, background, params, options=None, callback=None):
    """Descend the energy from an admissible field.

    Returns ``(field, EnergyBreakdown, IterationLog)``.  The log holds one
    row per accepted iterate, starting with the input.  Clamped nodes
    never change.  Raises `DescentError` when backtracking cannot lower
    the energy while the gradient is still above ten times the tolerance.
    """
    options = options or DescentOptions()
    params.check_resolution(field.grid)
    g = field.grid
    area = g.cell_area
    tol = options.tolerance(params.epsilon)
    theta = np.array(field.theta)
    br, grad = energy_and_gradient(field, background, params)
    gl2 = grad / area
    log = IterationLog()
    step = options.step
    log.append(0, br, float(np.abs(gl2).max()), 0.0)
    prev = None
    for it in range(1, options.max_iters + 1):
        gnorm = float(np.abs(gl2).max())
        if gnorm <= tol:
            log.converged = True
            break
        slope = float(np.sum(grad * gl2))          # -dE/dtau at tau = 0
        if options.rule == "bb" and prev is not None:
            s, y = theta - prev[0], gl2 - prev[1]
            sy = float(np.sum(s * y))
            if sy > 0:
                step = float(np.sum(s * s)) / sy
        elif options.rule == "armijo" and it > 1:
            step = step / options.shrink            # let the step grow back
        for _ in range(options.max_backtracks):
            trial = field.with_theta(theta - step * gl2)
            br_t, grad_t = energy_and_gradient(trial, background, params)
            if options.rule == "fixed" or br_t.total <= br.total - options.armijo * step * slope:
                break
            step *= options.shrink
        else:
            if gnorm <= 10 * tol:
                log.converged = True
                break
            path = _dump(field, options, f"iter{it}")
            raise DescentError(f"no descent after {options.max_backtracks} backtracks at "
                               f"iteration {it} (grad {gnorm:.3e})", path, log)
        prev = (theta, gl2)
        field, br, grad = trial, br_t, grad_t
        theta = np.array(field.theta)
        gl2 = grad / area
        log.append(it, br, float(np.abs(gl2).max()), step)
        if callback is not None:
            callback(it, field, br)
    else:
        log.converged = float(np.abs(gl2).max()) <= tol
    return field, br, log


@dataclass(frozen=True, eq=False)
class WallTrace:
    """Zero crossing of ``u = cos(theta)`` in every ``x2`` row.

    ``gamma[j]`` is NaN where row ``j`` has no crossing or several.
    """

    x2: np.ndarray
    gamma: np.ndarray
    crossings: np.ndarray
    ell: float

    @property
    def valid_rows(self):
        return self.crossings == 1

    @property
    def valid(self):
        return bool(np.all(self.valid_rows))

    def slopes(self):
        """``d gamma / d x2`` on each periodic row segment."""
        dx2 = np.diff(np.append(self.x2, self.ell))
        return (np.roll(self.gamma, -1) - self.gamma) / dx2


def extract_wall(field):
    """Locate the wall as the per-row linear zero of ``u`` in ``|x1| < 1``."""
    g = field.grid
    free = np.flatnonzero(np.abs(g.x1) < CLAMP)
    lo, hi = free[0], free[-1]
    u = np.cos(field.theta[lo:hi + 1])
    x1 = g.x1[lo:hi + 1]
    s = np.sign(u)
    change = s[:-1] * s[1:] < 0
    zero = (s[:-1] == 0)
    count = change.sum(axis=0) + zero.sum(axis=0)
    gamma = np.full(g.ny, np.nan)
    ok = count == 1
    for j in np.flatnonzero(ok):
        i = np.flatnonzero(change[:, j] | zero[:, j])[0]
        u0, u1 = u[i, j], u[i + 1, j]
        gamma[j] = x1[i] + (x1[i + 1] - x1[i]) * u0 / (u0 - u1)
    return WallTrace(g.x2.copy(), gamma, count, g.ell)


def slope_stats(trace):
    """Per-segment ``|n1| = 1 / sqrt(1 + gamma'^2)`` with mean, min and max."""
    if not trace.valid:
        bad = int(np.sum(~trace.valid_rows))
        raise ValueError(f"wall trace is invalid in {bad} rows")
    n1 = 1.0 / np.sqrt(1.0 + trace.slopes() ** 2)
    return {"mean_n1": float(n1.mean()), "min_n1": float(n1.min()),
            "max_n1": float(n1.max()), "n1": n1}
