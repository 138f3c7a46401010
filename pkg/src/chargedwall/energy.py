"""Micromagnetic energy of a charged wall and its gradient in the angle.

    E = (eps/2) int |grad theta|^2 + (1/(2 eps)) int sin^2 theta
        + (pi lam / (2 |log eps|)) || |grad|^(-1/2) div(m - M) ||^2
"""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from . import spectral
from .strip import charge_density, divergence_adjoint

__all__ = [
    "EnergyParams", "EnergyBreakdown", "local_energy", "stray_energy",
    "total_energy", "energy_gradient", "energy_and_gradient", "reflect_x2",
]


@dataclass(frozen=True)
class EnergyParams:
    """Parameters of the energy.

    Parameters
    ----------
    epsilon : float
        Wall width, ``0 < epsilon < 1/4``.
    lam : float
        Relative strength ``lambda >= 0`` of the stray-field term.
    pad : int
        ``x1`` zero-padding factor of the spectral evaluation.
    """

    epsilon: float
    lam: float
    pad: int = spectral.DEFAULT_PAD

    def __post_init__(self):
        if not 0 < self.epsilon < 0.25:
            raise ValueError(f"epsilon must lie in (0, 1/4), got {self.epsilon}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    @property
    def stray_prefactor(self):
        return np.pi * self.lam / (2 * abs(np.log(self.epsilon)))

    def check_resolution(self, grid):
        if self.epsilon < 2 * grid.hx:
            warnings.warn(f"epsilon={self.epsilon:g} is below 2*hx={2 * grid.hx:g}; "
                          "the wall is under-resolved", RuntimeWarning, stacklevel=3)


@dataclass(frozen=True)
class EnergyBreakdown:
    epsilon: float
    lam: float
    exchange: float
    anisotropy: float
    stray: float

    @property
    def total(self):
        return self.exchange + self.anisotropy + self.stray

    def as_dict(self):
        d = asdict(self)
        return {"epsilon": d["epsilon"], "lambda": d["lam"], "exchange": d["exchange"],
                "anisotropy": d["anisotropy"], "stray": d["stray"], "total": self.total}

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=False)


def _wrap(d):
    # angle differences mapped to [-pi, pi)
    return np.mod(d + np.pi, 2 * np.pi) - np.pi


def _differences(theta):
    d1 = _wrap(np.diff(theta, axis=0))
    d2 = _wrap(np.roll(theta, -1, axis=1) - theta)
    return d1, d2


def local_energy(field, params):
    """Return ``(exchange, anisotropy)`` on forward differences."""
    g = field.grid
    d1, d2 = _differences(field.theta)
    eps = params.epsilon
    exchange = 0.5 * eps * (np.sum(d1 ** 2) * g.hy / g.hx + np.sum(d2 ** 2) * g.hx / g.hy)
    anisotropy = 0.5 / eps * np.sum(np.sin(field.theta) ** 2) * g.cell_area
    return float(exchange), float(anisotropy)


def stray_energy(field, background, params):
    if params.lam == 0:
        return 0.0
    sigma = charge_density(field, background)
    norm = spectral.fractional_norm(sigma.sigma, field.grid, -0.5, pad=params.pad)
    return float(params.stray_prefactor * norm)


def total_energy(field, background, params):
    """Evaluate all terms; returns an `EnergyBreakdown`."""
    params.check_resolution(field.grid)
    ex, an = local_energy(field, params)
    st = stray_energy(field, background, params)
    return EnergyBreakdown(params.epsilon, params.lam, ex, an, st)


def energy_and_gradient(field, background, params):
    """Energy breakdown and ``dE/dtheta`` per node (zero on clamped nodes)."""
    g = field.grid
    theta = field.theta
    eps = params.epsilon
    d1, d2 = _differences(theta)
    cx, cy = eps * g.hy / g.hx, eps * g.hx / g.hy
    grad = np.zeros(g.shape)
    grad[:-1] -= cx * d1
    grad[1:] += cx * d1
    grad -= cy * (d2 - np.roll(d2, 1, axis=1))
    s, c = np.sin(theta), np.cos(theta)
    grad += s * c * g.cell_area / eps
    exchange = 0.5 * (cx * np.sum(d1 ** 2) + cy * np.sum(d2 ** 2))
    anisotropy = 0.5 / eps * np.sum(s ** 2) * g.cell_area
    stray = 0.0
    if params.lam > 0:
        sigma = charge_density(field, background).sigma
        norm, dn = spectral.fractional_norm_and_gradient(sigma, g, -0.5, pad=params.pad,
                                                         gradient=True)
        stray = params.stray_prefactor * norm
        g1, g2 = divergence_adjoint(dn, g)
        grad += params.stray_prefactor * (-s * g1 + c * g2)
    clamp = g.left_band | g.right_band
    grad[clamp] = 0.0
    return EnergyBreakdown(eps, params.lam, float(exchange), float(anisotropy), float(stray)), grad


def energy_gradient(field, background, params):
    return energy_and_gradient(field, background, params)[1]


def reflect_x2(field):
    """Mirror image under ``x2 -> ell - x2`` (``m2`` changes sign)."""
    idx = (-np.arange(field.grid.ny)) % field.grid.ny
    return field.with_theta(np.mod(-field.theta[:, idx], 2 * np.pi))
