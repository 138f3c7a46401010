"""One-dimensional transition layers.

`WallProfile` is the truncated Neel-type layer used to build recovery
fields and the reference background.  `CutoffProfile` is the logarithmic
cut-off function used in the lower-bound argument for the charged wall.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def gudermann(s):
    """Return ``arcsin(tanh(s))`` in a form that is stable for large ``|s|``."""
    return 2.0 * np.arctan(np.tanh(0.5 * np.asarray(s, dtype=float)))


def layer_phase(t, eps, beta):
    """Phase ``phi`` of the truncated layer, with ``u = sin(phi)``, ``v = cos(phi)``.

    ``phi`` runs from ``-pi/2`` at ``t = -beta`` to ``pi/2`` at ``t = beta``
    and is clamped outside.  No validation; see `WallProfile`.
    """
    t = np.asarray(t, dtype=float)
    phi = 0.5 * np.pi * gudermann(np.clip(t, -beta, beta) / eps) / gudermann(beta / eps)
    return phi


def layer_phase_rate(t, eps, beta):
    """Derivative of `layer_phase` with respect to ``t``."""
    t = np.asarray(t, dtype=float)
    rate = 0.5 * np.pi / (eps * gudermann(beta / eps)) / np.cosh(np.minimum(np.abs(t) / eps, 700.0))
    return np.where(np.abs(t) < beta, rate, 0.0)


@dataclass(frozen=True)
class WallProfile:
    """Truncated transition layer between ``u = -1`` and ``u = +1``.

    Parameters
    ----------
    eps : float
        Core width.
    beta : float
        Truncation half-width; ``u = sign(t)`` for ``|t| >= beta``.

    Notes
    -----
    The layer is ``u = sin(phi)``, ``v = cos(phi) >= 0`` with
    ``phi = (pi/2) arcsin(tanh(t/eps)) / arcsin(tanh(beta/eps))``.  The
    in-plane angle of ``m = (u, v)`` is ``theta = pi/2 - phi``.
    """

    eps: float
    beta: float

    def __post_init__(self):
        if not (self.eps > 0 and self.beta > 0):
            raise ValueError("eps and beta must be positive")
        if not self.eps < self.beta:
            raise ValueError(f"need eps < beta, got eps={self.eps}, beta={self.beta}")

    def phase(self, t):
        return layer_phase(t, self.eps, self.beta)

    def u(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t) >= self.beta, np.sign(t), np.sin(self.phase(t)))

    def v(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t) >= self.beta, 0.0, np.cos(self.phase(t)))

    def angle(self, t):
        return 0.5 * np.pi - self.phase(t)

    def du(self, t):
        return np.cos(self.phase(t)) * layer_phase_rate(t, self.eps, self.beta)

    def dv(self, t):
        return -np.sin(self.phase(t)) * layer_phase_rate(t, self.eps, self.beta)


@dataclass(frozen=True)
class CutoffProfile:
    """Logarithmic cut-off ``eta`` with ``eta = 1`` on ``|t| < eps``.

    Between ``eps`` and ``eps + delta*sqrt(1 - eps**2)`` it decays as
    ``-log(sqrt((|t|-eps)**2/delta**2 + eps**2)) / |log eps|`` and it
    vanishes beyond, where ``delta = |log eps|**(-1/4)``.
    """

    eps: float

    def __post_init__(self):
        if not 0 < self.eps < 0.25:
            raise ValueError(f"need 0 < eps < 1/4, got {self.eps}")

    @property
    def log_scale(self):
        return abs(np.log(self.eps))

    @property
    def delta(self):
        return self.log_scale ** -0.25

    @property
    def support(self):
        return self.eps + self.delta * np.sqrt(1.0 - self.eps ** 2)

    def __call__(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        s = np.maximum(a - self.eps, 0.0)
        val = -0.5 * np.log(s ** 2 / self.delta ** 2 + self.eps ** 2) / self.log_scale
        val = np.where(a < self.eps, 1.0, val)
        return np.where(a < self.support, val, 0.0)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        s = a - self.eps
        d = -s / (s ** 2 + (self.eps * self.delta) ** 2) / self.log_scale
        inside = (a > self.eps) & (a < self.support)
        return np.where(inside, np.sign(t) * d, 0.0)
