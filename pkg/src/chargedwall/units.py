"""Map physical film data to the dimensionless parameters of the strip model.

``d`` is the exchange length, ``w`` the strip width, ``t`` the film
thickness and ``Q`` the quality factor (anisotropy over shape anisotropy).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DimensionlessParameters", "to_dimensionless", "thickness_for_lambda"]


@dataclass(frozen=True)
class DimensionlessParameters:
    epsilon: float
    lam: float
    alpha: float

    def as_dict(self):
        return {"epsilon": self.epsilon, "lambda": self.lam, "alpha": self.alpha}


def _positive(**kw):
    for k, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{k} must be positive and finite, got {v}")


def to_dimensionless(d, w, t, Q):
    """Return ``epsilon = d / (w sqrt Q)``, ``lambda = t |ln eps| / (2 pi d sqrt Q)``
    and the aspect ratio ``alpha = w / t``.

    Examples
    --------
    >>> p = to_dimensionless(d=5e-9, w=1e-6, t=2e-8, Q=1.0)
    >>> round(p.epsilon, 6), round(p.alpha, 1)
    (0.005, 50.0)
    """
    _positive(d=d, w=w, t=t, Q=Q)
    sq = np.sqrt(Q)
    eps = d / (w * sq)
    if eps >= 1:
        raise ValueError(f"epsilon = {eps:g} >= 1; the strip is narrower than the wall")
    lam = t * abs(np.log(eps)) / (2 * np.pi * d * sq)
    return DimensionlessParameters(float(eps), float(lam), float(w / t))


def thickness_for_lambda(lam, d, w, Q):
    """Film thickness giving a prescribed ``lambda`` at fixed ``d, w, Q``."""
    _positive(lam=lam, d=d, w=w, Q=Q)
    eps = d / (w * np.sqrt(Q))
    if eps >= 1:
        raise ValueError(f"epsilon = {eps:g} >= 1")
    return float(2 * np.pi * d * np.sqrt(Q) * lam / abs(np.log(eps)))
