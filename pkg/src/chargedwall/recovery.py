"""Recovery fields for polygonal walls and the 1D layer estimates.

A graph wall is rounded at its corners by circular arcs of radius
``2 beta`` (``beta = eps**(5/6)`` by default); the field is the truncated
layer `WallProfile` of the signed distance to the rounded curve.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .energy import EnergyParams, total_energy
from .limit import PolygonalWall, limit_energy, min_clearance
from .profiles import CutoffProfile, WallProfile, gudermann, layer_phase
from .strip import CLAMP, make_admissible_field, make_background

__all__ = [
    "wall_profile", "RoundedTube", "build_recovery_field", "profile_integrals",
    "eta_checks", "recovery_report", "tube_width", "Profile1D", "EtaProfile",
]

Profile1D = WallProfile
EtaProfile = CutoffProfile


def tube_width(eps, exponent=5.0 / 6.0):
    """Default tube half-width ``beta = eps**(5/6)``."""
    return eps ** exponent


def wall_profile(epsilon, beta, t):
    """Return ``(u, v)`` of the truncated layer at ``t``; requires ``0 < eps < beta <= 1``."""
    if not beta <= 1:
        raise ValueError(f"need beta <= 1, got {beta}")
    p = WallProfile(epsilon, beta)
    u, v = p.u(t), p.v(t)
    if u.ndim == 0:
        return float(u), float(v)
    return u, v


# ---------------------------------------------------------------------------
# rounded tube


@dataclass(frozen=True, eq=False)
class RoundedTube:
    """Graph wall with corners replaced by arcs of radius ``2 beta``.

    Pieces are stored for three consecutive periods so that signed distances
    are exact for points in one period.  The signed distance is positive on
    the ``m = +e1`` side (to the right of the upward oriented wall).
    """

    wall: PolygonalWall
    beta: float
    segments: np.ndarray = field(repr=False)   # (k, 2, 2)
    arcs: np.ndarray = field(repr=False)       # (j, 5): cx, cy, start angle, sweep, radius

    @property
    def radius(self):
        return 2.0 * self.beta

    @classmethod
    def build(cls, wall, beta):
        if not beta > 0:
            raise ValueError("beta must be positive")
        r = 2.0 * beta
        v = wall.vertices
        ell = wall.ell
        n = len(v) - 1
        # vertex ring with periodic neighbours
        P = np.vstack([v[:n], v[0] + [0, ell]])
        prev = np.vstack([v[n - 1] - [0, ell], v[:n]])
        nxt = np.vstack([v[1:n + 1], v[1] + [0, ell]])
        din = P - prev
        din /= np.linalg.norm(din, axis=1)[:, None]
        dout = nxt - P
        dout /= np.linalg.norm(dout, axis=1)[:, None]
        cross = din[:, 0] * dout[:, 1] - din[:, 1] * dout[:, 0]
        turn = np.arctan2(cross, np.einsum("ij,ij->i", din, dout))
        turn[np.abs(turn) < 1e-12] = 0.0
        tang = r * np.tan(0.5 * np.abs(turn))
        lengths = wall.lengths
        for i in range(n):
            if tang[i] + tang[i + 1] > lengths[i] * (1 + 1e-12):
                bad = i if tang[i] >= tang[i + 1] else (i + 1) % n
                raise ValueError(
                    f"tube overlap: corner {bad} at ({v[bad][0]:.6g}, {v[bad][1]:.6g}) cannot be "
                    f"rounded with radius {r:.3g} (edge {i} too short); reduce epsilon")
        segs, arcs = [], []
        for i in range(n):
            a = P[i] + tang[i] * dout[i]
            b = P[i + 1] - tang[i + 1] * din[i + 1]
            segs.append((a, b))
            if turn[i] != 0.0:
                side = np.sign(turn[i])
                left = np.array([-din[i, 1], din[i, 0]])
                start = P[i] - tang[i] * din[i]
                c = start + side * r * left
                a0 = np.arctan2(*(start - c)[::-1])
                arcs.append((c[0], c[1], a0, turn[i], r))
        # collinear vertices are not corners; merge them before the clearance check
        keep = np.flatnonzero(turn[:n] != 0.0)
        if keep.size == 0:
            keep = np.array([0])
        ring = P[keep]
        chain = np.vstack([ring, ring[0] + [0, ell]])
        gap = min_clearance([chain], ell, reach=2 * r)
        if gap < 2 * r:
            raise ValueError(f"tube overlap: non-adjacent edges are {gap:.3g} apart, "
                             f"below the tube diameter {2 * r:.3g}; reduce epsilon")
        segs = np.array(segs)
        arcs = np.array(arcs).reshape(-1, 5)
        all_segs = np.concatenate([segs + [0, s * ell] for s in (-1, 0, 1)])
        all_arcs = np.concatenate([arcs + [0, s * ell, 0, 0, 0] for s in (-1, 0, 1)])
        return cls(wall, beta, all_segs, all_arcs)

    def signed_distance(self, x1, x2):
        """Signed distance to the rounded wall at points ``(x1, x2)``."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        best = np.full(np.broadcast(x1, x2).shape, np.inf)
        signed = np.zeros_like(best)
        for (a, b) in self.segments:
            e = b - a
            L = np.hypot(*e)
            e = e / L
            rx, ry = x1 - a[0], x2 - a[1]
            s = np.clip(rx * e[0] + ry * e[1], 0.0, L)
            d = np.hypot(rx - s * e[0], ry - s * e[1])
            side = -(e[0] * ry - e[1] * rx)
            val = np.where(side >= 0, d, -d)
            upd = d < best
            best = np.where(upd, d, best)
            signed = np.where(upd, val, signed)
        for cx, cy, a0, sweep, r in self.arcs:
            rx, ry = x1 - cx, x2 - cy
            rho = np.hypot(rx, ry)
            rel = np.mod((np.arctan2(ry, rx) - a0) * np.sign(sweep), 2 * np.pi)
            inside = rel <= abs(sweep)
            d = np.where(inside, np.abs(rho - r), np.inf)
            val = (rho - r) if sweep > 0 else (r - rho)
            upd = d < best
            best = np.where(upd, d, best)
            signed = np.where(upd, val, signed)
        return signed


def build_recovery_field(wall, epsilon, grid, lam=None, beta=None, chunk=1 << 20):
    """Angle field of the recovery construction on ``grid``.

    Parameters
    ----------
    wall : PolygonalWall
        Graph wall inside ``|x1| < 1``; for ``lam > 1`` every edge must
        satisfy ``|n1| <= lam^(-1/2)`` (see `zigzag_refine`).
    epsilon : float
        Layer core width.
    grid : StripGrid
        Must have ``ell == wall.ell``.
    beta : float, optional
        Tube half-width, default ``epsilon**(5/6)``.
    """
    if not isinstance(wall, PolygonalWall):
        raise ValueError("the recovery construction needs a graph wall (PolygonalWall)")
    if not np.isclose(grid.ell, wall.ell):
        raise ValueError("wall period and grid period differ")
    if beta is None:
        beta = tube_width(epsilon)
    if not 0 < epsilon < beta <= 1:
        raise ValueError(f"need 0 < epsilon < beta <= 1, got {epsilon}, {beta}")
    if lam is not None and lam > 1:
        n1 = np.abs(wall.normals[:, 0])
        if np.any(n1 > lam ** -0.5 * (1 + 1e-9)):
            raise ValueError("edges steeper than |n1| = lam^(-1/2); apply zigzag_refine first")
    if np.abs(wall.vertices[:, 0]).max() + beta >= CLAMP:
        raise ValueError("wall tube must stay inside |x1| < 1")
    tube = RoundedTube.build(wall, beta)
    theta = np.zeros(grid.shape)
    theta[grid.x1 < 0] = np.pi
    rows = np.flatnonzero(np.abs(grid.x1) < CLAMP)
    x2 = grid.x2
    step = max(1, chunk // grid.ny)
    for lo in range(0, len(rows), step):
        rr = rows[lo:lo + step]
        t = tube.signed_distance(grid.x1[rr][:, None], x2[None, :])
        theta[rr] = 0.5 * np.pi - layer_phase(t, epsilon, beta)
    return make_admissible_field(grid, theta)


def recovery_report(wall, lam, epsilon, grid, beta=None, background=None, pad=None):
    """Energy of the recovery field against the line energy of ``wall``.

    Returns a JSON-ready dict ``{epsilon, lambda, E0, E_eps_breakdown, ratio}``.
    """
    fld = build_recovery_field(wall, epsilon, grid, lam=lam, beta=beta)
    if background is None:
        background = make_background(grid)
    params = EnergyParams(epsilon, lam) if pad is None else EnergyParams(epsilon, lam, pad)
    br = total_energy(fld, background, params)
    e0 = limit_energy(wall, lam)
    return {"epsilon": epsilon, "lambda": lam, "E0": e0,
            "E_eps_breakdown": br.as_dict(), "ratio": br.total / e0}


# ---------------------------------------------------------------------------
# 1D quadratures


def _breaks(lo, hi, scale):
    """Geometric breakpoints ``+-scale * 2**k`` inside ``(lo, hi)``."""
    pts = [0.0]
    s = scale
    while s < max(abs(lo), abs(hi)):
        pts += [s, -s]
        s *= 4.0
    return sorted(p for p in pts if lo < p < hi)


@dataclass
class _Quad:
    epsrel: float = 1e-9
    epsabs: float = 1e-12
    err: float = 0.0

    def __call__(self, f, a, b, points=None, **kw):
        if points:
            edges = [a] + list(points) + [b]
            total = 0.0
            for lo, hi in zip(edges[:-1], edges[1:]):
                total += self(f, lo, hi, **kw)
            return total
        val, err, *rest = integrate.quad(f, a, b, epsabs=self.epsabs, epsrel=self.epsrel,
                                         limit=400, full_output=1, **kw)
        if len(rest) > 1 and "roundoff" not in rest[1] and rest[1]:
            raise RuntimeError(f"quadrature did not converge on [{a}, {b}]: {rest[1]}")
        self.err += err
        return val


def profile_integrals(epsilon, beta, R=1.0, far=40.0):
    """Quadratures of the four 1D layer integrals.

    All integrals are evaluated in the stretched variable ``tau = t / eps``.
    Beyond ``|tau| = T = min(beta/eps, far)`` the layer equals ``sign(tau)``
    to machine precision, so the tails of (ii) and (iv) are done in closed form.

    Returns
    -------
    dict
        ``local`` (i), ``h_half`` (ii), ``log_u`` (iii), ``v_terms`` (iv),
        the reference logarithms, ratios, margins and an error estimate.
    """
    WallProfile(epsilon, beta)
    if R < beta:
        raise ValueError("need R >= beta")
    B = beta / epsilon
    T = min(B, far)
    Lam = R / epsilon
    gB = float(gudermann(B))

    # scalar closures on the math module; quad calls them ~1e5 times
    c0 = 0.5 * math.pi / gB

    def phi(s):
        s = min(max(s, -B), B)
        return 2.0 * c0 * math.atan(math.tanh(0.5 * s))

    def dphi(s):
        return c0 / math.cosh(min(abs(s), 700.0)) if abs(s) < B else 0.0

    def U(s):
        return math.sin(phi(s))

    def V(s):
        return math.cos(phi(s))

    def dU(s):
        return math.cos(phi(s)) * dphi(s)

    def dV(s):
        return -math.sin(phi(s)) * dphi(s)

    q = _Quad()
    pts = _breaks(-T, T, 1.0)

    # (i) local energy, even integrand
    local = q(lambda s: 0.5 * (dphi(s) ** 2 + math.cos(phi(s)) ** 2), 0.0, B,
              points=[p for p in _breaks(0, B, 1.0) if p > 0]) * 2.0

    def quotient(F, dF, s, r):
        d = s - r
        if abs(d) < 1e-7:
            return dF(s) ** 2
        return ((F(s) - F(r)) / d) ** 2

    def box(F, dF):
        # int int over [-T, T]^2, symmetric in (s, r)
        inner = lambda s: q(lambda r: quotient(F, dF, s, r), -T, s,
                            points=[p for p in pts if p < s])
        return 2.0 * q(inner, -T, T, points=pts)

    # (ii) half the H^(1/2) seminorm of u on [-R, R]
    mixed = q(lambda s: (1.0 - U(s)) ** 2 * (1.0 / (T - s) - 1.0 / (Lam - s)) if s < T else 0.0,
              -T, T, points=pts)
    outer = 8.0 * np.log((T + Lam) ** 2 / (4.0 * T * Lam))
    h_half = 0.5 * (box(U, dU) + 4.0 * mixed + outer)

    # (iii) and the log part of (iv): int int F'(s) F'(r) log(1/|s - r|)
    def log_pair(dF):
        def inner(s):
            left = q(dF, -T, s, weight="alg-logb", wvar=(0, 0)) if s > -T else 0.0
            right = q(dF, s, T, weight="alg-loga", wvar=(0, 0)) if s < T else 0.0
            return -(left + right)
        return q(lambda s: dF(s) * inner(s), -T, T, points=pts)

    log_u = log_pair(dU) + 4.0 * np.log(1.0 / epsilon)
    v_mixed = q(lambda s: V(s) ** 2 * (1 / (T - s) - 1 / (Lam - s) + 1 / (T + s) - 1 / (Lam + s))
                if abs(s) < T else 0.0, -T, T, points=pts)
    v_terms = box(V, dV) + 2.0 * v_mixed + log_pair(dV)

    ref_ii = np.log(1.0 + R / epsilon)
    ref_iii = np.log(1.0 / epsilon + 1.0 / beta)
    return {
        "epsilon": epsilon, "beta": beta, "R": R,
        "local": local, "local_lower_bound": 2.0,
        "h_half": h_half, "h_half_log": ref_ii, "h_half_ratio": h_half / ref_ii,
        "h_half_margin": h_half - 4.0 * ref_ii,
        "log_u": log_u, "log_u_log": ref_iii, "log_u_ratio": log_u / ref_iii,
        "log_u_margin": log_u - 4.0 * ref_iii,
        "v_terms": v_terms,
        "abs_error": q.err,
    }


def eta_checks(epsilon):
    """Quadratures for the logarithmic cut-off ``eta``.

    Returns
    -------
    dict
        ``weighted`` is ``pi int_0^1 t |eta'|^2``, ``weighted_scaled`` is
        ``|log eps| int_0^1 t |eta'|^2`` (tends to 1), ``mass`` is
        ``int eta^2 / delta + eps delta int |eta'|^2`` and ``mass_scaled``
        is ``|log eps|^2`` times ``mass``.
    """
    eta = CutoffProfile(epsilon)
    L, d = eta.log_scale, eta.delta
    a = epsilon * d
    top = eta.support - epsilon
    pts = _breaks(0, top, a)
    q = _Quad()
    # substitute s = t - eps on the decaying part
    w = q(lambda s: (s + epsilon) * s ** 2 / (s ** 2 + a ** 2) ** 2, 0.0, top, points=pts) / L ** 2
    grad2 = 2.0 * q(lambda s: s ** 2 / (s ** 2 + a ** 2) ** 2, 0.0, top, points=pts) / L ** 2
    mass_eta = 2.0 * (epsilon + q(lambda s: float(eta(s + epsilon)) ** 2, 0.0, top, points=pts))
    mass = mass_eta / d + epsilon * d * grad2
    return {
        "epsilon": epsilon, "delta": d, "log_scale": L,
        "weighted": np.pi * w, "weighted_bound_leading": np.pi / L,
        "weighted_scaled": L * w,
        "mass": mass, "mass_scaled": L ** 2 * mass,
        "support_value": float(eta(2 * d)),
        "abs_error": q.err,
    }


def report_json(report):
    return json.dumps(report, indent=2)
