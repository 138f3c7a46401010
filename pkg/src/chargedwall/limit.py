"""Sharp-interface line energy of polygonal walls.

A wall separating ``m = -e1`` (left) from ``m = +e1`` (right) costs
``2 f(sqrt(lam) |n1|)`` per unit length, with

    f(s) = 1 + s^2   (s <= 1),     f(s) = 2 s   (s > 1),

the lower convex envelope ``inf_{a >= 1} (a + s^2 / a)``.  Walls steeper than
the critical normal ``|n1| = lam^(-1/2)`` can be replaced by zigzags of equal
energy.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "line_density_f", "ground_state_energy", "PolygonalWall", "PolygonalSet",
    "make_wall", "straight_wall", "limit_energy", "limit_report", "zigzag_refine",
    "classify_minimizer", "min_clearance", "write_wall_csv", "read_wall_csv",
]


def line_density_f(s):
    """``f(s) = 1 + s^2`` for ``s <= 1`` and ``2 s`` beyond; ``s >= 0``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("line_density_f expects s >= 0 (pass |n1|)")
    out = np.where(s <= 1.0, 1.0 + s * s, 2.0 * s)
    return float(out) if out.ndim == 0 else out


def ground_state_energy(lam, ell):
    """Minimal line energy ``2 ell (1 + lam)`` for ``lam <= 1``, ``4 sqrt(lam) ell`` beyond."""
    if lam < 0 or ell <= 0:
        raise ValueError("need lam >= 0 and ell > 0")
    return 2.0 * ell * (1.0 + lam) if lam <= 1 else 4.0 * np.sqrt(lam) * ell


def _edge_geometry(chain):
    d = np.diff(chain, axis=0)
    length = np.hypot(d[:, 0], d[:, 1])
    if np.any(length <= 0):
        raise ValueError("polygon has a zero-length edge")
    normal = np.column_stack([-d[:, 1], d[:, 0]]) / length[:, None]
    return length, normal


@dataclass(frozen=True, eq=False)
class PolygonalWall:
    """Graph wall ``x1 = gamma(x2)`` on one period ``[0, ell]``.

    ``vertices`` has shape ``(n + 1, 2)``: ``x2`` increases strictly from 0 to
    ``ell`` and the first and last ``x1`` agree.  Edge normals
    ``n = (-dx2, dx1) / len`` point into the ``m = -e1`` side, so ``n1 < 0``.
    Use `make_wall` to subdivide edges longer than ``ell / 2``.
    """

    vertices: np.ndarray
    ell: float

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
            raise ValueError("vertices must be an (n, 2) array with n >= 2")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        if v[0, 1] != 0.0 or not np.isclose(v[-1, 1], self.ell, rtol=0, atol=1e-12 * self.ell):
            raise ValueError("x2 must run from 0 to ell")
        if np.any(np.diff(v[:, 1]) <= 0):
            raise ValueError("x2 must increase strictly (graph form)")
        if v[0, 0] != v[-1, 0]:
            raise ValueError("first and last x1 must agree (periodic closure)")
        length, _ = _edge_geometry(v)
        if np.any(length > 0.5 * self.ell * (1 + 1e-12)):
            raise ValueError("edges must be no longer than ell/2; use make_wall to subdivide")
        v[-1, 1] = self.ell
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def chains(self):
        return [self.vertices]

    @property
    def lengths(self):
        return _edge_geometry(self.vertices)[0]

    @property
    def normals(self):
        return _edge_geometry(self.vertices)[1]

    def flux(self):
        """``-sum n1 len``; equals ``ell`` for every graph wall."""
        return float(-np.sum(self.normals[:, 0] * self.lengths))


@dataclass(frozen=True, eq=False)
class PolygonalSet:
    """Boundary of a general polygonal set as a list of closed chains.

    Each chain is an ``(n + 1, 2)`` array with the last vertex equal to the
    first.  Only ``|n1|`` enters the energy, so orientation is free.
    """

    chains: list

    def __post_init__(self):
        out = []
        for c in self.chains:
            c = np.array(c, dtype=float)
            if c.ndim != 2 or c.shape[1] != 2 or len(c) < 4:
                raise ValueError("each chain needs at least three distinct vertices")
            if not np.allclose(c[0], c[-1]):
                c = np.vstack([c, c[:1]])
            _edge_geometry(c)
            out.append(c)
        object.__setattr__(self, "chains", out)

    @property
    def lengths(self):
        return np.concatenate([_edge_geometry(c)[0] for c in self.chains])

    @property
    def normals(self):
        return np.vstack([_edge_geometry(c)[1] for c in self.chains])


def make_wall(points, ell):
    """Graph wall through ``points``, closed periodically and subdivided.

    ``points`` lists ``(x1, x2)`` with ``x2`` increasing from 0; the closing
    vertex ``(x1_0, ell)`` is appended if missing.  Edges longer than
    ``ell / 2`` are split into equal parts.
    """
    p = np.array(points, dtype=float)
    if not np.isclose(p[-1, 1], ell):
        p = np.vstack([p, [p[0, 0], ell]])
    out = [p[0]]
    for a, b in zip(p[:-1], p[1:]):
        n = int(np.ceil(np.hypot(*(b - a)) / (0.5 * ell) - 1e-12))
        for j in range(1, max(n, 1) + 1):
            out.append(a + (b - a) * j / max(n, 1))
    out = np.array(out)
    out[-1] = [p[0, 0], ell]
    return PolygonalWall(out, float(ell))


def straight_wall(ell, x1=0.0):
    return make_wall([(x1, 0.0), (x1, ell)], ell)


def limit_energy(wall, lam):
    """``sum 2 f(sqrt(lam) |n1|) len`` over all edges."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    s = np.sqrt(lam) * np.abs(wall.normals[:, 0])
    return float(np.sum(2.0 * line_density_f(s) * wall.lengths))


def limit_report(wall, lam):
    """JSON-ready dictionary ``{lambda, energy, per_edge}``."""
    per_edge = []
    for chain in wall.chains:
        length, normal = _edge_geometry(chain)
        e = 2.0 * line_density_f(np.sqrt(lam) * np.abs(normal[:, 0])) * length
        for i in range(len(length)):
            per_edge.append({"start": chain[i].tolist(), "end": chain[i + 1].tolist(),
                             "length": float(length[i]), "n1": float(normal[i, 0]),
                             "n2": float(normal[i, 1]), "energy": float(e[i])})
    return {"lambda": float(lam), "energy": limit_energy(wall, lam), "per_edge": per_edge}


def _refine_chain(chain, cstar, k):
    length, normal = _edge_geometry(chain)
    sstar = np.sqrt(1.0 - cstar ** 2)
    out = [chain[0]]
    for i in range(len(length)):
        n1, n2 = normal[i]
        if abs(n1) <= cstar:
            out.append(chain[i + 1])
            continue
        s1 = np.sign(n1)
        shares = (0.5 * (abs(n1) / cstar + n2 / sstar), 0.5 * (abs(n1) / cstar - n2 / sstar))
        steps = []
        for share, sgn in zip(shares, (1.0, -1.0)):
            nn = np.array([s1 * cstar, sgn * sstar])
            steps.append(share * length[i] / k * np.array([nn[1], -nn[0]]))
        p = chain[i].copy()
        for j in range(k):
            p = p + steps[0]
            out.append(p.copy())
            if j == k - 1:
                out.append(chain[i + 1].copy())
            else:
                p = p + steps[1]
                out.append(p.copy())
    return np.array(out)


def _segments(chains):
    segs = [np.stack([c[:-1], c[1:]], axis=1) for c in chains]
    owner = [np.full(len(s), i) for i, s in enumerate(segs)]
    index = [np.arange(len(s)) for s in segs]
    return np.concatenate(segs), np.concatenate(owner), np.concatenate(index)


def _seg_seg_distance(P, Q):
    """Distances between paired segments ``P[i]`` and ``Q[i]``."""
    def point_seg(x, a, b):
        ab = b - a
        t = np.clip(np.einsum("...k,...k", x - a, ab) / np.maximum(np.einsum("...k,...k", ab, ab), 1e-300), 0, 1)
        return np.linalg.norm(x - (a + t[..., None] * ab), axis=-1)

    a, b = P[:, 0], P[:, 1]
    c, d = Q[:, 0], Q[:, 1]
    dist = np.minimum.reduce([point_seg(a, c, d), point_seg(b, c, d),
                              point_seg(c, a, b), point_seg(d, a, b)])

    def orient(p, q, r):
        return np.sign((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
                       - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))
    crossing = (orient(a, b, c) * orient(a, b, d) < 0) & (orient(c, d, a) * orient(c, d, b) < 0)
    return np.where(crossing, 0.0, dist)


def min_clearance(chains, period=None, reach=None):
    """Smallest distance between non-adjacent edges of the given chains.

    ``period`` adds copies shifted by ``+-period`` in ``x2`` (periodic
    walls), across which the first and last edge of a chain are adjacent.
    Pairs farther apart than ``reach`` are not examined; the result is then
    ``min(true clearance, reach)``.
    """
    segs, owner, index = _segments(chains)
    if reach is None:
        # grow the search radius until a pair is found inside it
        diam = float(np.ptp(segs.reshape(-1, 2), axis=0).max())
        r = float(np.median(np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)))
        while True:
            best = min_clearance(chains, period, min(r, diam))
            if best < r or r >= diam:
                return best
            r *= 4.0
    counts = np.array([len(c) - 1 for c in chains])
    length = np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)
    if reach <= 0:
        return 0.0
    # candidate search on pieces no longer than reach, so that long edges
    # do not inflate the query radius
    npiece = np.maximum(1, np.ceil(length / reach).astype(int))
    parent = np.repeat(np.arange(len(segs)), npiece)
    frac = (np.arange(parent.size) - np.repeat(np.cumsum(npiece) - npiece, npiece) + 0.5) / npiece[parent]
    centre = segs[parent, 0] + frac[:, None] * (segs[parent, 1] - segs[parent, 0])
    radius = 2.0 * reach
    best = reach
    tree = cKDTree(centre)
    for shift in [0.0] + ([] if period is None else [period, -period]):
        if shift == 0.0:
            pp = tree.query_pairs(radius, output_type="ndarray")
            ii, jj = parent[pp[:, 0]], parent[pp[:, 1]]
        else:
            hits = tree.query_ball_point(centre - np.array([0.0, shift]), r=radius)
            ii = np.repeat(parent, [len(h) for h in hits])
            jj = parent[np.fromiter((j for h in hits for j in h), dtype=int, count=len(ii))]
        if not len(ii):
            continue
        key = np.unique(np.stack([ii, jj], axis=1), axis=0)
        ii, jj = key[:, 0], key[:, 1]
        same = owner[ii] == owner[jj]
        m = counts[owner[ii]]
        di = np.abs(index[ii] - index[jj])
        if shift == 0.0:
            adjacent = same & ((di <= 1) | (di == m - 1))
        else:
            adjacent = same & (di == m - 1)
        ii, jj = ii[~adjacent], jj[~adjacent]
        if len(ii):
            d = _seg_seg_distance(segs[ii], segs[jj] + np.array([0.0, shift]))
            best = min(best, float(d.min()))
    return best


def zigzag_refine(wall, lam, k=None, clearance=1e-3):
    """Replace every edge steeper than ``|n1| = lam^(-1/2)`` by a ``k``-tooth zigzag.

    Each such edge of length ``L`` and normal ``n`` becomes ``2k`` segments
    with normals ``(sign(n1) c, +-sqrt(1 - c^2))``, ``c = lam^(-1/2)``, of total
    lengths ``a_+- L`` where ``a_+- = (|n1|/c +- n2/sqrt(1-c^2)) / 2``.  The
    energy is unchanged.

    Parameters
    ----------
    wall : PolygonalWall or PolygonalSet
    lam : float
        Must exceed 1.
    k : int, optional
        Teeth per edge.  By default the largest ``k`` whose refinement keeps
        non-adjacent edges at least ``clearance * ell`` apart.
    clearance : float
        Relative clearance margin.

    Returns
    -------
    Same type as ``wall``.
    """
    if not lam > 1:
        raise ValueError(f"zigzag refinement needs lambda > 1, got {lam}")
    cstar = 1.0 / np.sqrt(lam)
    if isinstance(wall, PolygonalWall):
        scale, period = wall.ell, wall.ell
    else:
        allv = np.vstack(wall.chains)
        scale, period = float(np.ptp(allv, axis=0).max()), None
    margin = clearance * scale

    def build(kk):
        chains = [_refine_chain(c, cstar, kk) for c in wall.chains]
        if isinstance(wall, PolygonalWall):
            # teeth can be longer than the edge they replace; split collinearly
            return make_wall(chains[0], wall.ell)
        return PolygonalSet(chains)

    if k is None:
        steep = np.abs(wall.normals[:, 0]) > cstar
        if not np.any(steep):
            return wall
        lo, hi = 1, max(1, int(wall.lengths[steep].max() / margin))
        if min_clearance(build(lo).chains, period, 2 * margin) < margin:
            raise ValueError("no tooth count keeps the requested clearance")
        while hi > lo:
            mid = (lo + hi + 1) // 2
            if min_clearance(build(mid).chains, period, 2 * margin) >= margin:
                lo = mid
            else:
                hi = mid - 1
        return build(lo)
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    out = build(k)
    gap = min_clearance(out.chains, period, 2 * margin)
    if gap < margin:
        raise ValueError(f"k={k} violates the non-intersection bound: clearance {gap:.3e} "
                         f"< margin {margin:.3e}")
    return out


def classify_minimizer(wall, lam, rtol=1e-12):
    """Check the global-minimizer band ``min(1, lam^(-1/2)) <= -n1 <= 1``.

    Returns
    -------
    ok : bool
    info : dict
        ``energy``, ``ground_state``, relative ``gap`` and the indices of
        edges outside the band (or a ``reason`` for non-graph input).
    """
    if not isinstance(wall, PolygonalWall):
        return False, {"reason": "classification requires a graph wall"}
    lo = min(1.0, lam ** -0.5) if lam > 0 else 1.0
    m = -wall.normals[:, 0]
    bad = np.flatnonzero((m < lo * (1 - rtol)) | (m > 1 + rtol))
    e0 = limit_energy(wall, lam)
    eg = ground_state_energy(lam, wall.ell)
    info = {"energy": e0, "ground_state": eg, "gap": (e0 - eg) / eg,
            "lower_band": lo, "violations": bad.tolist()}
    return len(bad) == 0, info


def write_wall_csv(path, wall):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2"])
        for x1, x2 in wall.vertices:
            w.writerow([repr(float(x1)), repr(float(x2))])


def read_wall_csv(path, ell):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PolygonalWall(data, ell)


def report_json(wall, lam):
    return json.dumps(limit_report(wall, lam), indent=2)
