"""Distance level sets of polygonal regions.

For a region bounded by polygonal loops, ``d`` is the distance to the
boundary.  This module measures the level curves ``{d = t}`` exactly,
counts the topology of the neighbourhoods ``{d < t}``, and splits a region
into a part whose level curves are at most twice as long as its boundary
plus a remainder made of short loops.

Level curves are computed from the arrangement of the open edge
rectangles (half width ``t``) and vertex disks (radius ``t``): the level
set is the part of their boundaries not strictly inside any other piece.
Boundary pieces shared by two primitives (fronts meeting tangentially) are
counted once from each side, which is the metric-completion convention.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.spatial import cKDTree
from shapely.geometry import LinearRing, MultiLineString, MultiPolygon, Point, Polygon

from .limit import _seg_seg_distance

__all__ = [
    "PolygonalRegion", "LevelSetDecomposition", "LocalDecomposition",
    "MergingTimeWarning", "LevelSetError", "as_segments", "offset_length",
    "raster_offset_length", "merge_times", "neighborhood_euler",
    "decompose_global", "decompose_local", "random_star_polygon", "random_region",
    "boundary_length_in_ball", "write_region_csv", "read_region_csv", "disk_polygon",
]

TWO_PI = 2 * np.pi


class MergingTimeWarning(RuntimeWarning):
    """Raised when ``t`` sits on a merging time and had to be nudged."""


class LevelSetError(RuntimeError):
    """A decomposition failed one of its numerical postconditions."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


# ---------------------------------------------------------------- regions

def _open_loop(coords):
    c = np.asarray(coords, dtype=float)
    if len(c) > 1 and np.array_equal(c[0], c[-1]):
        c = c[:-1]
    return c


def _loop_segments(loop):
    return np.stack([loop, np.roll(loop, -1, axis=0)], axis=1)


@dataclass(frozen=True, eq=False)
class PolygonalRegion:
    """Bounded open set whose boundary is a family of disjoint simple loops.

    ``loops[k]`` is an ``(n_k, 2)`` vertex array (not repeated at the end).
    Nesting is derived from containment: ``depth[k]`` counts the loops that
    enclose loop ``k``; even depth bounds a component from outside, odd
    depth bounds a hole.
    """

    loops: tuple
    depth: tuple = field(init=False)
    parents: tuple = field(init=False)

    def __post_init__(self):
        loops = tuple(_open_loop(c) for c in self.loops)
        if not loops:
            raise ValueError("a region needs at least one loop")
        rings = []
        for k, c in enumerate(loops):
            if c.ndim != 2 or c.shape[1] != 2 or len(c) < 3:
                raise ValueError(f"loop {k} needs at least 3 vertices")
            if not np.all(np.isfinite(c)):
                raise ValueError(f"loop {k} has non-finite vertices")
            if np.any(np.linalg.norm(np.diff(np.vstack([c, c[:1]]), axis=0), axis=1) == 0):
                raise ValueError(f"loop {k} has a zero-length edge")
            ring = LinearRing(c)
            if not ring.is_simple:
                raise ValueError(f"loop {k} is not simple")
            rings.append(ring)
        n = len(loops)
        polys = [Polygon(r) for r in rings]
        inside = np.zeros((n, n), dtype=bool)      # inside[i, j]: loop i lies in G_j
        for i in range(n):
            for j in range(n):
                if i != j:
                    if rings[i].distance(rings[j]) == 0:
                        raise ValueError(f"loops {i} and {j} intersect")
                    inside[i, j] = polys[j].contains(Point(loops[i][0]))
        depth = inside.sum(axis=1)
        parents = []
        for i in range(n):
            enc = np.flatnonzero(inside[i])
            parents.append(int(enc[np.argmax(depth[enc])]) if enc.size else -1)
        object.__setattr__(self, "loops", loops)
        object.__setattr__(self, "depth", tuple(int(d) for d in depth))
        object.__setattr__(self, "parents", tuple(parents))

    @classmethod
    def from_geometry(cls, geom):
        """Build from a shapely ``Polygon`` or ``MultiPolygon``."""
        polys = getattr(geom, "geoms", [geom])
        loops = []
        for p in polys:
            if p.is_empty:
                continue
            loops.append(np.asarray(p.exterior.coords))
            loops.extend(np.asarray(r.coords) for r in p.interiors)
        return cls(tuple(loops))

    def __len__(self):
        return len(self.loops)

    @property
    def is_hole(self):
        return np.array([d % 2 == 1 for d in self.depth])

    @property
    def lengths(self):
        return np.array([LinearRing(c).length for c in self.loops])

    @property
    def perimeter(self):
        return float(self.lengths.sum())

    def ring(self, k):
        return LinearRing(self.loops[k])

    def interior(self, k):
        """Simply connected domain ``G_k`` bounded by loop ``k``."""
        return Polygon(self.loops[k])

    def encloses(self, outer, inner):
        k = self.parents[inner]
        while k >= 0:
            if k == outer:
                return True
            k = self.parents[k]
        return False

    @property
    def geometry(self):
        """The region as a shapely geometry (even-odd rule over the loops)."""
        return _xor_all(self.interior(k) for k in range(len(self)))

    def segments(self, indices=None):
        idx = range(len(self)) if indices is None else indices
        parts = [_loop_segments(self.loops[k]) for k in idx]
        return np.concatenate(parts) if parts else np.zeros((0, 2, 2))

    def loop_distances(self):
        n = len(self)
        D = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                D[i, j] = D[j, i] = self.ring(i).distance(self.ring(j))
        return D

    def jittered(self, seed=0, scale=1e-9):
        """Copy with coordinates perturbed by ``scale`` (seeded)."""
        rng = np.random.default_rng(seed)
        return PolygonalRegion(tuple(c + scale * rng.uniform(-1, 1, c.shape) for c in self.loops))


def _xor_all(polys):
    out = Polygon()
    for p in polys:
        out = out.symmetric_difference(p)
    return out


def _generic(region, seed=0, rtol=1e-12):
    """Jitter ties in the pairwise loop distances away."""
    if len(region) < 2:
        return region
    for attempt in range(8):
        D = region.loop_distances()
        d = np.sort(D[np.triu_indices(len(region), 1)])
        if d.size < 2 or np.all(np.diff(d) > rtol * max(d[-1], 1.0)):
            return region
        region = region.jittered(seed + attempt)
    return region


def random_star_polygon(rng, n, center=(0.0, 0.0), radius=1.0, spread=0.5):
    """Random simple polygon, star shaped about ``center``.

    Angles are sorted uniform draws (gaps bounded below and by pi); radii are drawn
    from ``radius * [1 - spread, 1]``.
    """
    while True:
        ang = np.sort(rng.uniform(0, TWO_PI, n))
        gaps = np.diff(np.concatenate([ang, ang[:1] + TWO_PI]))
        if gaps.min() > 0.1 * TWO_PI / n and gaps.max() < 0.9 * np.pi:
            break
    r = radius * rng.uniform(1 - spread, 1, n)
    c = np.asarray(center, dtype=float)
    return c + np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)


def random_region(rng, max_islands=6):
    """Star-shaped outer loop of radius 1.5 plus up to ``max_islands`` small stars.

    Small stars land inside the outer loop (holes), outside it (islands)
    or inside each other; all loops keep a gap of at least 0.02.
    """
    loops = [random_star_polygon(rng, int(rng.integers(5, 12)), (0.0, 0.0), 1.5, 0.3)]
    outer = Polygon(loops[0]).exterior
    placed = []
    for _ in range(int(rng.integers(1, max_islands + 1))):
        for _ in range(50):
            c = rng.uniform(-2.2, 2.2, 2)
            r = rng.uniform(0.03, 0.35)
            P = random_star_polygon(rng, int(rng.integers(3, 9)), c, r, 0.4)
            poly = Polygon(P)
            if poly.distance(outer) > 0.02 and all(poly.distance(q) > 0.02 for q in placed):
                placed.append(poly)
                loops.append(P)
                break
    return PolygonalRegion(tuple(loops))


def disk_polygon(center, radius, n=512):
    """Inscribed regular ``n``-gon with a vertex at angle 0."""
    phi = TWO_PI * np.arange(n) / n
    c = np.asarray(center, dtype=float)
    return Polygon(c + radius * np.stack([np.cos(phi), np.sin(phi)], axis=1))


def as_segments(obj):
    """Segment soup ``(n, 2, 2)`` from a region, shapely geometry or array."""
    if isinstance(obj, PolygonalRegion):
        return obj.segments()
    if isinstance(obj, np.ndarray) or isinstance(obj, (list, tuple)):
        s = np.asarray(obj, dtype=float)
        return s.reshape(-1, 2, 2)
    geom = obj.boundary if obj.geom_type in ("Polygon", "MultiPolygon") else obj
    parts = []
    for g in getattr(geom, "geoms", [geom]):
        if g.is_empty:
            continue
        c = np.asarray(g.coords)
        if len(c) >= 2:
            parts.append(np.stack([c[:-1], c[1:]], axis=1))
    return np.concatenate(parts) if parts else np.zeros((0, 2, 2))


# ---------------------------------------------------------- offset lengths

def _ranges(starts, counts):
    total = int(counts.sum())
    offs = np.repeat(np.cumsum(counts) - counts, counts)
    return np.repeat(starts, counts) + np.arange(total) - offs


def _pairs(tree, points, radius):
    """Flattened ``(owner, neighbour)`` index pairs from a ball query."""
    if tree is None or len(points) == 0:
        return np.zeros(0, int), np.zeros(0, int)
    lists = tree.query_ball_point(points, radius)
    counts = np.array([len(x) for x in lists])
    owner = np.repeat(np.arange(len(points)), counts)
    nb = np.fromiter((j for x in lists for j in x), dtype=int, count=int(counts.sum()))
    return owner, nb


class _Arrangement:
    """Edge rectangles and vertex disks of half width ``t``."""

    def __init__(self, segs, t):
        a, b = segs[:, 0], segs[:, 1]
        d = b - a
        L = np.hypot(d[:, 0], d[:, 1])
        if np.any(L == 0):
            raise ValueError("degenerate offset: the boundary has a zero-length edge")
        self.a, self.b, self.L, self.t = a, b, L, t
        self.e = d / L[:, None]
        self.n = np.stack([-self.e[:, 1], self.e[:, 0]], axis=1)
        self.mid = 0.5 * (a + b)
        self.verts = np.unique(segs.reshape(-1, 2), axis=0)
        scale = float(np.abs(segs).max()) if segs.size else 1.0
        self.tol = 1e-11 * (1.0 + scale + t)
        self.seg_tree = cKDTree(self.mid)
        self.vert_tree = cKDTree(self.verts)

    def covered(self, P, owner, rect, disk):
        """For points ``P`` flag those strictly inside a listed primitive.

        ``rect`` and ``disk`` are ``(point, primitive)`` pair lists.
        """
        hit = np.zeros(len(P), dtype=bool)
        t, tol = self.t, self.tol
        if rect[0].size:
            p, j = rect
            q = P[p] - self.a[j]
            s = np.einsum("ij,ij->i", q, self.e[j])
            r = np.einsum("ij,ij->i", q, self.n[j])
            ins = (s > tol) & (s < self.L[j] - tol) & (np.abs(r) < t - tol)
            hit |= np.bincount(p[ins], minlength=len(P)) > 0
        if disk[0].size:
            p, k = disk
            q = P[p] - self.verts[k]
            ins = np.einsum("ij,ij->i", q, q) < (t - tol) ** 2
            hit |= np.bincount(p[ins], minlength=len(P)) > 0
        return hit


def _line_roots(p0, d, centers, radius):
    """Parameters where ``p0 + s d`` meets circles; NaN when it misses."""
    q = p0 - centers
    A = np.einsum("ij,ij->i", d, d)
    B = 2 * np.einsum("ij,ij->i", q, d)
    C = np.einsum("ij,ij->i", q, q) - radius ** 2
    disc = B * B - 4 * A * C
    root = np.sqrt(np.where(disc > 0, disc, np.nan))
    return (-B - root) / (2 * A), (-B + root) / (2 * A)


def _arc_roots(v, w, kappa):
    """Angles where ``cos(phi - arg w) = kappa``; NaN when none."""
    base = np.arctan2(w[:, 1], w[:, 0])
    ac = np.arccos(np.where(np.abs(kappa) <= 1, kappa, np.nan))
    return np.mod(base - ac, TWO_PI), np.mod(base + ac, TWO_PI)


def _pieces(owner, params, ncurve, lo, hi):
    """Sub-intervals between sorted breakpoints of each curve."""
    keep = np.isfinite(params) & (params > lo) & (params < hi)
    owner = np.concatenate([owner[keep], np.arange(ncurve), np.arange(ncurve)])
    params = np.concatenate([params[keep], np.full(ncurve, lo), np.full(ncurve, hi)])
    order = np.lexsort((params, owner))
    owner, params = owner[order], params[order]
    same = owner[1:] == owner[:-1]
    width = np.where(same, params[1:] - params[:-1], 0.0)
    sel = same & (width > 0)
    return owner[:-1][sel], 0.5 * (params[1:] + params[:-1])[sel], width[sel]


def _expand(curve_of_point, pairs, ncurve):
    """Point-level pair lists from curve-level ones."""
    c_own, c_nb = pairs
    if c_own.size == 0 or curve_of_point.size == 0:
        return np.zeros(0, int), np.zeros(0, int)
    order = np.argsort(c_own, kind="stable")
    c_own, c_nb = c_own[order], c_nb[order]
    counts = np.bincount(c_own, minlength=ncurve)
    starts = np.cumsum(counts) - counts
    reps = counts[curve_of_point]
    pts = np.repeat(np.arange(curve_of_point.size), reps)
    idx = _ranges(starts[curve_of_point], reps)
    return pts, c_nb[idx]


def offset_length(region, t, window=None):
    """Length of the level curve ``{d = t}`` of the distance to the boundary.

    Parameters
    ----------
    region : PolygonalRegion, shapely geometry or (n, 2, 2) array
        Boundary, given as loops, a geometry or a segment soup (open
        polylines are allowed).
    t : float
        Level, ``t >= 0``.  At ``t = 0`` both sides of the boundary count.
    window : (center, radius), optional
        Only the part inside the open disk is measured.

    Returns
    -------
    float
    """
    if not t >= 0:
        raise ValueError(f"t must be >= 0, got {t}")
    segs = as_segments(region)
    if segs.size == 0:
        return 0.0
    if window is not None:
        wc, wr = np.asarray(window[0], dtype=float), float(window[1])
    if t == 0:
        if window is None:
            return float(2 * np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1).sum())
        return 2 * _clipped_length(segs, wc, wr)
    arr = _Arrangement(segs, t)
    Lmax = arr.L.max()

    # sides of the edge rectangles, parametrised by s in [0, 1]
    m = len(segs)
    p0 = np.concatenate([arr.a + t * arr.n, arr.a - t * arr.n])
    d = np.concatenate([arr.e, arr.e]) * np.concatenate([arr.L, arr.L])[:, None]
    mids = np.concatenate([arr.mid, arr.mid])
    half = np.concatenate([arr.L, arr.L]) / 2
    rect = _pairs(arr.seg_tree, mids, 2 * t + half + Lmax / 2 + arr.tol)
    c, j = rect
    near = _seg_seg_distance(segs[c % m], segs[j]) < 2 * t + arr.tol
    rect = (c[near], j[near])
    disk = _pairs(arr.vert_tree, mids, 2 * t + half + arr.tol)
    own, par = [], []
    c, j = rect
    if c.size:
        q = p0[c] - arr.a[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            a1 = np.einsum("ij,ij->i", d[c], arr.e[j])
            b1 = np.einsum("ij,ij->i", q, arr.e[j])
            a2 = np.einsum("ij,ij->i", d[c], arr.n[j])
            b2 = np.einsum("ij,ij->i", q, arr.n[j])
            for s in (-b1 / a1, (arr.L[j] - b1) / a1, (t - b2) / a2, (-t - b2) / a2):
                own.append(c)
                par.append(s)
    c, k = disk
    if c.size:
        for s in _line_roots(p0[c], d[c], arr.verts[k], t):
            own.append(c)
            par.append(s)
    if window is not None:
        for s in _line_roots(p0, d, np.broadcast_to(wc, p0.shape), wr):
            own.append(np.arange(2 * m))
            par.append(s)
    own = np.concatenate(own) if own else np.zeros(0, int)
    par = np.concatenate(par) if par else np.zeros(0)
    cur, s_mid, ds = _pieces(own, par, 2 * m, 0.0, 1.0)
    P = p0[cur] + s_mid[:, None] * d[cur]
    hit = arr.covered(P, cur, _expand(cur, rect, 2 * m), _expand(cur, disk, 2 * m))
    if window is not None:
        hit |= np.einsum("ij,ij->i", P - wc, P - wc) >= wr ** 2
    total = float(np.sum((ds * np.linalg.norm(d[cur], axis=1))[~hit]))

    # circles around the vertices, parametrised by angle
    V = arr.verts
    nv = len(V)
    rect = _pairs(arr.seg_tree, V, 2 * t + Lmax / 2 + arr.tol)
    c, j = rect
    near = _seg_seg_distance(np.stack([V[c], V[c]], axis=1), segs[j]) < 2 * t + arr.tol
    rect = (c[near], j[near])
    disk = _pairs(arr.vert_tree, V, 2 * t + arr.tol)
    own, par = [], []
    c, j = rect
    if c.size:
        # a vertex circle is tangent to the long sides of its own edges
        ends = np.all(V[c] == arr.a[j], axis=1) | np.all(V[c] == arr.b[j], axis=1)
        for w, c0, skip in ((arr.e[j], np.einsum("ij,ij->i", arr.e[j], arr.a[j]), None),
                            (arr.e[j], np.einsum("ij,ij->i", arr.e[j], arr.a[j]) + arr.L[j], None),
                            (arr.n[j], np.einsum("ij,ij->i", arr.n[j], arr.a[j]) + t, ends),
                            (arr.n[j], np.einsum("ij,ij->i", arr.n[j], arr.a[j]) - t, ends)):
            kappa = (c0 - np.einsum("ij,ij->i", w, V[c])) / t
            if skip is not None:
                kappa = np.where(skip, np.nan, kappa)
            for phi in _arc_roots(V[c], w, kappa):
                own.append(c)
                par.append(phi)
    c, k = disk
    sel = c != k
    c, k = c[sel], k[sel]
    disk = (c, k)
    if c.size:
        w = V[k] - V[c]
        dist = np.hypot(w[:, 0], w[:, 1])
        for phi in _arc_roots(V[c], w, dist / (2 * t)):
            own.append(c)
            par.append(phi)
    if window is not None:
        w = V - wc
        dist = np.hypot(w[:, 0], w[:, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            kappa = (wr ** 2 - dist ** 2 - t ** 2) / (2 * t * dist)
        for phi in _arc_roots(V, w, kappa):
            own.append(np.arange(nv))
            par.append(phi)
    own = np.concatenate(own) if own else np.zeros(0, int)
    par = np.concatenate(par) if par else np.zeros(0)
    cur, phi_mid, dphi = _pieces(own, par, nv, 0.0, TWO_PI)
    P = V[cur] + t * np.stack([np.cos(phi_mid), np.sin(phi_mid)], axis=1)
    hit = arr.covered(P, cur, _expand(cur, rect, nv), _expand(cur, disk, nv))
    if window is not None:
        hit |= np.einsum("ij,ij->i", P - wc, P - wc) >= wr ** 2
    total += float(t * np.sum(dphi[~hit]))
    return total


def _clipped_length(segs, center, radius):
    """Length of the segments inside the open disk."""
    p0 = segs[:, 0]
    d = segs[:, 1] - p0
    s0, s1 = _line_roots(p0, d, np.broadcast_to(center, p0.shape), radius)
    lo = np.clip(np.nan_to_num(s0, nan=1.0), 0, 1)
    hi = np.clip(np.nan_to_num(s1, nan=1.0), 0, 1)
    return float(np.sum((hi - lo).clip(0) * np.linalg.norm(d, axis=1)))


def boundary_length_in_ball(region, center, radius):
    """Length of the boundary inside the disk ``B(center, radius)``."""
    return _clipped_length(region.segments(), np.asarray(center, dtype=float), radius)


def raster_offset_length(region, t, h=None, margin=None):
    """Marching-squares estimate of `offset_length` (cross-check only)."""
    from skimage.measure import find_contours

    segs = as_segments(region)
    lo = segs.reshape(-1, 2).min(axis=0)
    hi = segs.reshape(-1, 2).max(axis=0)
    margin = 2 * t + 0.05 * (hi - lo).max() if margin is None else margin
    if h is None:
        h = min(t / 20 if t > 0 else np.inf, (hi - lo).max() / 400)
    x = np.arange(lo[0] - margin, hi[0] + margin + h, h)
    y = np.arange(lo[1] - margin, hi[1] + margin + h, h)
    X, Y = np.meshgrid(x, y, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    D = np.full(len(P), np.inf)
    for s in segs:
        ab = s[1] - s[0]
        u = np.clip((P - s[0]) @ ab / (ab @ ab), 0, 1)
        D = np.minimum(D, np.hypot(*(P - s[0] - u[:, None] * ab).T))
    total = 0.0
    for c in find_contours(D.reshape(X.shape), t):
        total += np.sum(np.linalg.norm(np.diff(c, axis=0), axis=1)) * h
    return float(total)


# ---------------------------------------------------------------- topology

def merge_times(region):
    """Candidate merging times: half distances of non-adjacent edge pairs."""
    segs = as_segments(region)
    n = len(segs)
    i, j = np.triu_indices(n, 1)
    ends_i, ends_j = segs[i], segs[j]
    shared = np.zeros(i.size, dtype=bool)
    for a in range(2):
        for b in range(2):
            shared |= np.all(ends_i[:, a] == ends_j[:, b], axis=1)
    i, j = i[~shared], j[~shared]
    if i.size == 0:
        return np.zeros(0)
    return np.unique(0.5 * _seg_seg_distance(segs[i], segs[j]))


def neighborhood_euler(region, t, quad_segs=64):
    """Euler characteristic of the open ``t``-neighbourhood of the boundary.

    Counted as components minus holes of the buffered boundary.  When
    ``t`` is within ``1e-12`` of a merging time it is moved up by ``1e-12``
    and a `MergingTimeWarning` is issued.
    """
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    segs = as_segments(region)
    times = merge_times(segs)
    if times.size and np.min(np.abs(times - t)) <= 1e-12:
        t = t + 1e-12
        warnings.warn(f"t sits on a merging time; evaluated at t={t!r}",
                      MergingTimeWarning, stacklevel=2)
    nb = MultiLineString([s for s in segs]).buffer(t, quad_segs=quad_segs)
    polys = [p for p in getattr(nb, "geoms", [nb]) if not p.is_empty]
    return len(polys) - sum(len(p.interiors) for p in polys)


# ------------------------------------------------------ global decomposition

@dataclass(frozen=True, eq=False)
class LevelSetDecomposition:
    """Split ``omega = omega0 (sym. diff.) omega1``.

    ``selected`` lists the loops kept in ``omega0`` (in selection rounds),
    ``rejected`` the short loops that end up in ``omega1``.
    """

    region: PolygonalRegion
    delta0: float
    rounds: tuple
    omega0: object
    omega1: object
    diagnostics: dict

    @property
    def selected(self):
        return tuple(sorted(k for r in self.rounds for k in r))

    @property
    def rejected(self):
        s = set(self.selected)
        return tuple(k for k in range(len(self.region)) if k not in s)

    @property
    def ok(self):
        return all(v["ok"] for v in self.diagnostics.values())

    def report(self):
        return {"delta0": self.delta0,
                "loop_lengths": self.region.lengths.tolist(),
                "rounds": [list(r) for r in self.rounds],
                "selected": list(self.selected), "rejected": list(self.rejected),
                "checks": self.diagnostics}

    def to_json(self):
        return json.dumps(self.report(), indent=2)


def _select(region, delta0):
    lengths = region.lengths
    D = region.loop_distances()
    chosen = set(np.flatnonzero(lengths >= TWO_PI * delta0).tolist())
    rounds = [tuple(sorted(chosen))]
    while True:
        rest = [k for k in range(len(region)) if k not in chosen]
        if not chosen or not rest:
            break
        sel = sorted(chosen)
        new = [k for k in rest if lengths[k] >= TWO_PI * D[k, sel].min()]
        if not new:
            break
        chosen.update(new)
        rounds.append(tuple(new))
    return rounds, chosen


def _omega0(region, chosen):
    parts = []
    for k in sorted(chosen):
        if region.is_hole[k]:
            continue
        g = region.interior(k)
        holes = [region.interior(j) for j in sorted(chosen)
                 if region.is_hole[j] and region.encloses(k, j)]
        for h in holes:
            g = g.difference(h)
        parts.append(g)
    return shapely.union_all(parts) if parts else Polygon()


def _sample_points(geom, n, rng):
    x0, y0, x1, y1 = geom.bounds
    return rng.uniform([x0, y0], [x1, y1], size=(n, 2))


def _contains(geom, P):
    if geom.is_empty:
        return np.zeros(len(P), dtype=bool)
    return shapely.contains_xy(geom, P[:, 0], P[:, 1])


def _rel_ok(lhs, rhs, rtol):
    return bool(lhs <= rhs * (1 + rtol) + 1e-12)


def _check_global(region, delta0, chosen, omega0, omega1, samples, rng, rtol):
    diag = {}
    omega = region.geometry
    P = _sample_points(omega, 4000, rng)
    mism = int(np.sum(_contains(omega, P) != (_contains(omega0, P) ^ _contains(omega1, P))))
    diag["symmetric_difference"] = {"ok": mism == 0, "mismatches": mism}

    segs0 = as_segments(omega0) if not omega0.is_empty else np.zeros((0, 2, 2))
    per0 = float(np.linalg.norm(segs0[:, 1] - segs0[:, 0], axis=1).sum()) if segs0.size else 0.0
    ts = np.sort(np.concatenate([rng.uniform(0, delta0, samples - 1), [delta0]]))
    worst = 0.0
    for t in ts:
        if segs0.size:
            worst = max(worst, offset_length(segs0, t) / (2 * per0))
    diag["level_estimate"] = {"ok": worst <= 1 + rtol, "max_ratio": worst,
                              "samples": len(ts), "perimeter": per0}

    lengths = region.lengths
    bound0 = MultiLineString([s for s in segs0]) if segs0.size else None
    bad = []
    for k in range(len(region)):
        if k in chosen:
            continue
        dist = region.ring(k).distance(bound0) if bound0 is not None else np.inf
        cap = TWO_PI * min(delta0, dist)
        if not _rel_ok(lengths[k], cap, rtol):
            bad.append({"loop": k, "length": float(lengths[k]), "bound": float(cap)})
    diag["short_loops"] = {"ok": not bad, "violations": bad}
    return diag


def decompose_global(region, delta0, samples=20, seed=0, rtol=1e-9, strict=True):
    """Split a region into a part with controlled level curves and short loops.

    Loops of length at least ``2 pi delta0`` are selected first; then any
    loop whose length is at least ``2 pi`` times its distance to the
    selected loops joins, until nothing changes.  ``omega0`` is built from
    the selected loops (outer loops minus their selected holes) and
    ``omega1`` is the symmetric difference with the region.

    The postconditions are checked on ``samples`` levels in ``(0, delta0]``
    and recorded in ``diagnostics``; with ``strict`` a failure raises
    `LevelSetError`.
    """
    if not isinstance(region, PolygonalRegion):
        region = PolygonalRegion.from_geometry(region)
    total = region.perimeter
    if not 0 < delta0 < total / TWO_PI:
        raise ValueError(f"delta0 must lie in (0, {total / TWO_PI:g}), got {delta0}")
    return _decompose(region, delta0, samples, seed, rtol, strict)


def _decompose(region, delta0, samples, seed, rtol, strict):
    region = _generic(region, seed)
    rounds, chosen = _select(region, delta0)
    omega0 = _omega0(region, chosen)
    omega1 = region.geometry.symmetric_difference(omega0)
    diag = _check_global(region, delta0, chosen, omega0, omega1, samples,
                         np.random.default_rng(seed), rtol)
    dec = LevelSetDecomposition(region, float(delta0), tuple(rounds), omega0, omega1, diag)
    if strict and not dec.ok:
        raise LevelSetError("global decomposition failed its checks", diag)
    return dec


# ------------------------------------------------------- local decomposition

@dataclass(frozen=True, eq=False)
class LocalDecomposition:
    """Result of `decompose_local`.

    ``modified`` is the region after the annulus clean-up, ``gamma`` the
    segments of ``omega0``'s boundary inside the open ball.
    """

    center: np.ndarray
    rho: float
    delta0: float
    modified: object
    omega0: object
    omega1: object
    gamma: np.ndarray
    inner: "LevelSetDecomposition | None"
    steps: tuple
    diagnostics: dict

    @property
    def ok(self):
        return all(v["ok"] for v in self.diagnostics.values())

    @property
    def gamma_length(self):
        g = self.gamma
        return float(np.linalg.norm(g[:, 1] - g[:, 0], axis=1).sum()) if g.size else 0.0

    def report(self):
        return {"center": self.center.tolist(), "rho": self.rho, "delta0": self.delta0,
                "gamma_length": self.gamma_length, "steps": list(self.steps),
                "checks": self.diagnostics}

    def to_json(self):
        return json.dumps(self.report(), indent=2)


def _components(geom, min_area=0.0):
    if geom.is_empty:
        return []
    parts = shapely.get_parts(shapely.get_parts(geom))
    return [g for g in parts if g.geom_type == "Polygon" and g.area > min_area]


def _polygonal(geom, min_area):
    """Drop lines, points and slivers left behind by an overlay."""
    parts = [Polygon(p.exterior, [r for r in p.interiors if Polygon(r).area > min_area])
             for p in _components(geom, min_area)]
    if len(parts) == 1:
        return parts[0]
    return MultiPolygon(parts) if parts else Polygon()


def _contact(poly, ring, eta):
    return poly.boundary.intersection(ring.buffer(eta)).length


def _angle(center, geom):
    p = geom.representative_point()
    return float(np.mod(np.arctan2(p.y - center[1], p.x - center[0]), TWO_PI))


def _contact_arc(poly, ring, eta, center, n):
    """Ends of the contact of ``poly`` with a circle, as points.

    Returns ``None`` when the contact is the whole circle.
    """
    pts = np.concatenate([np.asarray(r.coords) for r in
                          [poly.exterior] + list(poly.interiors)])
    pts = pts[shapely.distance(shapely.points(pts), ring) < eta]
    ang = np.mod(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]), TWO_PI)
    order = np.argsort(ang)
    ang, pts = ang[order], pts[order]
    gaps = np.diff(np.concatenate([ang, ang[:1] + TWO_PI]))
    g = int(np.argmax(gaps))
    if gaps[g] < 2 * TWO_PI / n + 1e-9:
        return None
    return pts[(g + 1) % len(ang)], pts[g]


def _ray_hits_ngon(center, radius, n, point):
    """Where the ray from ``center`` through ``point`` meets the regular n-gon."""
    d = point - center
    phi = np.mod(np.arctan2(d[1], d[0]), TWO_PI)
    k = np.floor(phi / (TWO_PI / n))
    mid = (k + 0.5) * TWO_PI / n
    s = radius * np.cos(np.pi / n) / np.cos(phi - mid)
    return center + s * np.array([np.cos(phi), np.sin(phi)])


def _sector(center, r_in, r_out, n, p_start, p_end):
    """Annulus sector between two points of the inner n-gon (counterclockwise).

    The inner chain reuses the exact end points so the sector fits the
    part of the region inside the inner circle without slivers.
    """
    def ang(p):
        return float(np.mod(np.arctan2(p[1] - center[1], p[0] - center[0]), TWO_PI))

    a0, a1 = ang(p_start), ang(p_end)
    width = np.mod(a1 - a0, TWO_PI)
    k = np.arange(n)
    rel = np.mod(TWO_PI * k / n - a0, TWO_PI)
    between = k[(rel > 0) & (rel < width)]
    between = between[np.argsort(rel[between])]
    phi = TWO_PI * between / n
    unit = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    inner = np.vstack([p_start, center + r_in * unit, p_end])
    outer = np.vstack([_ray_hits_ngon(center, r_out, n, p_start), center + r_out * unit,
                       _ray_hits_ngon(center, r_out, n, p_end)])
    return Polygon(np.vstack([inner, outer[::-1]])), float(a0), float(width)


def _on_ring(segs, ring, eta):
    if segs.size == 0:
        return np.zeros(0, dtype=bool)
    pts = [segs[:, 0], segs[:, 1], 0.5 * (segs[:, 0] + segs[:, 1])]
    return np.all([shapely.distance(shapely.points(p), ring) < eta for p in pts], axis=0)


def decompose_local(region, center, rho, delta0, n_circle=512, samples=8, seed=0,
                    rtol=1e-9, strict=True):
    """Local version of `decompose_global` inside the ball ``B(center, rho)``.

    The region is cut to the ball.  In the outer annulus of width
    ``2 delta0`` the pieces of the region (and of its complement) that do
    not reach the outer circle, or meet the inner circle along at most
    ``4 delta0``, are removed (filled).  Pieces are processed in order of
    their angular position and the scan restarts after every change.  The
    survivors are replaced by annulus sectors spanning their contact with
    the inner circle.  The global decomposition is then applied to the
    modified set.

    Circles are represented by inscribed ``n_circle``-gons.
    """
    center = np.asarray(center, dtype=float)
    if not isinstance(region, PolygonalRegion):
        region = PolygonalRegion.from_geometry(region)
    if not rho > 0:
        raise ValueError("rho must be positive")
    r_in = rho - 2 * delta0
    inside_len = _clipped_length(region.segments(), center, rho)
    if not 0 < TWO_PI * delta0 <= min(rho / 8, inside_len):
        raise ValueError(f"need 0 < 2 pi delta0 <= min(rho/8, boundary length in ball)"
                         f" = {min(rho / 8, inside_len):g}; got {TWO_PI * delta0:g}")
    omega = region.geometry
    B = disk_polygon(center, rho, n_circle)
    B_in = disk_polygon(center, r_in, n_circle)
    S = Polygon(B.exterior.coords, [B_in.exterior.coords])
    outer, inner = B.exterior, B_in.exterior
    eta = 1e-9 * rho
    grid = 1e-12 * rho                 # snapping grid for all overlays
    tiny = 1e-12 * rho ** 2            # area below which pieces are slivers
    cur = _polygonal(omega.intersection(B, grid_size=grid), tiny)
    if cur.is_empty or cur.area == 0:
        raise ValueError("the region does not meet the ball")

    def small(piece):
        return (_contact(piece, outer, eta) <= eta * 10
                or _contact(piece, inner, eta) <= 4 * delta0)

    steps = []
    while True:
        changed = False
        for kind in ("remove", "fill"):
            pool = (cur.intersection(S, grid_size=grid) if kind == "remove"
                    else S.difference(cur, grid_size=grid))
            for piece in sorted(_components(pool, tiny), key=lambda g: _angle(center, g)):
                if small(piece):
                    cur = _polygonal(cur.difference(piece, grid_size=grid) if kind == "remove"
                                     else cur.union(piece, grid_size=grid), tiny)
                    steps.append({"action": kind, "angle": _angle(center, piece),
                                  "area": float(piece.area)})
                    changed = True
                    break
            if changed:
                break
        if not changed:
            break
    sectors = []
    for piece in sorted(_components(cur.intersection(S, grid_size=grid), tiny),
                        key=lambda g: _angle(center, g)):
        ends = _contact_arc(piece, inner, eta, center, n_circle)
        if ends is None:
            sec, start, width = S, 0.0, TWO_PI
        else:
            sec, start, width = _sector(center, r_in, rho, n_circle, *ends)
        sectors.append(sec)
        steps.append({"action": "sector", "start": start, "width": width})
    modified = shapely.union_all([cur.intersection(B_in, grid_size=grid)] + sectors,
                                 grid_size=grid)
    modified = _polygonal(modified, tiny)

    mod_region = PolygonalRegion.from_geometry(modified)
    if mod_region.perimeter > TWO_PI * delta0:
        inner_dec = _decompose(mod_region, delta0, samples, seed, rtol, strict=False)
        omega0, omega1 = inner_dec.omega0, inner_dec.omega1
    else:
        inner_dec, omega0, omega1 = None, Polygon(), modified
    segs0 = as_segments(omega0) if not omega0.is_empty else np.zeros((0, 2, 2))
    gamma = segs0[~_on_ring(segs0, outer, eta)]
    diag = _check_local(omega, region, center, rho, delta0, omega0, omega1, gamma,
                        B, B_in, outer, eta, inside_len, samples, seed, rtol)
    out = LocalDecomposition(center, float(rho), float(delta0), modified, omega0, omega1,
                             gamma, inner_dec, tuple(steps), diag)
    if strict and not out.ok:
        raise LevelSetError("local decomposition failed its checks", diag)
    return out


def _relative_length(geom, outer, eta):
    segs = as_segments(geom) if not geom.is_empty else np.zeros((0, 2, 2))
    segs = segs[~_on_ring(segs, outer, eta)]
    return float(np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1).sum()) if segs.size else 0.0


def _check_local(omega, region, center, rho, delta0, omega0, omega1, gamma, B, B_in,
                 outer, eta, inside_len, samples, seed, rtol):
    rng = np.random.default_rng(seed)
    diag = {}
    r_in = rho - 2 * delta0
    rad = r_in * np.sqrt(rng.uniform(0, 1, 4000))
    ang = rng.uniform(0, TWO_PI, 4000)
    P = center + np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    P = P[_contains(B_in, P)]
    mism = int(np.sum(_contains(omega, P) != (_contains(omega0, P) ^ _contains(omega1, P))))
    diag["symmetric_difference"] = {"ok": mism == 0, "mismatches": mism}

    g_len = float(np.linalg.norm(gamma[:, 1] - gamma[:, 0], axis=1).sum()) if gamma.size else 0.0
    o1_len = _relative_length(omega1, outer, eta)
    diag["length_bound"] = {"ok": _rel_ok(max(g_len, o1_len), inside_len, rtol),
                            "gamma": g_len, "omega1": o1_len, "boundary_in_ball": inside_len}

    worst = 0.0
    ts = rng.uniform(0, delta0, samples)
    if gamma.size:
        for t in ts:
            val = offset_length(gamma, t, window=(center, rho - 4 * delta0))
            worst = max(worst, val / (2 * g_len))
    diag["level_estimate"] = {"ok": worst <= 1 + rtol, "max_ratio": worst, "samples": len(ts)}

    gline = MultiLineString([s for s in gamma]) if gamma.size else None
    bad = []
    for G in _components(omega1.intersection(B_in)):
        length = G.boundary.length
        dist = G.boundary.distance(gline) if gline is not None else np.inf
        cap = TWO_PI * min(delta0, dist)
        if not _rel_ok(length, cap, rtol):
            bad.append({"length": float(length), "bound": float(cap),
                        "where": list(G.representative_point().coords[0])})
    diag["short_components"] = {"ok": not bad, "violations": bad}
    return diag


# ---------------------------------------------------------------- file I/O

def write_region_csv(path, region):
    """One row per vertex: ``loop,x,y``."""
    with open(path, "w") as fh:
        fh.write("loop,x,y\n")
        for k, c in enumerate(region.loops):
            for x, y in c:
                fh.write(f"{k},{float(x)!r},{float(y)!r}\n")


def read_region_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    loops = [data[data[:, 0] == k, 1:] for k in np.unique(data[:, 0]).astype(int)]
    return PolygonalRegion(tuple(loops))
