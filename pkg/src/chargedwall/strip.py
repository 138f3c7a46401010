"""Truncated periodic strip, admissible angle fields and magnetic charge.

The strip is ``[-L1, L1) x [0, ell)``, periodic in ``x2``.  Fields are
stored as angles ``theta`` with ``m = (cos theta, sin theta)`` on an
``nx x ny`` node array (``x1`` along axis 0, ``x2`` along axis 1).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .profiles import layer_phase

__all__ = [
    "StripGrid", "DirectorField", "BackgroundField", "ChargeDensity",
    "make_grid", "make_background", "make_admissible_field", "charge_density",
    "divergence", "divergence_adjoint", "total_charge", "flux_x1",
    "save_field", "load_field", "CLAMP",
]

#: Boundary band: theta is frozen for ``|x1| >= CLAMP``.
CLAMP = 1.0

_MAGIC = b"CDWF"


@dataclass(frozen=True)
class StripGrid:
    """Node grid on the truncated strip.

    Parameters
    ----------
    ell : float
        Period in ``x2``.
    half_width : float
        Truncation ``L1`` in ``x1``; must be at least 2.
    nx, ny : int
        Node counts, even and at least 8.
    """

    ell: float
    half_width: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (np.isfinite(self.ell) and self.ell > 0):
            raise ValueError(f"ell must be positive, got {self.ell}")
        if not self.half_width >= 2:
            raise ValueError(f"half_width must be >= 2 so that the band |x1| > 1 "
                             f"is represented, got {self.half_width}")
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")

    @property
    def hx(self):
        return 2.0 * self.half_width / self.nx

    @property
    def hy(self):
        return self.ell / self.ny

    @property
    def cell_area(self):
        return self.hx * self.hy

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def x1(self):
        return -self.half_width + self.hx * np.arange(self.nx)

    @property
    def x2(self):
        return self.hy * np.arange(self.ny)

    def mesh(self):
        """Return ``(X1, X2)`` node coordinates with ``indexing='ij'``."""
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    @property
    def left_band(self):
        return self.x1 <= -CLAMP

    @property
    def right_band(self):
        return self.x1 >= CLAMP

    @property
    def free_rows(self):
        """Boolean mask over ``x1`` of nodes that are not clamped."""
        return ~(self.left_band | self.right_band)

    def padded(self, pad):
        """Grid of the same spacing covering ``pad`` times the ``x1`` range."""
        pad = int(pad)
        if pad < 1:
            raise ValueError("pad must be >= 1")
        return StripGrid(self.ell, self.half_width * pad, self.nx * pad, self.ny)


def make_grid(ell, half_width, nx, ny):
    """Build a `StripGrid`; see the class for the constraints."""
    return StripGrid(float(ell), float(half_width), int(nx), int(ny))


@dataclass(frozen=True, eq=False)
class DirectorField:
    """Admissible angle field on a grid.  Construct with `make_admissible_field`."""

    theta: np.ndarray
    grid: StripGrid

    @property
    def u(self):
        return np.cos(self.theta)

    @property
    def v(self):
        return np.sin(self.theta)

    @property
    def m(self):
        return np.stack([self.u, self.v])

    def with_theta(self, theta):
        """Return a new admissible field sharing the grid."""
        return make_admissible_field(self.grid, theta)


@dataclass(frozen=True, eq=False)
class BackgroundField:
    """Charge-compensating reference magnetization ``M(x1)``.

    ``M`` is stored as a ``(2, nx, ny)`` array; ``band`` is the ``x1``
    interval outside of which ``M = +-e1``.
    """

    M: np.ndarray
    grid: StripGrid
    band: tuple = (-1.0, 1.0)


@dataclass(frozen=True, eq=False)
class ChargeDensity:
    sigma: np.ndarray
    grid: StripGrid

    @property
    def total(self):
        return float(self.sigma.sum() * self.grid.cell_area)


def make_background(grid, core=1.0, width=1.0):
    """Reference field ``M = (u, v)`` of the truncated layer.

    The default is the layer with ``eps = beta = 1``; ``core`` and
    ``width`` select another member of the family (``width <= 1`` keeps
    ``M = +-e1`` on the clamped bands).
    """
    if not (0 < core and 0 < width <= CLAMP):
        raise ValueError("need core > 0 and 0 < width <= 1")
    phi = layer_phase(grid.x1, core, width)
    M = np.empty((2,) + grid.shape)
    M[0] = np.sin(phi)[:, None]
    M[1] = np.cos(phi)[:, None]
    return BackgroundField(M, grid, (-width, width))


def make_admissible_field(grid, theta_init):
    """Clamp an angle field to the boundary condition.

    ``theta = pi`` on ``x1 <= -1`` and ``theta = 0`` on ``x1 >= 1``.
    ``theta_init`` may be a scalar or anything broadcastable to the grid.
    """
    theta = np.array(np.broadcast_to(np.asarray(theta_init, dtype=float), grid.shape))
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta_init contains non-finite values")
    theta[grid.left_band] = np.pi
    theta[grid.right_band] = 0.0
    theta.setflags(write=False)
    return DirectorField(theta, grid)


def divergence(f1, f2, grid):
    """Centered-difference divergence, periodic in both directions.

    Callers pass fields that vanish near the ``x1`` ends (such as
    ``m - M``), so the ``x1`` wrap is inert and the total is exactly a
    telescoping sum.
    """
    return ((np.roll(f1, -1, 0) - np.roll(f1, 1, 0)) / (2 * grid.hx)
            + (np.roll(f2, -1, 1) - np.roll(f2, 1, 1)) / (2 * grid.hy))


def divergence_adjoint(s, grid):
    """Adjoint of `divergence` in the plain l2 pairing (a negative gradient)."""
    g1 = (np.roll(s, 1, 0) - np.roll(s, -1, 0)) / (2 * grid.hx)
    g2 = (np.roll(s, 1, 1) - np.roll(s, -1, 1)) / (2 * grid.hy)
    return g1, g2


def charge_density(field, background):
    """Magnetic charge ``sigma = div(m - M)``."""
    if field.grid != background.grid:
        raise ValueError("field and background live on different grids")
    grid = field.grid
    f1 = field.u - background.M[0]
    f2 = field.v - background.M[1]
    return ChargeDensity(divergence(f1, f2, grid), grid)


def flux_x1(field):
    """``sum(d1 u) hx hy`` with one-sided differences at the ``x1`` ends."""
    g = field.grid
    return float(np.gradient(field.u, g.hx, axis=0).sum() * g.cell_area)


def total_charge(field):
    """Discrete ``int div m``; equals ``2 ell`` for admissible fields."""
    g = field.grid
    d2 = (np.roll(field.v, -1, 1) - np.roll(field.v, 1, 1)) / (2 * g.hy)
    return flux_x1(field) + float(d2.sum() * g.cell_area)


def save_field(path, field, fmt="bin"):
    """Write a field snapshot.

    Binary layout (little endian): 4-byte magic ``CDWF``, ``int32 nx, ny``,
    ``float64 ell, half_width``, then ``nx*ny`` ``float64`` angles, row
    major with ``x2`` fastest.  The CSV layout has a header line
    ``nx,ny,ell,half_width``, the header values, then one row per ``x1``
    node.
    """
    g = field.grid
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(_MAGIC + struct.pack("<iidd", g.nx, g.ny, g.ell, g.half_width))
            fh.write(np.ascontiguousarray(field.theta, dtype="<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w") as fh:
            fh.write("nx,ny,ell,half_width\n")
            fh.write(f"{g.nx},{g.ny},{g.ell!r},{g.half_width!r}\n")
            np.savetxt(fh, field.theta, delimiter=",", fmt="%.17g")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_field(path):
    """Inverse of `save_field`; the format is detected from the content."""
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == _MAGIC:
            nx, ny, ell, hw = struct.unpack("<iidd", fh.read(24))
            theta = np.frombuffer(fh.read(), dtype="<f8").reshape(nx, ny)
        else:
            fh.seek(0)
            lines = fh.read().decode().splitlines()
            nx, ny, ell, hw = lines[1].split(",")
            nx, ny, ell, hw = int(nx), int(ny), float(ell), float(hw)
            theta = np.loadtxt(lines[2:], delimiter=",", ndmin=2).reshape(nx, ny)
    return make_admissible_field(make_grid(ell, hw, nx, ny), theta)
