"""Fractional Sobolev norms on the strip, evaluated three ways.

* `fractional_norm`: Fourier multiplier ``|xi|^(2 alpha)`` on the zero-padded
  grid (the production path).
* `h_half_finite_difference`: real-space double integral with kernel
  ``|h|^-3`` for the ``H^(1/2)`` seminorm.
* `singular_integral_energy`: real-space double integral with kernel
  ``|h|^-1`` for the ``H^(-1/2)`` norm of a neutral density.

Fourier transforms use the unitary convention on ``R x (R/ell Z)``, so that
``fractional_norm(f, 0) == int |f|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .strip import StripGrid

__all__ = [
    "SpectrumGrid", "HelmholtzField", "spectrum_grid", "pad_x1",
    "fractional_norm", "fractional_norm_and_gradient", "helmholtz_field",
    "spectral_derivative", "h_half_finite_difference",
    "singular_integral_energy", "div_curl_split", "write_spectrum_csv",
    "NeutralityError", "DEFAULT_PAD", "random_neutral_density", "oracle_triangle",
]

DEFAULT_PAD = 2
#: Work limit for the O(N^2) real-space oracles (multiply-adds).
MAX_PAIR_WORK = 4e9


class NeutralityError(ValueError):
    """A negative-order norm was requested for a field with nonzero mean."""


@dataclass(frozen=True)
class SpectrumGrid:
    """Frequencies of the padded grid in half-spectrum (``rfft`` on ``x1``) layout.

    ``fold`` holds the multiplicity of each stored ``x1`` frequency (2 for
    modes whose conjugate is not stored).  ``zero`` flags ``xi = 0``.
    """

    grid: StripGrid
    pad: int
    xi1: np.ndarray
    xi2: np.ndarray

    @property
    def period_x1(self):
        return self.grid.nx * self.pad * self.grid.hx

    @property
    def fold(self):
        n = self.grid.nx * self.pad
        f = np.full(self.xi1.shape, 2.0)
        f[0] = 1.0
        if n % 2 == 0:
            f[-1] = 1.0
        return f

    @property
    def modulus(self):
        return np.hypot(self.xi1[:, None], self.xi2[None, :])

    @property
    def zero(self):
        z = np.zeros((self.xi1.size, self.xi2.size), dtype=bool)
        z[0, 0] = True
        return z

    @property
    def scale(self):
        """Factor turning ``sum |F|^2`` into the unitary norm."""
        g = self.grid
        return g.cell_area ** 2 / (g.ell * self.period_x1)


def spectrum_grid(grid, pad=DEFAULT_PAD):
    n = grid.nx * int(pad)
    xi1 = 2 * np.pi * sfft.rfftfreq(n, grid.hx)
    xi2 = 2 * np.pi * sfft.fftfreq(grid.ny, grid.hy)
    return SpectrumGrid(grid, int(pad), xi1, xi2)


def pad_x1(values, grid, pad):
    """Embed ``values`` (``..., nx, ny``) in the centre of the padded grid."""
    pad = int(pad)
    if pad == 1:
        return np.asarray(values, dtype=float)
    off = (pad - 1) * grid.nx // 2
    shape = values.shape[:-2] + (grid.nx * pad, grid.ny)
    out = np.zeros(shape)
    out[..., off:off + grid.nx, :] = values
    return out


def _unpad(values, grid, pad):
    off = (int(pad) - 1) * grid.nx // 2
    return values[..., off:off + grid.nx, :]


def _forward(values):
    return sfft.fft(sfft.rfft(values, axis=-2), axis=-1)


def _inverse(coef, n):
    return sfft.irfft(sfft.ifft(coef, axis=-1), n=n, axis=-2)


def _check_neutral(f, grid, tol_charge):
    if tol_charge is None:
        tol_charge = 1e-9 * grid.ell
    total = float(np.sum(f) * grid.cell_area)
    # rounding of the sum grows with the mass of f
    slack = 1e-12 * float(np.abs(f).sum() * grid.cell_area)
    if abs(total) > tol_charge + slack:
        raise NeutralityError(
            f"charge neutrality violated: total charge {total:.3e} exceeds "
            f"tol_charge {tol_charge:.1e}; negative-order norms need a mean-free field")
    return total


def _dipole_term(f, grid, spec):
    # The x1 frequencies form a Riemann sum of spacing d = 2 pi / period.  On
    # the xi2 = 0 row the integrand |xi1|^-1 |f^|^2 has a kink at xi1 = 0 whose
    # leading quadrature error is -d^2 P^2 / 6 with P the x1 dipole moment.
    d = 2 * np.pi / spec.period_x1
    x1 = grid.x1[:, None]
    P = float(np.sum(x1 * f) * grid.cell_area)
    c = d ** 2 / (12 * np.pi * grid.ell)
    return c * P ** 2, 2 * c * P * x1 * grid.cell_area


def fractional_norm_and_gradient(f, grid, alpha, pad=DEFAULT_PAD, tol_charge=None,
                                 gradient=False, dipole_correction=True):
    """Norm ``sum_{xi != 0} |xi|^(2 alpha) |f^(xi)|^2`` and optionally its gradient.

    The gradient is with respect to the nodal values of ``f`` (plain l2
    pairing, no area weighting).  See `fractional_norm` for the parameters.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    if alpha < 0:
        _check_neutral(f, grid, tol_charge)
    spec = spectrum_grid(grid, pad)
    k = spec.modulus
    with np.errstate(divide="ignore"):
        w = np.where(spec.zero, 0.0, k ** (2.0 * alpha) if alpha != 0 else 1.0)
    F = _forward(pad_x1(f, grid, pad))
    val = spec.scale * float(np.sum(spec.fold[:, None] * w * (F.real ** 2 + F.imag ** 2)))
    use_dipole = dipole_correction and alpha == -0.5
    if use_dipole:
        dv, dg = _dipole_term(f, grid, spec)
        val += dv
    if not gradient:
        return val, None
    n = grid.nx * spec.pad
    g = _inverse(w * F, n) * (2 * spec.scale * n * grid.ny)
    g = _unpad(g, grid, pad)
    if use_dipole:
        g = g + dg
    return val, g


def fractional_norm(f, grid, alpha, pad=DEFAULT_PAD, tol_charge=None,
                    dipole_correction=True):
    """Fractional Sobolev norm ``|| |grad|^alpha f ||^2`` on the strip.

    Parameters
    ----------
    f : ndarray
        Nodal values, shape ``grid.shape``, or a stack ``(k, nx, ny)`` of
        components whose norms are summed.
    grid : StripGrid
    alpha : float
        Order; for ``alpha < 0`` the field must be mean free.
    pad : int
        Zero-padding factor in ``x1``; the ``x1`` direction is treated as
        periodic with period ``2 L1 pad``.
    tol_charge : float, optional
        Neutrality tolerance on ``int f``, default ``1e-9 ell``.
    dipole_correction : bool
        For ``alpha = -1/2`` add the leading correction of the ``x1``
        frequency sum at ``xi = 0``; it removes the ``O(pad^-2)`` image error.

    Returns
    -------
    float
    """
    f = np.asarray(f, dtype=float)
    if f.ndim == 3:
        return sum(fractional_norm(c, grid, alpha, pad, tol_charge, dipole_correction)
                   for c in f)
    return fractional_norm_and_gradient(f, grid, alpha, pad, tol_charge,
                                        dipole_correction=dipole_correction)[0]


def write_spectrum_csv(path, f, grid, pad=DEFAULT_PAD):
    """Dump ``(xi1, xi2, |f^|^2)`` for the stored half spectrum."""
    spec = spectrum_grid(grid, pad)
    F = _forward(pad_x1(np.asarray(f, dtype=float), grid, pad))
    power = (np.abs(F) ** 2) * spec.scale * spec.period_x1 / (2 * np.pi)
    X1, X2 = np.meshgrid(spec.xi1, spec.xi2, indexing="ij")
    table = np.column_stack([X1.ravel(), X2.ravel(), power.ravel()])
    np.savetxt(path, table, delimiter=",", header="xi1,xi2,power", comments="", fmt="%.17g")


def spectral_derivative(f, grid, axis):
    """Spectral derivative of a field on a periodic grid (no padding)."""
    spec = spectrum_grid(grid, 1)
    F = _forward(f)
    mult = 1j * (spec.xi1[:, None] if axis == 0 else spec.xi2[None, :])
    if axis == 0 and grid.nx % 2 == 0:
        mult = mult.copy()
        mult[-1, :] = 0.0
    if axis == 1:
        mult = np.broadcast_to(mult, F.shape).copy()
        mult[:, grid.ny // 2] = 0.0
    return _inverse(mult * F, grid.nx)


@dataclass(frozen=True, eq=False)
class HelmholtzField:
    """Curl-free field ``q`` with ``div q = sigma`` on the padded grid."""

    q: np.ndarray
    grid: StripGrid

    def divergence(self):
        return (spectral_derivative(self.q[0], self.grid, 0)
                + spectral_derivative(self.q[1], self.grid, 1))

    def curl(self):
        return (spectral_derivative(self.q[1], self.grid, 0)
                - spectral_derivative(self.q[0], self.grid, 1))


def helmholtz_field(sigma, grid, pad=DEFAULT_PAD, tol_charge=None):
    """Solve ``q^ = -i xi sigma^ / |xi|^2`` on the padded grid.

    The ``xi2 = 0`` part of ``q1`` is shifted so that ``q`` vanishes at the
    far ends of the padded domain, as the exact field on the infinite strip
    does for a neutral, compactly supported ``sigma``.

    Returns
    -------
    HelmholtzField
        Lives on ``grid.padded(pad)``.
    """
    sigma = np.asarray(sigma, dtype=float)
    _check_neutral(sigma, grid, tol_charge)
    big = grid.padded(pad)
    spec = spectrum_grid(big, 1)
    F = _forward(pad_x1(sigma, grid, pad))
    # drop Nyquist modes, on which the spectral derivative is undefined
    F[-1, :] = 0.0
    F[:, big.ny // 2] = 0.0
    k2 = spec.modulus ** 2
    k2[0, 0] = 1.0
    q1 = _inverse(-1j * spec.xi1[:, None] * F / k2, big.nx)
    q2 = _inverse(-1j * spec.xi2[None, :] * F / k2, big.nx)
    q1 -= q1[0].mean()
    return HelmholtzField(np.stack([q1, q2]), big)


# ---------------------------------------------------------------------------
# real-space oracles


def _autocorrelation(values, grid):
    """``C[a, b] = sum_x f(x) . f(x + (a hx, b hy)) hx hy`` for ``a >= 0``.

    ``f`` is extended by zero in ``x1`` and periodically in ``x2``; the
    returned array has shape ``(nx, ny)``.
    """
    nx, ny = grid.shape
    vals = values.reshape((-1, nx, ny))
    out = np.zeros((nx, ny))
    for a in range(nx):
        Z = np.zeros((ny, ny))
        for comp in vals:
            Z += comp[:nx - a].T @ comp[a:]
        # C[a, b] = sum_j Z[j, (j + b) % ny]
        out[a] = np.bincount(((np.arange(ny)[None, :] - np.arange(ny)[:, None]) % ny).ravel(),
                             weights=Z.ravel(), minlength=ny)
    return out * grid.cell_area


def _full_shifts(C):
    """Extend ``C[a >= 0, b]`` to ``a in (-nx, nx)`` using ``C(-h) = C(h)``."""
    nx, ny = C.shape
    neg = C[:0:-1, (-np.arange(ny)) % ny]
    return np.concatenate([neg, C]), np.arange(-nx + 1, nx)


def _check_budget(grid, ncomp=1):
    work = float(grid.nx) ** 2 * grid.ny ** 2 * ncomp
    if work > MAX_PAIR_WORK:
        raise ValueError(
            f"grid {grid.nx}x{grid.ny} exceeds the O(N^2) oracle budget "
            f"({work:.2e} > {MAX_PAIR_WORK:.0e} multiply-adds)")


def _lattice_images(grid, a_idx, images, power):
    """``sum_j |(a hx, b hy + j ell)|^-power`` over ``j in [-images, images)``.

    Returns an array over ``(a, b)``; the ``h = 0`` term is excluded.
    """
    h1 = (a_idx * grid.hx)[:, None, None]
    h2 = (np.arange(grid.ny) * grid.hy)[None, :, None] + grid.ell * np.arange(-images, images)[None, None, :]
    r = np.hypot(h1, h2)
    with np.errstate(divide="ignore"):
        k = np.where(r > 0, r ** -float(power), 0.0)
    return k.sum(axis=-1)


def _tail_cubic(grid, a_idx, images):
    # sum over |j| beyond the explicit images replaced by an integral
    A = np.abs(a_idx * grid.hx)[:, None]
    b = (np.arange(grid.ny) * grid.hy)[None, :]
    total = 0.0
    for c in (b + (images - 0.5) * grid.ell, (images + 0.5) * grid.ell - b):
        s = np.hypot(A, c)
        total = total + 1.0 / (s * (s + c)) / grid.ell
    return total


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _cell_average_inverse(grid, a, b):
    """Mean of ``1/|h|`` over the cell centred at ``(a hx, b hy)``, ``(a, b) != 0``."""
    p, q = 0.5 * grid.hx, 0.5 * grid.hy
    total = 0.0
    sub = 4
    edges1 = a * grid.hx + np.linspace(-p, p, sub + 1)
    edges2 = b * grid.hy + np.linspace(-q, q, sub + 1)
    for i in range(sub):
        x = 0.5 * (edges1[i] + edges1[i + 1]) + 0.5 * (edges1[i + 1] - edges1[i]) * _GL_X
        for j in range(sub):
            y = 0.5 * (edges2[j] + edges2[j + 1]) + 0.5 * (edges2[j + 1] - edges2[j]) * _GL_X
            w = np.outer(_GL_W, _GL_W) * 0.25 * (edges1[i + 1] - edges1[i]) * (edges2[j + 1] - edges2[j])
            total += np.sum(w / np.hypot(x[:, None], y[None, :]))
    return total / (4 * p * q)


def _centre_cell_inverse(grid):
    """``int 1/|h|`` over the cell centred at the origin."""
    p, q = 0.5 * grid.hx, 0.5 * grid.hy
    return 4 * (p * np.arcsinh(q / p) + q * np.arcsinh(p / q))


def h_half_finite_difference(field, grid, images=64):
    """``(1/4 pi) int int |m(x+h) - m(x)|^2 / |h|^3 dh dx`` by direct summation.

    Parameters
    ----------
    field : ndarray
        Shape ``(nx, ny)`` or ``(k, nx, ny)``.  Values are extended by zero
        beyond the ``x1`` range, so the field should decay to zero there.
    grid : StripGrid
    images : int
        Periodic images of the ``x2`` period summed explicitly; the rest of
        the ``h2`` line is added as an integral tail.

    Notes
    -----
    The sum runs over all lattice shifts ``h != 0`` with ``|h1| < L1``
    (larger shifts are handled in closed form since the supports no longer
    overlap).  The excluded cell at ``h = 0`` is restored from the
    quadratic behaviour of the difference energy at small shifts.
    """
    vals = np.asarray(field, dtype=float).reshape((-1,) + grid.shape)
    _check_budget(grid, vals.shape[0])
    P = float(np.sum(vals ** 2) * grid.cell_area)
    C, a_idx = _full_shifts(_autocorrelation(vals, grid))
    S = 2 * P - 2 * C
    K = _lattice_images(grid, a_idx, images, 3) + _tail_cubic(grid, a_idx, images)
    total = float(np.sum(S * K)) * grid.cell_area
    i0 = grid.nx - 1
    # centre cell, S(h) ~ A11 h1^2 + A22 h2^2
    A11 = S[i0 + 1, 0] / grid.hx ** 2
    A22 = S[i0, 1] / grid.hy ** 2
    p, q = 0.5 * grid.hx, 0.5 * grid.hy
    total += A11 * 4 * q * np.arcsinh(p / q) + A22 * 4 * p * np.arcsinh(q / p)
    # shifts with |h1| >= (nx - 1/2) hx see no overlap: S = 2P
    total += 8 * P / ((grid.nx - 0.5) * grid.hx)
    return total / (4 * np.pi)


def singular_integral_energy(sigma, grid, image_count=8, tol_charge=None, near=3):
    """``(1/2 pi) int int sigma(x+h) sigma(x) / |h|`` over ``h in R x [-N ell, N ell)``.

    Parameters
    ----------
    sigma : ndarray
        Neutral density on ``grid``, extended by zero in ``x1``.
    image_count : int
        ``N``, the number of ``x2`` periods on each side.
    near : int
        Cells with ``|a|, |b| <= near`` use the cell-averaged kernel.
    """
    if image_count < 1:
        raise ValueError("image_count must be >= 1")
    sigma = np.asarray(sigma, dtype=float)
    _check_neutral(sigma, grid, tol_charge)
    _check_budget(grid)
    C, a_idx = _full_shifts(_autocorrelation(sigma, grid))
    K = _lattice_images(grid, a_idx, image_count, 1)
    i0 = grid.nx - 1
    for a in range(-near, near + 1):
        for b in range(-near, near + 1):
            if abs(a) >= grid.nx or (a == 0 and b == 0):
                continue
            bb = b % grid.ny
            K[i0 + a, bb] += _cell_average_inverse(grid, a, b) - 1.0 / np.hypot(a * grid.hx, b * grid.hy)
    total = float(np.sum(C * K)) * grid.cell_area
    total += C[i0, 0] * _centre_cell_inverse(grid)
    return total / (2 * np.pi)


def div_curl_split(f, grid, image_count=8):
    """Split the ``H^(1/2)`` energy of a vector field into divergence and curl parts.

    Returns ``(div_part, curl_part, full)`` where the parts are
    `singular_integral_energy` of ``div f`` and ``curl f`` (spectral
    derivatives on ``grid``) and ``full`` is `h_half_finite_difference`
    of ``f``.  For smooth, compactly supported ``f`` one has
    ``div_part + curl_part = full`` and hence ``div_part <= full``.
    """
    f = np.asarray(f, dtype=float)
    div = spectral_derivative(f[0], grid, 0) + spectral_derivative(f[1], grid, 1)
    curl = spectral_derivative(f[1], grid, 0) - spectral_derivative(f[0], grid, 1)
    # spectral derivatives are exactly mean free up to rounding
    div -= div.mean()
    curl -= curl.mean()
    d = singular_integral_energy(div, grid, image_count)
    c = singular_integral_energy(curl, grid, image_count)
    return d, c, h_half_finite_difference(f, grid)


def random_neutral_density(grid, rng, bumps=5, width=(0.15, 0.3)):
    """Sum of periodic Gaussian bumps with zero total charge.

    Bump centres lie in ``|x1| < 0.4 L1``; charges are normal draws with
    their mean removed, so the density is neutral up to rounding.
    """
    X1, X2 = grid.mesh()
    q = rng.normal(size=bumps)
    q -= q.mean()
    s = np.zeros(grid.shape)
    for k in range(bumps):
        c1 = rng.uniform(-0.4, 0.4) * grid.half_width
        c2 = rng.uniform(0, grid.ell)
        w = rng.uniform(*width)
        d2 = (X2 - c2 + 0.5 * grid.ell) % grid.ell - 0.5 * grid.ell
        b = np.exp(-((X1 - c1) ** 2 + d2 ** 2) / (2 * w * w))
        s += q[k] * b / (b.sum() * grid.cell_area)
    return s - s.mean()


def oracle_triangle(grid, count=20, seed=0, rtol=0.02, pad=DEFAULT_PAD):
    """Compare the three ``H^(-1/2)`` evaluations on random neutral densities.

    For each density ``sigma`` the spectral norm, the ``1/|h|`` double
    integral and the ``H^(1/2)`` difference energy of the curl-free field
    ``q`` with ``div q = sigma`` are computed.

    Returns
    -------
    rows : list of dict
        ``spectral``, ``singular``, ``helmholtz`` and the largest pairwise
        relative gap ``max_gap`` per density.
    ok : bool
        All gaps at most ``rtol``.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(count):
        sigma = random_neutral_density(grid, rng)
        a = fractional_norm(sigma, grid, -0.5, pad=pad)
        b = singular_integral_energy(sigma, grid)
        H = helmholtz_field(sigma, grid, pad=pad)
        c = h_half_finite_difference(H.q, H.grid)
        vals = np.array([a, b, c])
        gap = float((vals.max() - vals.min()) / vals.min())
        rows.append({"index": i, "spectral": a, "singular": b, "helmholtz": c, "max_gap": gap})
    return rows, all(r["max_gap"] <= rtol for r in rows)
