import numpy as np
import pytest
from hypothesis import given, strategies as st

from chargedwall.strip import (charge_density, flux_x1, load_field, make_admissible_field,
                               make_background, make_grid, save_field, total_charge)


def test_grid_spacings():
    g = make_grid(4, 4, 64, 64)
    assert g.hx == 0.125
    assert g.hy == 0.0625
    g = make_grid(2 * np.pi, 4, 256, 128)
    assert g.hy == pytest.approx(2 * np.pi / 128, rel=1e-15)


@pytest.mark.parametrize("args", [(4, 1.5, 64, 64), (4, 4, 63, 64), (4, 4, 64, 6),
                                  (0, 4, 64, 64), (-1, 4, 64, 64)])
def test_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_background_values():
    g = make_grid(1, 2, 64, 8)
    bg = make_background(g)
    i0 = np.flatnonzero(g.x1 == 0.0)[0]
    np.testing.assert_allclose(bg.M[:, i0, 0], [0.0, 1.0], atol=1e-15)
    # the last node sits at x1 = 2 - hx; every node with |x1| >= 1 is clamped
    far = g.x1 >= 1
    np.testing.assert_allclose(bg.M[0, far], 1.0, atol=1e-15)
    np.testing.assert_allclose(bg.M[1, far], 0.0, atol=1e-15)
    np.testing.assert_allclose(np.hypot(bg.M[0], bg.M[1]), 1.0, atol=1e-15)


def test_admissible_clamps_and_flux():
    g = make_grid(1.5, 2, 64, 16)
    f = make_admissible_field(g, 0.0)
    assert np.all(f.theta[g.left_band] == np.pi)
    assert np.all(f.theta[g.right_band] == 0.0)
    assert total_charge(f) == pytest.approx(2 * g.ell, rel=1e-9)
    X1, _ = g.mesh()
    sharp = make_admissible_field(g, np.pi * (X1 < 0))
    assert total_charge(sharp) == pytest.approx(2 * g.ell, rel=1e-9)


def test_admissible_rejects_nan():
    g = make_grid(1, 2, 16, 8)
    th = np.zeros(g.shape)
    th[3, 3] = np.nan
    with pytest.raises(ValueError):
        make_admissible_field(g, th)


def test_fields_are_read_only():
    f = make_admissible_field(make_grid(1, 2, 16, 8), 0.3)
    with pytest.raises(ValueError):
        f.theta[0, 0] = 1.0


def test_charge_of_background_is_zero():
    g = make_grid(1, 2, 32, 8)
    bg = make_background(g)
    th = np.arctan2(bg.M[1], bg.M[0])
    s = charge_density(make_admissible_field(g, th), bg)
    assert np.abs(s.sigma).max() < 1e-12
    assert s.total == 0.0 or abs(s.total) < 1e-14


def test_charge_grid_mismatch():
    g1, g2 = make_grid(1, 2, 16, 8), make_grid(1, 2, 32, 8)
    with pytest.raises(ValueError):
        charge_density(make_admissible_field(g1, 0.0), make_background(g2))


def test_tilted_wall_charge_support():
    g = make_grid(1, 2, 128, 32)
    X1, X2 = g.mesh()
    gamma = 0.3 * np.sin(2 * np.pi * X2)
    th = np.pi * (X1 < gamma)
    s = charge_density(make_admissible_field(g, th), make_background(g)).sigma
    near_wall = np.abs(X1 - gamma) <= 2 * g.hx
    # outside the wall tube only the smooth background charge remains (|x1| < 1)
    assert np.all(s[~near_wall & (np.abs(X1) > 1 + g.hx)] == 0.0)


@given(st.integers(0, 2 ** 32 - 1))
def test_neutral_and_flux_for_random_fields(seed):
    rng = np.random.default_rng(seed)
    g = make_grid(float(rng.uniform(0.5, 3)), 2, 32, 16)
    f = make_admissible_field(g, rng.uniform(-10, 10, g.shape))
    s = charge_density(f, make_background(g))
    assert abs(s.total) <= 1e-9 * g.ell
    assert flux_x1(f) == pytest.approx(2 * g.ell, rel=1e-9)
    assert np.allclose(f.u ** 2 + f.v ** 2, 1.0, atol=1e-15)


@pytest.mark.parametrize("fmt", ["bin", "csv"])
def test_field_roundtrip(tmp_path, fmt, rng):
    g = make_grid(1.25, 2, 16, 8)
    f = make_admissible_field(g, rng.uniform(0, 3, g.shape))
    p = tmp_path / f"f.{fmt}"
    save_field(p, f, fmt=fmt)
    h = load_field(p)
    assert h.grid == g
    np.testing.assert_array_equal(h.theta, f.theta)
