import json
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from shapely.geometry import Polygon, box
from shapely.ops import polylabel

from chargedwall.levelset import (LevelSetError, MergingTimeWarning, PolygonalRegion,
                                  decompose_global, decompose_local, disk_polygon, merge_times,
                                  neighborhood_euler, offset_length, random_star_polygon,
                                  raster_offset_length, read_region_csv, write_region_csv)

from generators import global_case, local_case

SQUARE = PolygonalRegion.from_geometry(box(0, 0, 1, 1))


def annulus(r_in=0.1, n_out=128, n_in=32):
    return PolygonalRegion.from_geometry(
        disk_polygon((0, 0), 1.0, n_out).difference(disk_polygon((0, 0), r_in, n_in)))


def test_square_offsets():
    assert offset_length(SQUARE, 0.0) == pytest.approx(8.0, rel=1e-14)
    # inner square 4 - 8t plus outer rounded square 4 + 2 pi t
    assert offset_length(SQUARE, 0.25) == pytest.approx(2 + 4 + 0.5 * np.pi, rel=1e-12)
    assert offset_length(SQUARE, 0.6) == pytest.approx(4 + 2 * np.pi * 0.6, rel=1e-12)


def test_raster_cross_check():
    for t in (0.1, 0.3, 0.45):
        exact = offset_length(SQUARE, t)
        assert raster_offset_length(SQUARE, t) == pytest.approx(exact, rel=0.02)
    reg = PolygonalRegion((random_star_polygon(np.random.default_rng(4), 9),))
    assert raster_offset_length(reg, 0.2) == pytest.approx(offset_length(reg, 0.2), rel=0.02)


def test_offset_length_window():
    # window: only the part inside the disk counts
    full = offset_length(SQUARE, 0.2)
    far = offset_length(SQUARE, 0.2, window=((10.0, 10.0), 1.0))
    assert far == 0.0
    assert offset_length(SQUARE, 0.2, window=((0.5, 0.5), 100.0)) == pytest.approx(full)


def test_square_euler():
    assert neighborhood_euler(SQUARE, 0.1) == 0
    assert neighborhood_euler(SQUARE, 0.6) == 1
    with pytest.warns(MergingTimeWarning):
        neighborhood_euler(SQUARE, 0.5)
    two = PolygonalRegion.from_geometry(box(0, 0, 1, 1).union(box(5, 0, 6, 1)))
    assert neighborhood_euler(two, 0.1) == 0
    with pytest.raises(ValueError):
        neighborhood_euler(SQUARE, 0.0)


def test_region_validation():
    with pytest.raises(ValueError):
        PolygonalRegion((np.array([[0, 0], [1, 0]], float),))
    bow = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], float)
    with pytest.raises(ValueError):
        PolygonalRegion((bow,))
    a = np.array([[0, 0], [2, 0], [2, 2], [0, 2]], float)
    with pytest.raises(ValueError):
        PolygonalRegion((a, a + 1.0))          # crossing loops


def test_region_csv_roundtrip(tmp_path):
    reg = annulus()
    p = tmp_path / "r.csv"
    write_region_csv(p, reg)
    assert p.read_text().splitlines()[0] == "loop,x,y"
    back = read_region_csv(p)
    assert len(back) == len(reg)
    for a, b in zip(back.loops, reg.loops):
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("seed", range(10))
def test_level_length_bound_simple_polygons(seed):
    rng = np.random.default_rng(seed)
    reg = PolygonalRegion((random_star_polygon(rng, int(rng.integers(3, 13))),))
    P = reg.perimeter
    for t in np.linspace(0, P / (2 * np.pi), 15)[1:]:
        assert offset_length(reg, t) <= 2 * P * (1 + 1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_jumps_are_downward(seed):
    rng = np.random.default_rng(100 + seed)
    reg = PolygonalRegion((random_star_polygon(rng, 8, spread=0.6),))
    h = 1e-7
    for tm in merge_times(reg)[:20]:
        if tm <= 2 * h:
            continue
        assert offset_length(reg, tm + h) <= offset_length(reg, tm - h) + 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_euler_evolution(seed):
    rng = np.random.default_rng(200 + seed)
    reg = PolygonalRegion((random_star_polygon(rng, 9),))
    poly = Polygon(reg.loops[0])
    tstar = poly.exterior.distance(polylabel(poly, tolerance=1e-6))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MergingTimeWarning)
        for t in np.linspace(0.01, 1.5, 25):
            chi = neighborhood_euler(reg, t)
            assert chi <= 1
            if t < 0.95 * tstar:
                assert chi <= 0
        assert neighborhood_euler(reg, 1.05 * tstar + 1e-6) == 1


def test_annulus_routes_small_loop():
    reg = annulus()
    dec = decompose_global(reg, 0.2)
    assert dec.rounds == ((0,),)
    assert dec.rejected == (1,)
    assert dec.omega0.equals(Polygon(reg.loops[0]))
    assert dec.omega1.area == pytest.approx(Polygon(reg.loops[1]).area, rel=1e-12)
    assert dec.ok
    json.loads(dec.to_json())


def test_simply_connected_is_kept():
    reg = PolygonalRegion((random_star_polygon(np.random.default_rng(9), 7),))
    dec = decompose_global(reg, 0.1)
    assert dec.omega1.is_empty or dec.omega1.area == 0
    assert dec.omega0.symmetric_difference(reg.geometry).area < 1e-12


def test_delta0_range():
    with pytest.raises(ValueError):
        decompose_global(SQUARE, 0.0)
    with pytest.raises(ValueError):
        decompose_global(SQUARE, 4.0 / (2 * np.pi) * 1.01)


@pytest.mark.parametrize("seed", range(10))
def test_random_global_decompositions(seed):
    reg, d0 = global_case(seed)
    dec = decompose_global(reg, d0)
    assert dec.ok, dec.diagnostics


def test_local_single_arc():
    # half plane through the ball: gamma is the chord and nothing is removed
    reg = PolygonalRegion.from_geometry(box(-5, -5, 0, 5))
    loc = decompose_local(reg, (0.0, 0.0), 1.0, 0.015)
    assert loc.ok
    assert loc.omega1.is_empty or loc.omega1.area < 1e-12
    assert loc.gamma_length == pytest.approx(2.0, rel=1e-9)


def test_local_island_goes_to_remainder():
    island = Polygon(random_star_polygon(np.random.default_rng(1), 6, (0.3, 0.0), 0.01, 0.3))
    reg = PolygonalRegion.from_geometry(box(-5, -5, 0, 5).union(island))
    d0 = 0.015
    loc = decompose_local(reg, (0.0, 0.0), 1.0, d0)
    assert loc.ok
    assert loc.omega1.area == pytest.approx(island.area, rel=1e-9)
    assert loc.omega1.length <= 2 * np.pi * d0


def test_local_wiggles_are_flattened():
    # a comb of thin teeth confined to the outer annulus of the ball
    base = box(-5, -5, 0, 5)
    rho, d0 = 1.0, 0.015
    y0 = np.sqrt(rho ** 2 - 0.01 ** 2) - 0.01        # tooth confined to the annulus
    tooth = box(-0.01, y0 - 0.015, 0.015, y0)
    reg = PolygonalRegion.from_geometry(base.union(tooth))
    loc = decompose_local(reg, (0.0, 0.0), rho, d0)
    assert loc.ok
    inside = reg.geometry.boundary.intersection(disk_polygon((0, 0), rho, 512)).length
    assert loc.gamma_length <= inside * (1 + 1e-9)


def test_local_preconditions():
    with pytest.raises(ValueError):
        decompose_local(SQUARE, (20.0, 20.0), 1.0, 0.01)
    with pytest.raises(ValueError):
        decompose_local(SQUARE, (0.5, 0.5), 1.0, 1.0)


@pytest.mark.parametrize("seed", range(6))
def test_random_local_decompositions(seed):
    reg, c, rho, d0 = local_case(seed)
    try:
        loc = decompose_local(reg, c, rho, d0)
    except ValueError:
        pytest.skip("drawn ball misses the region")
    assert loc.ok


def test_strict_raises_with_diagnostics(monkeypatch):
    import chargedwall.levelset as ls
    reg = annulus()
    monkeypatch.setattr(ls, "_rel_ok", lambda lhs, rhs, rtol: False)
    with pytest.raises(LevelSetError) as info:
        decompose_global(reg, 0.2)
    assert info.value.diagnostics
    assert not decompose_global(reg, 0.2, strict=False).ok


@given(st.integers(0, 2 ** 32 - 1))
def test_jitter_keeps_region_valid(seed):
    reg, _ = global_case(seed % 500)
    j = reg.jittered(seed)
    assert len(j) == len(reg)
    assert abs(j.perimeter - reg.perimeter) < 1e-6
