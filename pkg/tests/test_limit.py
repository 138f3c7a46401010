import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from chargedwall.limit import (PolygonalSet, PolygonalWall, classify_minimizer, ground_state_energy,
                               limit_energy, limit_report, line_density_f, make_wall,
                               min_clearance, read_wall_csv, straight_wall, write_wall_csv,
                               zigzag_refine)

from generators import random_refinable, random_wall


def test_density_values():
    assert line_density_f(0.0) == 1.0
    assert line_density_f(1.0) == 2.0
    assert line_density_f(2.0) == 4.0
    with pytest.raises(ValueError):
        line_density_f(-0.1)
    np.testing.assert_array_equal(line_density_f(np.array([0.5, 3.0])), [1.25, 6.0])


def envelope(s):
    # independent oracle: numerical inf over a >= 1 of a + s^2 / a
    if s <= 0:
        return 1.0
    r = optimize.minimize_scalar(lambda a: a + s * s / a, bounds=(1.0, max(2.0, 4 * s)),
                                 method="bounded", options={"xatol": 1e-12})
    return min(r.fun, 1.0 + s * s)


def test_density_is_lower_envelope():
    s = np.random.default_rng(1).uniform(0, 5, 200)
    for x in s:
        assert line_density_f(x) == pytest.approx(envelope(x), abs=1e-6)


def test_straight_wall_energies():
    ell = 1.7
    w = straight_wall(ell)
    assert limit_energy(w, 0.5) == pytest.approx(3 * ell, rel=1e-15)
    assert limit_energy(w, 4.0) == pytest.approx(8 * ell, rel=1e-15)


def test_ground_state_branches():
    for ell in (0.5, 1.0, 3.0):
        assert ground_state_energy(0, ell) == 2 * ell
        assert ground_state_energy(1, ell) == 4 * ell
        assert ground_state_energy(4, ell) == 8 * ell
    with pytest.raises(ValueError):
        ground_state_energy(-1, 1)


def test_ground_state_c1_at_one():
    h = 1e-6
    left = (ground_state_energy(1, 1) - ground_state_energy(1 - h, 1)) / h
    right = (ground_state_energy(1 + h, 1) - ground_state_energy(1, 1)) / h
    assert left == pytest.approx(2.0, abs=1e-5)
    assert right == pytest.approx(2.0, abs=1e-5)
    assert abs(left - right) < 1e-5


def test_one_period_zigzag_has_straight_energy():
    # slope with |n1| = 1/2: per unit height the wall length is 2
    ell = 1.0
    dx = np.sqrt(3) / 4
    w = make_wall([(0, 0), (dx, 0.25), (0, 0.5), (dx, 0.75)], ell)
    assert np.allclose(np.abs(w.normals[:, 0]), 0.5)
    assert w.lengths.sum() == pytest.approx(2 * ell)
    assert limit_energy(w, 4.0) == pytest.approx(8 * ell, rel=1e-14)
    ok, info = classify_minimizer(w, 4.0)
    assert ok and abs(info["gap"]) <= 1e-12


def test_refine_vertical_edge():
    w = straight_wall(1.0)
    z = zigzag_refine(w, 4.0, k=1)
    n = z.normals
    np.testing.assert_allclose(n[:, 0], -0.5, atol=1e-15)
    np.testing.assert_allclose(np.abs(n[:, 1]), np.sqrt(3) / 2, atol=1e-15)
    assert set(np.sign(n[:, 1]).tolist()) == {-1.0, 1.0}
    assert limit_energy(z, 4.0) == pytest.approx(8.0, rel=1e-14)


def test_refine_critical_edge_unchanged():
    lam = 4.0
    dx = np.sqrt(3) / 4
    w = make_wall([(0, 0), (dx, 0.25), (0, 0.5), (dx, 0.75)], 1.0)
    z = zigzag_refine(w, lam, k=1)
    np.testing.assert_array_equal(z.vertices, w.vertices)


def test_refine_rejects_small_lambda_and_big_k():
    with pytest.raises(ValueError):
        zigzag_refine(straight_wall(1.0), 0.5)
    with pytest.raises(ValueError, match="non-intersection"):
        zigzag_refine(straight_wall(1.0), 4.0, k=2000)


def test_default_k_respects_clearance():
    z = zigzag_refine(straight_wall(1.0), 4.0)
    assert min_clearance(z.chains, 1.0) >= 1e-3
    assert len(z.vertices) > 3


@given(st.integers(0, 2 ** 32 - 1))
def test_flux_invariant(seed):
    w = random_wall(np.random.default_rng(seed))
    assert w.flux() == pytest.approx(w.ell, rel=1e-12)


@given(st.integers(0, 2 ** 32 - 1))
def test_refinement_invariance(seed):
    w, lam, z = random_refinable(np.random.default_rng(seed))
    assert abs(limit_energy(z, lam) - limit_energy(w, lam)) <= 1e-12 * limit_energy(w, lam)
    assert z.flux() == pytest.approx(w.ell, rel=1e-12)
    assert np.all(np.abs(z.normals[:, 0]) <= lam ** -0.5 * (1 + 1e-12))


def test_classifier_matches_energy_gap():
    rng = np.random.default_rng(5)
    for _ in range(60):
        lam = float(rng.uniform(0.1, 9))
        if rng.uniform() < 0.5:
            w = straight_wall(1.0, rng.uniform(-0.2, 0.2))
            if lam > 1:
                w = zigzag_refine(w, lam, k=int(rng.integers(1, 4)))
        else:
            w = random_wall(rng, amp=float(rng.uniform(0.01, 0.3)))
        ok, info = classify_minimizer(w, lam)
        eg = ground_state_energy(lam, 1.0)
        assert ok == (abs(limit_energy(w, lam) - eg) <= 1e-12 * eg)


def test_classifier_examples():
    for lam in (0.3, 1.0, 5.0):
        assert classify_minimizer(straight_wall(1.0), lam)[0]
    # a flat (n1 = 0) piece violates the band
    w = make_wall([(0, 0), (0, 0.3), (0.2, 0.3 + 1e-9), (0.2, 0.6), (0.0, 0.8)], 1.0)
    assert not classify_minimizer(w, 2.0)[0]
    s = PolygonalSet([np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)])
    ok, info = classify_minimizer(s, 2.0)
    assert not ok and "graph" in info["reason"]


def test_polygonal_set_energy():
    s = PolygonalSet([np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)])
    # two vertical sides (|n1| = 1), two horizontal (n1 = 0)
    lam = 2.0
    assert limit_energy(s, lam) == pytest.approx(2 * (2 * 2 * np.sqrt(2)) + 2 * 2.0)
    z = zigzag_refine(s, lam, k=2)
    assert limit_energy(z, lam) == pytest.approx(limit_energy(s, lam), rel=1e-12)


def test_wall_validation():
    with pytest.raises(ValueError):
        PolygonalWall(np.array([[0, 0], [0.1, 0.5], [0.2, 1.0]]), 1.0)   # closure
    with pytest.raises(ValueError):
        PolygonalWall(np.array([[0, 0], [0, 0.6], [0, 0.4], [0, 1.0]]), 1.0)
    with pytest.raises(ValueError):
        PolygonalWall(np.array([[0, 0], [0, 1.0]]), 1.0)                 # edge > ell/2


def test_report_and_csv(tmp_path):
    w = zigzag_refine(straight_wall(1.0), 4.0, k=1)
    rep = limit_report(w, 4.0)
    assert rep["energy"] == pytest.approx(sum(e["energy"] for e in rep["per_edge"]))
    json.dumps(rep)
    p = tmp_path / "w.csv"
    write_wall_csv(p, w)
    assert p.read_text().splitlines()[0] == "x1,x2"
    np.testing.assert_array_equal(read_wall_csv(p, 1.0).vertices, w.vertices)


def brute_clearance(chains, period):
    from chargedwall.limit import _seg_seg_distance, _segments
    segs, owner, index = _segments(chains)
    counts = [len(c) - 1 for c in chains]
    best = np.inf
    for sh in ([0.0] if period is None else [0.0, period, -period]):
        for i in range(len(segs)):
            for j in range(len(segs)):
                if sh == 0 and i >= j:
                    continue
                same, di = owner[i] == owner[j], abs(index[i] - index[j])
                m = counts[owner[i]]
                if same and ((sh == 0 and (di <= 1 or di == m - 1)) or (sh != 0 and di == m - 1)):
                    continue
                d = _seg_seg_distance(segs[i:i + 1], segs[j:j + 1] + np.array([0, sh]))[0]
                best = min(best, d)
    return best


@pytest.mark.parametrize("seed", range(8))
def test_min_clearance_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    _, _, z = random_refinable(rng)
    assert min_clearance(z.chains, 1.0) == pytest.approx(brute_clearance(z.chains, 1.0), rel=1e-12)
    for reach in (1e-3, 0.05):
        assert min_clearance(z.chains, 1.0, reach) == pytest.approx(
            min(reach, brute_clearance(z.chains, 1.0)), rel=1e-12)
