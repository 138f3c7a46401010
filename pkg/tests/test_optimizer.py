import math
import os

import numpy as np
import pytest

from chargedwall.energy import EnergyParams, total_energy
from chargedwall.limit import straight_wall, zigzag_refine
from chargedwall.optimizer import (DescentError, DescentOptions, IterationLog, WallTrace,
                                   extract_wall, initial_field, minimize, slope_stats,
                                   write_log_csv)
from chargedwall.recovery import build_recovery_field
from chargedwall.strip import load_field, make_admissible_field, make_background, make_grid

SMALL = make_grid(1.0, 2.0, 64, 32)


def test_options_validation():
    for kw in ({"max_iters": 0}, {"tol": -1.0}, {"rule": "newton"}, {"shrink": 1.0},
               {"armijo": 0.0}, {"step": 0.0}):
        with pytest.raises(ValueError):
            DescentOptions(**kw)
    assert DescentOptions().tolerance(0.02) == pytest.approx(5e-3)
    assert DescentOptions(tol=1e-3).tolerance(0.02) == 1e-3


def test_initial_field_checks():
    f = initial_field(SMALL, 0.1, amplitude=0.0)
    assert np.all(f.theta == f.theta[:, :1])
    with pytest.raises(ValueError):
        initial_field(SMALL, 0.1, amplitude=0.95)
    a = initial_field(SMALL, 0.1, seed=3)
    b = initial_field(SMALL, 0.1, seed=3)
    np.testing.assert_array_equal(a.theta, b.theta)


@pytest.mark.parametrize("rule", ["armijo", "bb"])
def test_descent_is_monotone_and_keeps_clamps(quiet, rule):
    eps = 0.05
    f0 = build_recovery_field(straight_wall(1.0), eps, SMALL)
    f0 = f0.with_theta(f0.theta + 0.2 * np.sin(2 * np.pi * SMALL.x2)[None, :] * SMALL.free_rows[:, None])
    bg = make_background(SMALL)
    f, br, log = minimize(f0, bg, EnergyParams(eps, 0.0), DescentOptions(rule=rule, max_iters=300))
    tot = log.column("total")
    assert np.all(np.diff(tot) <= 0)
    assert br.total <= total_energy(f0, bg, EnergyParams(eps, 0.0)).total
    clamp = ~SMALL.free_rows
    assert np.array_equal(f.theta[clamp], f0.theta[clamp])
    assert log.rows[0]["iter"] == 0 and len(log) == log.rows[-1]["iter"] + 1


def test_fixed_rule_runs(quiet):
    f0 = initial_field(SMALL, 0.1)
    f, _, log = minimize(f0, make_background(SMALL), EnergyParams(0.1, 1.0),
                         DescentOptions(rule="fixed", step=1e-3, max_iters=5))
    assert len(log) == 6


def test_failure_dumps_state(quiet, tmp_path):
    f0 = initial_field(SMALL, 0.1)
    opts = DescentOptions(rule="armijo", step=1e6, max_backtracks=1, dump_dir=str(tmp_path),
                          tol=1e-12)
    with pytest.raises(DescentError) as info:
        minimize(f0, make_background(SMALL), EnergyParams(0.1, 1.0), opts)
    assert os.path.exists(info.value.dump)
    back = load_field(info.value.dump)
    np.testing.assert_array_equal(back.theta, f0.theta)


def test_lambda_zero_reaches_wall_energy(quiet):
    g = make_grid(4.0, 2.0, 256, 128)
    f0 = initial_field(g, 0.02, seed=0, amplitude=0.15, modes=(2,))
    f, br, log = minimize(f0, make_background(g), EnergyParams(0.02, 0.0), DescentOptions(rule="bb"))
    assert log.converged
    assert br.total == pytest.approx(8.0, rel=0.15)
    # equipartition of the one-dimensional layer
    assert br.exchange == pytest.approx(br.anisotropy, rel=0.1)


def test_minimal_energy_trades_charge_for_length(quiet):
    # E = A + lam S: at minimizers S falls and E rises with lam
    f0 = initial_field(SMALL, 0.1, seed=1)
    bg = make_background(SMALL)
    lams = np.array([0.25, 1.0, 2.0, 4.0])
    stray, total = [], []
    for lam in lams:
        _, br, _ = minimize(f0, bg, EnergyParams(0.1, lam), DescentOptions(rule="bb", max_iters=400))
        stray.append(br.stray)
        total.append(br.total)
    per_lam = np.array(stray) / lams
    assert np.all(np.diff(per_lam) <= 1e-3 * per_lam[:-1])
    assert np.all(np.diff(total) >= -1e-3 * np.array(total[:-1]))


def test_extract_straight_wall(quiet):
    g = make_grid(1.0, 2.0, 128, 16)
    t = extract_wall(build_recovery_field(straight_wall(1.0), 0.05, g))
    assert t.valid
    assert np.abs(t.gamma).max() <= g.hx / 2
    assert np.allclose(slope_stats(t)["n1"], 1.0)


def test_extract_zigzag_slopes(quiet):
    g = make_grid(1.0, 2.0, 512, 128)
    z = zigzag_refine(straight_wall(1.0, -0.25 * math.sqrt(3) / 2), 4.0, k=1)
    t = extract_wall(build_recovery_field(z, 0.005, g, lam=4.0))
    assert t.valid
    st = slope_stats(t)
    # away from the rounded corners the slope is +-sqrt(3), |n1| = 1/2
    assert np.median(st["n1"]) == pytest.approx(0.5, rel=0.1)


def test_uniform_field_is_invalid():
    t = extract_wall(make_admissible_field(SMALL, 0.0))
    assert not t.valid
    with pytest.raises(ValueError, match="invalid"):
        slope_stats(t)


def test_slope_stats_synthetic():
    x2 = np.linspace(0, 1, 8, endpoint=False)
    t = WallTrace(x2, np.zeros(8), np.ones(8, int), 1.0)
    assert slope_stats(t)["mean_n1"] == 1.0
    gamma = np.where(np.arange(8) % 2 == 0, 0.0, 1 / 8)      # slopes +-1
    st = slope_stats(WallTrace(x2, gamma, np.ones(8, int), 1.0))
    np.testing.assert_allclose(st["n1"], 1 / np.sqrt(2))


def test_log_csv(tmp_path, quiet):
    f0 = initial_field(SMALL, 0.1)
    _, _, log = minimize(f0, make_background(SMALL), EnergyParams(0.1, 1.0),
                         DescentOptions(max_iters=3))
    p = tmp_path / "log.csv"
    write_log_csv(p, log)
    lines = p.read_text().splitlines()
    assert lines[0] == "iter,exchange,anisotropy,stray,total,grad_norm,step"
    assert len(lines) == len(log) + 1
    assert isinstance(log, IterationLog)
