import math

import pytest

from chargedwall.units import thickness_for_lambda, to_dimensionless


def test_known_film():
    p = to_dimensionless(d=5e-9, w=1e-6, t=2e-8, Q=1.0)
    assert p.epsilon == pytest.approx(5e-3)
    assert p.alpha == pytest.approx(50.0)
    assert p.lam == pytest.approx(2e-8 * math.log(200) / (2 * math.pi * 5e-9))
    assert set(p.as_dict()) == {"epsilon", "lambda", "alpha"}


def test_quality_factor_shrinks_epsilon():
    a = to_dimensionless(5e-9, 1e-6, 2e-8, 1.0)
    b = to_dimensionless(5e-9, 1e-6, 2e-8, 4.0)
    assert b.epsilon == pytest.approx(a.epsilon / 2)


@pytest.mark.parametrize("lam", [0.25, 1.0, 4.0])
def test_thickness_inverts_lambda(lam):
    t = thickness_for_lambda(lam, d=5e-9, w=1e-6, Q=2.0)
    assert to_dimensionless(5e-9, 1e-6, t, 2.0).lam == pytest.approx(lam, rel=1e-12)


@pytest.mark.parametrize("args", [(0, 1e-6, 1e-8, 1), (5e-9, 1e-6, -1e-8, 1),
                                  (5e-9, 1e-6, 1e-8, float("nan")), (2e-6, 1e-6, 1e-8, 1)])
def test_rejects_bad_input(args):
    with pytest.raises(ValueError):
        to_dimensionless(*args)
    with pytest.raises(ValueError):
        thickness_for_lambda(1.0, 2e-6, 1e-6, 1.0)
