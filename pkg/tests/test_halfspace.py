import math

import numpy as np
import pytest

from kinnet.coupling import halfmoment_rows
from kinnet.halfspace import (HalfSpaceError, albedo_fixpoint_node, extrapolation_length, fullmoment_halfspace,
                              halfmoment_halfspace_bounded, halfmoment_halfspace_unbounded, kinetic_halfspace_numeric,
                              layer_decay_rate, maxwell_halfspace)
from kinnet.topology import uniform_matrix

A = 1.0 / math.sqrt(3.0)
S = math.sqrt(2 * math.pi)


def test_maxwell_examples():
    s = maxwell_halfspace(1 / 3, 0.0, A, "bounded", "flux")
    assert s.rho_inf == pytest.approx(4 / 3, abs=1e-15)
    assert maxwell_halfspace(0.5, 0.0, 1.0, "unbounded", "flux").rho_inf == pytest.approx(S / 2, abs=1e-13)
    s = maxwell_halfspace(0.25, -A, A)
    assert (s.rho_inf, s.q_inf) == pytest.approx((1.0, 0.0), abs=1e-15)
    assert (s.rho_out, s.q_out) == pytest.approx((0.5, -0.25), abs=1e-15)
    assert s.residual <= 1e-13


def test_fullmoment_equilibrium():
    s = fullmoment_halfspace(0.5, -A, A)
    assert (s.rho_inf, s.q_inf) == pytest.approx((1.0, 0.0), abs=1e-15)


def test_halfmoment_bounded_examples():
    s = halfmoment_halfspace_bounded(0.5, 1 / 3, 0.0, A, "flux")
    assert s.rho_inf == pytest.approx((9 * A + 4) / (6 * A + 3), abs=1e-14)
    assert s.rho_inf / 2 == pytest.approx(0.7113, abs=1e-4)
    assert s.gamma == pytest.approx(-0.15471, abs=1e-5)
    assert s.q_out == pytest.approx(-1 / 3, abs=1e-14)
    assert s.residual <= 1e-13
    s = halfmoment_halfspace_bounded(0.5, 0.25, -A, A)
    assert (s.rho_inf, s.q_inf, s.gamma) == pytest.approx((1, 0, 0), abs=1e-14)


def test_halfmoment_unbounded_examples():
    a = 1.0
    s = halfmoment_halfspace_unbounded(1 / S, 0.5, 0.0, a, "flux")
    formula = (math.pi * S + 2 * math.pi * (1 + a) - 2 * S - 8 * a) / (a * (S * math.pi + 2 * math.pi - 2 * S - 4))
    assert s.rho_inf == pytest.approx(formula, abs=1e-12)
    assert s.rho_inf == pytest.approx(1.443, abs=1e-3)
    for a in (1.0, A, 2.0):
        s = halfmoment_halfspace_unbounded(0.5, a / S, -a, a)
        assert (s.rho_inf, s.q_inf, s.gamma) == pytest.approx((1, 0, 0), abs=1e-13)


def test_maxwell_is_halfmoment_without_layer():
    q_in, _, _, _ = halfmoment_rows(A, "bounded")
    # with gamma = 0 the q+ row of the half-moment system is the Maxwell half-flux row
    np.testing.assert_allclose(q_in[:2], [0.25, 0.5])
    s = maxwell_halfspace(0.4, -0.3, A)
    assert q_in @ [s.rho_inf, s.q_inf, 0.0] == pytest.approx(0.4, abs=1e-15)


def test_layer_decay_rates():
    assert layer_decay_rate(A) == pytest.approx(-2 / A)
    lam = layer_decay_rate(1.0, "unbounded")
    assert lam == pytest.approx((math.pi - 2) / (math.pi - 4)) and lam < 0


def test_bad_constraint():
    with pytest.raises(ValueError):
        maxwell_halfspace(0.1, 0.0, A, constraint="other")


def test_numeric_equilibrium_input():
    s = kinetic_halfspace_numeric(np.full(20, 0.5), "riemann", -A, A, length=5, nx=100, nv=40)
    assert s.asymptotics.rho_inf == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(s.rho, 1.0, atol=1e-10)
    np.testing.assert_allclose(s.outgoing, 0.5, atol=1e-10)
    # started from the equilibrium moments the first sweep is already the fixed point
    x0 = np.concatenate([np.ones(100), np.zeros(100)])
    s = kinetic_halfspace_numeric(np.full(20, 0.5), "riemann", -A, A, length=5, nx=100, nv=40, method="source",
                                  x0=x0)
    assert s.iterations <= 2 and s.residual < 1e-13


def test_numeric_extrapolation_small_grid():
    s = kinetic_halfspace_numeric(lambda v: v, "flux", 0.0, A, length=20, nx=500, nv=100)
    assert s.extrapolation_length == pytest.approx(0.7104, abs=3e-3)
    assert s.flux_spread < 1e-9
    vp = s.grid.v[s.grid.positive]
    half_in = float((vp * vp).sum() * s.grid.dv)
    assert half_in + s.asymptotics.q_out == pytest.approx(0.0, abs=1e-8)


def test_numeric_gmres_and_source_agree():
    kw = dict(length=10, nx=200, nv=40)
    g = kinetic_halfspace_numeric(lambda v: v, "flux", 0.0, A, **kw)
    s = kinetic_halfspace_numeric(lambda v: v, "flux", 0.0, A, method="source", tol=1e-12, maxiter=20000, **kw)
    assert g.asymptotics.rho_inf == pytest.approx(s.asymptotics.rho_inf, abs=1e-6)


def test_numeric_source_nonconvergence():
    with pytest.raises(HalfSpaceError):
        kinetic_halfspace_numeric(lambda v: v, "flux", 0.0, A, length=10, nx=100, nv=20, method="source", maxiter=3)


def test_ordering_of_methods():
    m = extrapolation_length("maxwell")
    h = extrapolation_length("halfmoment")
    n = extrapolation_length("numeric", length=20, nx=500, nv=100)
    assert m == pytest.approx(2 / 3, abs=1e-15)
    assert m < n < h


def test_extrapolation_unbounded():
    assert extrapolation_length("halfmoment", "unbounded", 1.0) == pytest.approx(1.443, abs=1e-3)
    with pytest.raises(ValueError):
        extrapolation_length("numeric", "unbounded")
    with pytest.raises(ValueError):
        extrapolation_length("variational")


def test_albedo_symmetric_node():
    fp = albedo_fixpoint_node(uniform_matrix(3), [-0.3] * 3, A, length=8, nx=100, nv=40, tol=1e-9)
    np.testing.assert_allclose(fp.q_inf, 0.0, atol=1e-9)
    np.testing.assert_allclose(fp.rho_inf, 0.3 / A, atol=1e-8)
    assert fp.fitted_K is None


def test_albedo_tripod_small():
    r1 = [-A, -2 * A / 3, 0.0]
    fp = albedo_fixpoint_node(uniform_matrix(3), r1, A, length=10, nx=200, nv=60, tol=1e-8)
    assert abs(fp.q_inf.sum()) < 1e-6
    assert fp.fitted_K == pytest.approx(0.7313, rel=0.05)
