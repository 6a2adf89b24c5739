import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efiefilt.errors import QuadratureFailure
from efiefilt.quadrature import (
    ALLOWED_ORDERS,
    RULE_DEGREE,
    QuadratureConfig,
    rule,
    static_potential_integrals,
    triangle_points,
)

from oracles import (
    polar_static_oracle_mp,
    static_moment_refined,
    static_potential_refined,
)


@pytest.mark.parametrize("order", ALLOWED_ORDERS)
def test_weights_sum_to_one(order):
    _, w = rule(order)
    assert abs(w.sum() - 1.0) < 1e-14


def exact_monomial(p, q):
    """int over reference triangle {x,y>=0, x+y<=1} of x^p y^q."""
    return (
        math.factorial(p) * math.factorial(q) / math.factorial(p + q + 2)
    )


@pytest.mark.parametrize("order", ALLOWED_ORDERS)
def test_degree_exactness(order):
    deg = RULE_DEGREE[order]
    bary, w = rule(order)
    # reference triangle (0,0), (1,0), (0,1); area 1/2, weights sum 1
    x = bary[:, 1]
    y = bary[:, 2]
    for p in range(deg + 1):
        for q in range(deg + 1 - p):
            got = 0.5 * np.dot(w, x**p * y**q)
            assert got == pytest.approx(exact_monomial(p, q), rel=1e-12, abs=1e-15)


@given(
    coeffs=st.lists(st.floats(-10, 10), min_size=6, max_size=6),
    order=st.sampled_from([4, 6, 7, 12]),
)
@settings(max_examples=50, deadline=None)
def test_quadratic_polynomials_exact(coeffs, order):
    c00, c10, c01, c20, c11, c02 = coeffs
    bary, w = rule(order)
    x, y = bary[:, 1], bary[:, 2]
    vals = c00 + c10 * x + c01 * y + c20 * x**2 + c11 * x * y + c02 * y**2
    got = 0.5 * np.dot(w, vals)
    want = (
        c00 * exact_monomial(0, 0)
        + c10 * exact_monomial(1, 0)
        + c01 * exact_monomial(0, 1)
        + c20 * exact_monomial(2, 0)
        + c11 * exact_monomial(1, 1)
        + c02 * exact_monomial(0, 2)
    )
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_triangle_points_affine_map():
    tri = np.array([[1.0, 2.0, 3.0], [4.0, 2.0, 3.0], [1.0, 5.0, 7.0]])
    pts = triangle_points(tri, 7)
    bary, _ = rule(7)
    assert np.allclose(pts, bary @ tri)


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(order=5)
    with pytest.raises(ValueError):
        QuadratureConfig(near_ratio=-1.0)
    assert QuadratureConfig().order == 7


TRI_REF = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
TRI_SKEW = np.array([[0.1, 0.2, 0.0], [0.9, -0.1, 0.3], [0.4, 0.8, -0.2]])


@pytest.mark.parametrize(
    "obs,tri",
    [
        ([0.5, 0.9, 0.7], TRI_REF),
        ([2.0, -1.0, 0.0], TRI_REF),
        ([0.2, -0.7, 0.4], TRI_SKEW),
        ([-0.5, 0.0, 0.0], TRI_REF),  # on an edge line, outside the segment
    ],
)
def test_static_integrals_vs_refined_gauss(obs, tri):
    # smooth observation points: plain refined Gauss converges and is a
    # fully independent check of the closed forms
    i0, ivec = static_potential_integrals(
        np.array([obs], dtype=float), np.array([tri], dtype=float)
    )
    ref0 = static_potential_refined(obs, tri, levels=5)
    refv = static_moment_refined(obs, tri, levels=5)
    assert i0[0] == pytest.approx(ref0, rel=1e-9)
    assert np.allclose(ivec[0], refv, rtol=1e-8, atol=1e-12)


def test_static_integrals_singular_points():
    # frozen values from the mpmath polar-coordinate oracle (tests/oracles.py)
    cases = [
        ((0.3, 0.3), 0.0, 2.41073220719934, 0.0328596346705156),
        ((0.25, 0.25), 1e-3, 2.36444042483771, 0.0978578517647475),
        ((1 / 3, 1 / 3), 0.0, 2.40722992316401, -0.0120732680291109),
    ]
    for rho, d, want_i0, want_ixy in cases:
        obs = np.array([[rho[0], rho[1], d]])
        tri = np.array([TRI_REF])
        i0, ivec = static_potential_integrals(obs, tri)
        assert i0[0] == pytest.approx(want_i0, rel=1e-12)
        assert ivec[0, 0] == pytest.approx(want_ixy, rel=1e-10)
        assert ivec[0, 1] == pytest.approx(want_ixy, rel=1e-10)
        assert ivec[0, 2] == pytest.approx(-d * want_i0, rel=1e-12, abs=1e-15)


def test_static_oracle_is_consistent():
    # spot check that the frozen values above reproduce from the oracle
    i0, ix, iy, iz = polar_static_oracle_mp((0.3, 0.3), 0.0, TRI_REF[:, :2])
    assert i0 == pytest.approx(2.41073220719934, rel=1e-12)
    assert ix == pytest.approx(0.0328596346705156, rel=1e-10)


def test_observation_on_edge_segment_rejected():
    obs = np.array([[0.5, 0.0, 0.0]])  # interior of the bottom edge
    with pytest.raises(QuadratureFailure):
        static_potential_integrals(obs, np.array([TRI_REF]))


def test_equilateral_selfterm_closed_form():
    # intint 1/R over T x T for an equilateral triangle of side a is
    # (3 ln 3 / 4) a^3; reproduced by analytic-inner + refined outer
    from oracles import selfterm_refined_outer

    a = 0.7
    tri = np.array([[0, 0, 0], [a, 0, 0], [a / 2, a * np.sqrt(3) / 2, 0]])
    got = selfterm_refined_outer(tri, levels=5)
    want = 0.75 * np.log(3.0) * a**3
    assert got == pytest.approx(want, rel=1e-8)
