import math

import mpmath
import numpy as np
import pytest

from tacgap.errors import DomainModelError, ParameterError
from tacgap.quad import (
    IntervalUnion,
    composite_rule,
    gauss_legendre,
    map_affine,
    semi_infinite_rule,
)
from tacgap.specfun import airy


@pytest.mark.parametrize("n", [1, 2, 5, 16, 64, 200, 512])
def test_nodes_match_numpy_leggauss(n):
    rule = gauss_legendre(n)
    x, _ = np.polynomial.legendre.leggauss(n)
    assert np.max(np.abs(rule.nodes - x)) <= 1e-14


@pytest.mark.parametrize("n", [3, 5, 16, 40])
def test_rule_matches_mpmath(n):
    mpmath.mp.dps = 40
    rule = gauss_legendre(n)
    for x, w in zip(rule.nodes, rule.weights):
        xm = mpmath.findroot(lambda t: mpmath.legendre(n, t), mpmath.mpf(float(x)))
        dp = mpmath.diff(lambda t: mpmath.legendre(n, t), xm)
        wm = 2 / ((1 - xm**2) * dp**2)
        assert abs(x - float(xm)) <= 2e-16
        assert abs(w - float(wm)) <= 1e-14 * float(wm)


def test_small_rules():
    r1 = gauss_legendre(1)
    assert list(r1.nodes) == [0.0] and list(r1.weights) == [2.0]
    r2 = gauss_legendre(2)
    assert r2.nodes == pytest.approx([-1 / math.sqrt(3), 1 / math.sqrt(3)], abs=1e-15)
    assert r2.weights == pytest.approx([1.0, 1.0], abs=1e-15)


def test_sixteen_point_monomials():
    r = gauss_legendre(16)
    assert abs(r.integrate(r.nodes**31)) <= 1e-15
    assert r.integrate(r.nodes**30) == pytest.approx(2 / 31, rel=1e-14)


@pytest.mark.parametrize("n", [4, 8, 16])
def test_degree_exactness(n):
    r = gauss_legendre(n)
    for k in range(2 * n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(r.integrate(r.nodes**k) - exact) <= 1e-13


def test_rule_invariants():
    r = composite_rule(IntervalUnion(((-2.0, -1.0), (0.0, 3.0))), 12)
    assert np.all(r.weights > 0)
    for sl in r.slices:
        assert np.all(np.diff(r.nodes[sl]) > 0)
    assert np.sum(r.weights) == pytest.approx(4.0, rel=1e-13)


def test_bad_order_rejected():
    with pytest.raises(ParameterError):
        gauss_legendre(0)
    with pytest.raises(ParameterError):
        gauss_legendre(513)


def test_map_affine_examples():
    r = map_affine(gauss_legendre(2), 0.0, 2.0)
    assert np.sum(r.weights) == pytest.approx(2.0, abs=1e-15)
    r = map_affine(gauss_legendre(2), 0.0, 1.0)
    assert r.integrate(r.nodes) == 0.5
    r = map_affine(gauss_legendre(8), 0.0, 1.0)
    assert r.integrate(np.exp(r.nodes)) == pytest.approx(math.e - 1, abs=1e-13)


def test_semi_infinite_airy_integral():
    r = semi_infinite_rule(0.0, 1e-12, 64)
    assert r.integrate(airy(r.nodes)[0]) == pytest.approx(1 / 3, abs=1e-10)


def test_semi_infinite_bounds():
    r = semi_infinite_rule(5.0, 1e-12, 16)
    assert np.min(r.nodes) >= 5.0 and r.upper > 5.0


def test_semi_infinite_self_refinement():
    def integral(n):
        r = semi_infinite_rule(0.0, 1e-12, n)
        return r.integrate(airy(r.nodes)[0] ** 2)

    assert abs(integral(64) - integral(128)) <= 1e-11


def test_truncation_soundness():
    tol = 1e-12
    r = semi_infinite_rule(0.0, tol, 64)
    t = r.upper
    r2 = map_affine(gauss_legendre(128), 0.0, 2 * t)
    a = r.integrate(airy(r.nodes)[0] ** 2)
    b = r2.integrate(airy(r2.nodes)[0] ** 2)
    assert abs(a - b) <= tol


def test_composite_examples():
    single = composite_rule(IntervalUnion(((0.0, 1.0),)), 6)
    mapped = map_affine(gauss_legendre(6), 0.0, 1.0)
    assert np.array_equal(single.nodes, mapped.nodes)
    assert np.array_equal(single.weights, mapped.weights)

    two = composite_rule(IntervalUnion(((0.0, 1.0), (2.0, 3.0))), 4)
    assert np.sum(two.weights) == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("n_per", range(2, 33))
def test_composite_linear_is_exact(n_per):
    r = composite_rule(IntervalUnion(((0.0, 1.0), (2.0, 3.0))), n_per)
    assert r.integrate(r.nodes) == 3.0


def test_composite_additivity_bitwise():
    dom = IntervalUnion(((-1.0, 0.5), (1.0, 2.5), (3.0, 4.0)))
    r = composite_rule(dom, 9)
    f = np.cos(r.nodes)
    pieces = 0.0
    for lo, hi in dom.pieces:
        p = map_affine(gauss_legendre(9), lo, hi)
        pieces += math.fsum(p.weights * np.cos(p.nodes))
    assert r.integrate(f) == pieces


def test_interval_union_validation():
    with pytest.raises(DomainModelError):
        IntervalUnion(((0.0, 2.0), (1.0, 3.0)))
    with pytest.raises(DomainModelError):
        IntervalUnion(((1.0, 0.0),))
    with pytest.raises(ParameterError):
        IntervalUnion(((0.0, math.inf),))
    assert IntervalUnion.parse("-3:-1, 0:2").pieces == ((-3.0, -1.0), (0.0, 2.0))
    with pytest.raises(ParameterError):
        IntervalUnion.parse("1-2")


def test_empty_domain_rule():
    r = composite_rule(IntervalUnion(), 8)
    assert len(r) == 0 and r.integrate(r.nodes) == 0.0


def test_rule_arrays_read_only():
    r = gauss_legendre(4)
    with pytest.raises(ValueError):
        r.nodes[0] = 1.0
