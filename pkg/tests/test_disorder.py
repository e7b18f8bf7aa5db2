import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bhdisorder import disorder as dis
from conftest import simpson


def test_bernoulli_atoms():
    b = dis.bernoulli(0.5, 2)
    assert b.atoms == ((0.0, 0.5), (2.0, 0.5))
    assert dis.bernoulli(0.5, 4.5).atoms == ((0.0, 0.5), (4.5, 0.5))


def test_bernoulli_zero_width_merges_to_point_mass():
    b = dis.bernoulli(0.3, 0)
    assert b.is_point_mass
    assert b.atoms == ((0.0, 1.0),)


@pytest.mark.parametrize("p, eps", [(0.0, 1.0), (1.0, 1.0), (-0.1, 1.0), (0.5, -1.0)])
def test_bernoulli_domain(p, eps):
    with pytest.raises(ValueError):
        dis.bernoulli(p, eps)


def test_multinomial():
    t = dis.multinomial_equidistant(3, 10)
    np.testing.assert_allclose(t.values, [0, 5, 10])
    np.testing.assert_allclose(t.weights, [1 / 3] * 3)
    m = dis.multinomial_equidistant(10, 10)
    np.testing.assert_allclose(m.values, np.arange(10) * 10 / 9)
    assert dis.multinomial_equidistant(2, 2) == dis.bernoulli(0.5, 2)
    assert dis.trinomial(10) == t


@pytest.mark.parametrize("m", [1, 0, 2.5])
def test_multinomial_domain(m):
    with pytest.raises(ValueError):
        dis.multinomial_equidistant(m, 1.0)


def test_spec_invariants():
    with pytest.raises(ValueError):
        dis.discrete([(1.0, 0.5), (2.0, 0.5)])  # minimum must be 0
    with pytest.raises(ValueError):
        dis.discrete([(0.0, 0.5), (2.0, 0.4)])
    with pytest.raises(ValueError):
        dis.uniform(-1)
    assert dis.uniform(0).is_point_mass


def test_expect_examples():
    assert dis.expect(dis.bernoulli(0.5, 2), lambda e: e) == 1.0
    assert dis.expect(dis.uniform(3), lambda e: e) == pytest.approx(1.5, abs=1e-12)
    ref = simpson(lambda e: math.tanh(1 - e), 0, 2) / 2
    got = dis.expect(dis.uniform(2), lambda e: np.tanh(1 - e))
    assert abs(got - ref) < 1e-9


def test_expect_kink_with_breakpoint():
    # |e - 0.7| has a kink; marking it makes Gauss-Legendre exact
    got = dis.expect(dis.uniform(2), lambda e: np.abs(e - 0.7), breakpoints=[0.7])
    assert got == pytest.approx((0.7**2 + 1.3**2) / 4, abs=1e-14)


def test_expect_boundary_layer():
    beta = 400.0
    f = lambda e: np.tanh(beta * (e - 1.3))
    got = dis.expect(dis.uniform(2), f, breakpoints=[1.3], layer=1 / beta)
    # exact: integral of tanh(beta (e - c)) = log cosh / beta
    lc = lambda u: abs(u) + math.log1p(math.exp(-2 * abs(u))) - math.log(2)
    exact = (lc(beta * 0.7) - lc(beta * 1.3)) / beta / 2
    assert got == pytest.approx(exact, abs=1e-12)


def test_expect_nonconvergence_carries_estimates():
    quad = dis.QuadratureConfig(order=2, tol=1e-30, atol=0.0, max_doublings=2)
    with pytest.raises(dis.QuadratureError) as info:
        dis.expect(dis.uniform(1), lambda e: np.sin(40 * e), quad)
    assert len(info.value.estimates) == 2


def test_log_expect_matches_expect():
    spec = dis.uniform(2)
    a = dis.log_expect(spec, lambda e: -3 * e)
    b = math.log(dis.expect(spec, lambda e: np.exp(-3 * e)))
    assert a == pytest.approx(b, rel=1e-12)
    assert dis.log_expect(dis.bernoulli(0.25, 1), lambda e: -1e4 * e - 900) == pytest.approx(
        math.log(0.75) - 900)


@given(st.floats(-3, 3), st.floats(0.1, 5), st.sampled_from(["b", "u", "m"]))
def test_expect_linear(alpha, eps, kind):
    spec = {"b": dis.bernoulli(0.3, eps), "u": dis.uniform(eps),
            "m": dis.multinomial_equidistant(5, eps)}[kind]
    g = lambda e: np.cos(e)
    h = lambda e: e**2
    lhs = dis.expect(spec, lambda e: alpha * g(e) + h(e))
    rhs = alpha * dis.expect(spec, g) + dis.expect(spec, h)
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)) + 1e-10 * abs(lhs))


@given(st.floats(-10, 10))
def test_expect_constant(c):
    assert dis.expect(dis.bernoulli(0.2, 3), lambda e: np.full_like(e, c)) == pytest.approx(c, abs=1e-15)
    assert dis.expect(dis.uniform(3), lambda e: np.full_like(e, c)) == pytest.approx(c, rel=1e-10, abs=1e-14)


def test_multinomial_converges_to_uniform():
    # equal weights on both endpoints leave an O(1/m) bias
    a = dis.expect(dis.multinomial_equidistant(1000, 1), np.tanh)
    b = dis.expect(dis.uniform(1), np.tanh)
    assert abs(a - b) < 1e-4
    assert abs(b - math.log(math.cosh(1))) < 1e-12


def test_sample():
    assert list(dis.sample(dis.point_mass(), 3, 5)) == [0.0] * 5
    x = dis.sample(dis.bernoulli(0.5, 2), 7, 10**5)
    assert abs(x.mean() - 1.0) < 0.02
    u = dis.sample(dis.uniform(3), 1, 10**5)
    assert abs(u.var() - 0.75) < 0.02
    np.testing.assert_array_equal(dis.sample(dis.uniform(3), 5, 10), dis.sample(dis.uniform(3), 5, 10))
    with pytest.raises(ValueError):
        dis.sample(dis.uniform(3), 5, 0)


@pytest.mark.parametrize("d", [
    {"kind": "bernoulli", "p": 0.5, "eps": 2.0},
    {"kind": "multinomial", "m": 10, "eps": 10.0},
    {"kind": "uniform", "eps": 3.0},
    {"kind": "trinomial", "eps": 10.0},
])
def test_dict_roundtrip(d):
    spec = dis.from_dict(d)
    assert spec.to_dict() == d
    assert dis.from_dict(spec.to_dict()) == spec


def test_from_dict_rejects_unknown():
    with pytest.raises(ValueError):
        dis.from_dict({"kind": "bernoulli", "p": 0.5, "eps": 2.0, "q": 1})
    with pytest.raises(ValueError):
        dis.from_dict({"kind": "gauss"})
    with pytest.raises(ValueError):
        dis.from_dict({"kind": "bernoulli", "p": 0.5})


def test_symmetry():
    assert dis.bernoulli(0.5, 2).is_symmetric()
    assert not dis.bernoulli(0.3, 2).is_symmetric()
    assert dis.multinomial_equidistant(10, 3).is_symmetric()
    assert dis.uniform(2).is_symmetric()
