import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hql.errors import DomainError, InputError, PreconditionError
from hql.young import (
    PKExponent,
    WeightedSamples,
    YoungFunction,
    doubling_exponent,
    lipschitz_membership_series,
    lower_doubling_check,
    luxembourg_norm,
    make_phi_pk,
    small_t_dominates,
)

PHIS = [(1, 0), (2, 0), (2, 1), (3, 2), (2, 3), (3.5, 0.5)]


def test_phi_values():
    assert make_phi_pk((2, 0))(0.5) == 0.25
    for e in PHIS:
        assert make_phi_pk(e)(0.0) == 0.0


def test_phi_23_against_mpmath():
    with mpmath.workdps(50):
        ref = mpmath.mpf("0.01") / mpmath.log(mpmath.e + 10) ** 3
    assert make_phi_pk((2, 3))(0.1) == pytest.approx(float(ref), rel=1e-14)


def test_phi_domain():
    with pytest.raises(DomainError):
        make_phi_pk((0.5, 0))
    with pytest.raises(DomainError):
        make_phi_pk((2, -1))


@pytest.mark.parametrize("e", PHIS)
def test_young_function_axioms(e):
    phi = make_phi_pk(e)
    t = np.linspace(-3, 3, 601)
    v = phi(t)
    assert np.all(v >= 0)
    assert np.allclose(v, phi(-t), rtol=0, atol=0)
    pos = t[t > 0]
    assert np.all(np.diff(phi(pos)) >= 0)
    s, u = np.meshgrid(t, t[::7])
    assert np.all(phi((s + u) / 2) <= (phi(s) + phi(u)) / 2 + 1e-12)


@pytest.mark.parametrize("e", PHIS)
def test_derivative_matches_finite_difference(e):
    phi = make_phi_pk(e)
    t = np.geomspace(1e-3, 5, 40)
    h = 1e-6 * t
    fd = (phi(t + h) - phi(t - h)) / (2 * h)
    assert np.allclose(phi.prime(t), fd, rtol=1e-6)


@pytest.mark.parametrize("e", PHIS)
def test_growth_exponent_bounds_log_derivative(e):
    phi = make_phi_pk(e)
    t = np.geomspace(1e-12, 1e6, 400)
    assert np.all(t * phi.prime(t) / phi(t) <= phi.growth_exponent + 1e-12)


@pytest.mark.parametrize("e", PHIS)
def test_doubling_constant_holds(e):
    phi = make_phi_pk(e)
    t = np.geomspace(1e-12, 1e6, 400)
    assert np.all(phi(2 * t) <= phi.doubling_constant * phi(t) * (1 + 1e-12))


def test_luxembourg_examples():
    phi = make_phi_pk((2, 0))
    assert luxembourg_norm(phi, WeightedSamples.counting([0.0, 0.0])) == 0.0
    assert luxembourg_norm(phi, WeightedSamples.from_atoms([(1, 1), (1, 1)])) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert luxembourg_norm(phi, WeightedSamples.from_atoms([(3, 1)])) == pytest.approx(3.0, rel=1e-12)
    assert luxembourg_norm(phi, WeightedSamples.from_atoms([])) == 0.0


def test_luxembourg_rejects_bad_weights():
    with pytest.raises(InputError):
        WeightedSamples(np.array([1.0]), np.array([-1.0]))
    with pytest.raises(InputError):
        WeightedSamples(np.array([1.0]), np.array([np.nan]))


def test_luxembourg_trace_is_monotone():
    rng = np.random.default_rng(1)
    phi = make_phi_pk((2, 1))
    tr = []
    luxembourg_norm(phi, WeightedSamples(rng.normal(size=50), rng.uniform(size=50)), trace=tr)
    tr.sort()
    vals = [v for _, v in tr]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


def test_luxembourg_solves_the_constraint():
    rng = np.random.default_rng(2)
    for e in PHIS:
        phi = make_phi_pk(e)
        v, w = rng.normal(size=30), rng.uniform(0.1, 2, size=30)
        a = luxembourg_norm(phi, WeightedSamples(v, w))
        assert phi.objective(v, w, a) == pytest.approx(1.0, rel=1e-9)


values = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=20)


@given(values, st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3), st.sampled_from(PHIS))
def test_homogeneity(vals, c, e):
    phi = make_phi_pk(e)
    v = np.array(vals)
    a = luxembourg_norm(phi, v)
    assert luxembourg_norm(phi, c * v) == pytest.approx(abs(c) * a, rel=1e-9, abs=1e-300)


@given(st.integers(1, 15).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-100, 100), min_size=n, max_size=n),
    st.lists(st.floats(-100, 100), min_size=n, max_size=n),
    st.lists(st.floats(0.01, 10), min_size=n, max_size=n))), st.sampled_from(PHIS))
def test_triangle_inequality(fgw, e):
    f, g, w = (np.array(x) for x in fgw)
    phi = make_phi_pk(e)
    nf = luxembourg_norm(phi, WeightedSamples(f, w))
    ng = luxembourg_norm(phi, WeightedSamples(g, w))
    assert luxembourg_norm(phi, WeightedSamples(f + g, w)) <= nf + ng + 1e-9 * max(1.0, nf + ng)


@given(st.integers(1, 30).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n),
    st.lists(st.floats(1e-3, 1e3), min_size=n, max_size=n))), st.sampled_from([1.0, 2.0, 3.5]))
def test_matches_weighted_lp(vw, p):
    v, w = (np.array(x) for x in vw)
    ref = float(np.dot(w, np.abs(v) ** p)) ** (1 / p)
    assert luxembourg_norm(make_phi_pk((p, 0)), WeightedSamples(v, w)) == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_doubling_exponent_examples():
    assert doubling_exponent(make_phi_pk((2, 0))) == pytest.approx(2.0, abs=1e-12)
    assert doubling_exponent(make_phi_pk((1, 0))) == pytest.approx(1.0, abs=1e-12)
    assert doubling_exponent(make_phi_pk((2, 3))) == pytest.approx(2.0, abs=1e-6)


def test_doubling_exponent_non_doubling():
    phi = YoungFunction(
        evaluator=lambda t: np.exp(-1 / np.abs(t)),
        derivative=lambda t: np.exp(-1 / np.abs(t)) / np.abs(t) ** 2,
    )
    assert doubling_exponent(phi) == math.inf


def test_lower_doubling():
    phi = make_phi_pk((2, 1))
    assert lower_doubling_check(phi, 1.0, 0.7)
    assert lower_doubling_check(phi, 0.0, 5.0)
    rng = np.random.default_rng(3)
    for x, y in zip(rng.uniform(0, 1, 1000), 10.0 ** rng.uniform(-6, 3, 1000)):
        assert lower_doubling_check(phi, float(x), float(y))


def test_lower_doubling_needs_metadata():
    bare = YoungFunction(evaluator=lambda t: np.abs(t) ** 2, derivative=lambda t: 2 * np.abs(t))
    with pytest.raises(PreconditionError):
        lower_doubling_check(bare, 0.5, 1.0)


def test_small_t_dominates_examples():
    p20, p30, p23 = make_phi_pk((2, 0)), make_phi_pk((3, 0)), make_phi_pk((2, 3))
    assert small_t_dominates(p20, p20)
    assert small_t_dominates(p20, p30)
    assert small_t_dominates(p20, p23)
    assert not small_t_dominates(p23, p20)


pk = st.tuples(st.integers(2, 8).map(lambda k: k / 2), st.integers(0, 6).map(lambda k: k / 2))


@given(pk, pk)
def test_family_monotonicity(a, b):
    lo, hi = sorted([PKExponent(*a), PKExponent(*b)])
    assert small_t_dominates(make_phi_pk(lo), make_phi_pk(hi))


fr = st.fractions(min_value=0, max_value=5, max_denominator=6)


@given(fr, fr, fr, fr, fr, fr)
def test_lexicographic_order(p1, k1, p2, k2, p3, k3):
    a, b, c = PKExponent(p1, k1), PKExponent(p2, k2), PKExponent(p3, k3)
    assert (a < b) == (p1 < p2 or (p1 == p2 and k1 < k2))
    assert (a <= b) or (b <= a)
    if a <= b and b <= a:
        assert a == b
    if a <= b and b <= c:
        assert a <= c


def test_parse_exponent():
    assert PKExponent.parse("3/2, 1") == PKExponent(Fraction(3, 2), Fraction(1))
    assert PKExponent.parse("(2,3)") == PKExponent(Fraction(2), Fraction(3))
    with pytest.raises(ValueError):
        PKExponent.parse("1,2,3")


def test_lipschitz_series():
    assert lipschitz_membership_series((3, 0), 2).kind == "finite"
    assert lipschitz_membership_series((2, 1), 2).kind == "divergent"
    fin = lipschitz_membership_series((2, 1.5), 2)
    assert fin.kind == "finite"
    # oracle: 2e6 terms summed directly, plus the integral of the asymptotic tail
    N = 2_000_000
    j = np.arange(N, dtype=float)
    partial = np.sum(np.logaddexp(1.0, j * math.log(2)) ** -1.5)
    tail = 2 / math.sqrt(N * math.log(2)) / math.log(2) + 0.5 * (N * math.log(2)) ** -1.5
    assert fin.value == pytest.approx(partial + tail, rel=1e-7)
    assert lipschitz_membership_series((3, 0), 2).value == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(DomainError):
        lipschitz_membership_series((2, 0), 0)
