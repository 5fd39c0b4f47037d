from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hql.errors import InputError, PreconditionError
from hql.invariants import (
    abelian_qi_classify,
    carnot_vs_noncarnot,
    conformal_dim_attainment,
    critical_exponents,
    default_exponents,
    extension_threshold,
    global_critical,
    i_m_functions,
    index_set,
    local_infinity_exponent_bounds,
    local_trivial_at_N_point,
    pointed_sphere_report,
    spectrum_at_infinity,
    unresolved_regions,
    vanishing_threshold,
)
from hql.lie import Subspace, is_carnot_type, make_spec
from hql.young import PKExponent

F = Fraction
X3 = make_spec([1], [[2]])
J13 = make_spec([1], [[3]])
D11 = make_spec([1], [[1, 1]])


def diag(mu):
    return make_spec([1, mu], [[1], [1]])


def E(p, k):
    return PKExponent(F(p), F(k))


def test_critical_exponents():
    assert critical_exponents(X3) == (2, 1)
    mu = F(5, 2)
    assert critical_exponents(diag(mu)) == (1 + mu, (1 + mu) / mu, 1)
    assert critical_exponents(D11)[0] == 2


def test_global_critical():
    assert global_critical(X3) == E(2, 3)
    assert global_critical(diag(F(7, 3))) == E(F(10, 3), 1)
    assert global_critical(J13) == E(3, 7)


def test_local_trivial_at_N_point():
    assert local_trivial_at_N_point(X3, E(2, 3))
    assert not local_trivial_at_N_point(X3, E(2, F(3) + F(1, 10**9)))
    for spec in (X3, J13, D11, diag(2)):
        assert local_trivial_at_N_point(spec, E(1, 0))


def test_spectrum_examples():
    r = spectrum_at_infinity(diag(2), E(2, 5))
    assert r.label() == "QuotientByK(1)" and r.dimension == 1
    r = spectrum_at_infinity(X3, E(2, 2))
    assert r.label() == "QuotientByH(1)" and r.dimension == 1
    assert r.subgroup == Subspace.span(2, [[F(1), F(0)]])
    assert spectrum_at_infinity(X3, E(2, F(1, 2))).verdict == "Unresolved"


def test_spectrum_edge_cases():
    d = diag(2)
    assert spectrum_at_infinity(d, E(4, 0)).verdict == "SeparatesPoints"
    assert spectrum_at_infinity(d, E(4, 0)).extrapolated
    assert spectrum_at_infinity(d, E(1, 0)).verdict == "Unresolved"
    assert spectrum_at_infinity(d, E(F(1, 2), 0)).verdict == "Unresolved"
    # p = p_i with m_i = 1: kappa <= 1 gives K_i, kappa > 1 gives K_(i-1)
    assert spectrum_at_infinity(d, E(F(3, 2), 1)).label() == "QuotientByK(2)"
    assert spectrum_at_infinity(d, E(F(3, 2), 2)).label() == "QuotientByK(1)"
    assert spectrum_at_infinity(d, E(3, 1)).label() == "QuotientByK(1)"
    assert spectrum_at_infinity(d, E(3, 2)).label() == "QuotientByK(0)"
    assert spectrum_at_infinity(d, E(3, 2)).dimension == 2
    # interval endpoints for m_i >= 2: (1, 3] at p = 2 on X_3
    assert spectrum_at_infinity(X3, E(2, 1)).verdict == "Unresolved"
    assert spectrum_at_infinity(X3, E(2, 3)).verdict == "QuotientByH"
    assert spectrum_at_infinity(X3, E(2, F(301, 100))).verdict == "Unresolved"


def test_local_bounds():
    b = local_infinity_exponent_bounds(X3)
    assert (b.lower, b.upper) == (E(2, 0), E(2, 1))
    mu = F(3)
    b = local_infinity_exponent_bounds(diag(mu))
    assert (b.lower, b.upper) == (E((1 + mu) / mu, 0), E((1 + mu) / mu, 1))
    b = local_infinity_exponent_bounds(D11)
    assert (b.lower, b.upper) == (E(2, 0), E(2, 1))
    b = local_infinity_exponent_bounds(J13)
    assert b.upper == E(3, 4)


def test_pointed_sphere_and_conformal_dimension():
    ps = pointed_sphere_report(X3)
    assert ps.verdict == "FixedInfinity" and ps.preserved_cosets == Subspace.span(2, [[F(1), F(0)]])
    assert pointed_sphere_report(D11).verdict == "CarnotInconclusive"
    assert pointed_sphere_report(diag(2)).verdict == "FixedInfinity"
    assert conformal_dim_attainment(X3) == "NotAttained"
    assert conformal_dim_attainment(diag(2)) == "Inconclusive"
    assert conformal_dim_attainment(J13) == "NotAttained"


def test_vanishing_threshold():
    assert vanishing_threshold(X3, (1, 1, 1)) == E(2, 3)
    assert vanishing_threshold(X3, (1, 1, 2)) == E(2, -1)
    assert vanishing_threshold(diag(2), (2, 1, 1)) == E(F(3, 2), 1)
    with pytest.raises(InputError):
        vanishing_threshold(X3, (1, 1, 3))


def test_extension_threshold():
    assert extension_threshold(X3, ("H", 1)) == E(2, 1)
    mu = F(4)
    assert extension_threshold(diag(mu), ("K", 1)) == E((1 + mu) / mu, 1)
    assert extension_threshold(J13, ("H", 1)) == E(3, 4)
    with pytest.raises(PreconditionError):
        extension_threshold(X3, ("K", 1))


def test_index_sets():
    assert index_set(X3, "K", 0) == frozenset()
    assert index_set(X3, "H", 1) == frozenset({(1, 1, 1)})
    assert i_m_functions(J13, index_set(J13, "H", 1)) == (1, 1)


SPECS = [X3, J13, D11, diag(2), diag(F(3, 2)), make_spec([1, 2], [[2], [1]]), make_spec([1], [[2, 2]]),
         make_spec([1, 3], [[3, 1], [2]]), make_spec([1, 2], [[1, 1], [1]], [(1, 2, 3, 1)]),
         make_spec([1, 2, 3], [[1], [1], [1]], [(1, 2, 3, 1)])]


@pytest.mark.parametrize("spec", SPECS)
def test_extension_threshold_of_K0_is_global(spec):
    assert extension_threshold(spec, ("K", 0)) == global_critical(spec)


@pytest.mark.parametrize("spec", SPECS)
def test_closed_forms_for_K_and_H(spec):
    ps = critical_exponents(spec)
    d = spec.jordan.d
    for i in range(1, d):
        m = spec.jordan.m(i + 1)
        assert extension_threshold(spec, ("K", i)) == PKExponent(ps[i], 1 + ps[i] * (m - 1))
    for i in range(1, d + 1):
        m = spec.jordan.m(i)
        if m >= 2:
            assert extension_threshold(spec, ("H", i)) == PKExponent(ps[i - 1], 1 + ps[i - 1] * (m - 2))


@pytest.mark.parametrize("spec", SPECS)
def test_local_bound_vs_global(spec):
    b = local_infinity_exponent_bounds(spec)
    g = global_critical(spec)
    if is_carnot_type(spec):
        assert b.upper == g == PKExponent(critical_exponents(spec)[0], 1)
    else:
        assert b.upper < g


@pytest.mark.parametrize("spec", SPECS)
def test_monotone_coarsening(spec):
    rs = [spectrum_at_infinity(spec, e) for e in default_exponents(spec)]
    dims = [r.dimension for r in rs if r.verdict != "Unresolved"]
    assert dims == sorted(dims)


@pytest.mark.parametrize("spec", SPECS)
@given(p=st.fractions(1, 8, max_denominator=6), k=st.fractions(0, 10, max_denominator=4))
def test_spectrum_matches_unresolved_regions(spec, p, k):
    r = spectrum_at_infinity(spec, PKExponent(p, k))
    in_region = False
    for reg in unresolved_regions(spec):
        if isinstance(reg["p"], dict):
            in_region |= p <= reg["p"]["at_most"]
        elif p == reg["p"]:
            kk = reg["kappa"]
            in_region |= (k <= kk["at_most"]) if "at_most" in kk else (k > kk["greater_than"])
    assert (r.verdict == "Unresolved") == in_region
    if r.dimension is not None:
        assert r.dimension == spec.n - (r.subgroup.dim if r.subgroup is not None else 0)


def test_abelian_classification():
    a, b = diag(2), make_spec([2, 4], [[1], [1]])
    v = abelian_qi_classify(a, b)
    assert v.outcome == "Isomorphic" and v.scale == F(1, 2)
    v = abelian_qi_classify(diag(2), diag(3))
    assert (v.outcome, v.witness) == ("Distinguished", "eigenvalue_ratios")
    v = abelian_qi_classify(X3, D11)
    assert (v.outcome, v.witness) == ("Distinguished", "block_multiset")
    v = abelian_qi_classify(X3, X3)
    assert v.outcome == "Isomorphic" and v.scale == 1
    v = abelian_qi_classify(diag(2), make_spec([1, 2, 3], [[1], [1], [1]]))
    assert v.witness == "d"
    v = abelian_qi_classify(make_spec([1, 2], [[1], [1, 1]]), make_spec([1, 2], [[1], [2]]))
    assert v.witness == "block_multiset"
    v = abelian_qi_classify(make_spec([1, 2], [[1], [1, 1]]), make_spec([1, 2], [[1], [1]]))
    assert v.witness == "dim_V"
    with pytest.raises(PreconditionError):
        abelian_qi_classify(SPECS[-1], X3)


def test_carnot_vs_noncarnot():
    v = carnot_vs_noncarnot(X3, D11)
    assert v.outcome == "NotQuasiIsometric" and v.witness == "carnot_type"
    v = carnot_vs_noncarnot(X3, make_spec([1], [[2, 2]]))
    assert v.outcome == "NotQuasiIsometric" and v.witness == "dim_h1" and v.values == (1, 2)
    assert carnot_vs_noncarnot(D11, D11).outcome == "Inconclusive"
