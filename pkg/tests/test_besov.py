import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from hql.besov import (
    DIVERGING,
    STABILIZING,
    UNDETERMINED,
    affine_seminorm_exact,
    ball_mass_probe,
    besov_objective,
    besov_seminorm,
    classify_sweep,
    coordinate_function,
    make_custom_grid,
    make_diag_grid,
    make_x3_grid,
    pair_set,
    refinement_sweep,
    separation_profile,
)
from hql.errors import InputError
from hql.invariants import spectrum_at_infinity
from hql.lie import make_spec
from hql.young import PKExponent, make_phi_pk

pi1, pi2 = coordinate_function(1), coordinate_function(2)


def phi(p, k=0):
    return make_phi_pk((p, k))


def brute_seminorm(points, weights, u, p, kappa, Q):
    """Independent full double sum over ordered pairs with the closed-form X_3 metric."""
    dx = points[None, :, 0] - points[:, None, 0]
    dy = points[None, :, 1] - points[:, None, 1]
    ady = np.abs(dy)
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.where(ady > 0, dy * np.log(ady), 0.0)
    rho = np.maximum(ady, np.abs(dx - lg))
    off = rho > 0
    du = (u[None, :] - u[:, None])[off]
    dens = (np.outer(weights, weights)[off] * rho[off] ** (-2 * Q))
    keep = du != 0
    du, dens = np.abs(du[keep]), dens[keep]

    def g(alpha):
        a = du / alpha
        return math.fsum(dens * a**p / np.log(math.e + 1 / a) ** kappa) - 1.0

    hi = 1.0
    while g(hi) > 0:
        hi *= 2
    lo = hi / 2
    while g(lo) <= 0:
        lo /= 2
    return brentq(g, lo, hi, xtol=1e-15, rtol=1e-14)


def test_constant_function():
    g = make_x3_grid(3)
    assert besov_seminorm(phi(2), g, np.full(g.n, 4.0)) == 0.0


def test_two_point_oracle():
    g = make_custom_grid([[0.0, 0.0], [1.0, 0.0]], [1.0, 1.0], "euclidean", Q=3.7)
    assert besov_seminorm(phi(2), g, [0.0, 1.0]) == pytest.approx(math.sqrt(2), rel=1e-12)


def test_degenerate_regions():
    g = make_x3_grid(2)
    res = besov_seminorm(phi(2), g, pi1, region=[3], details=True)
    assert res.value == 0 and res.degenerate


def test_level5_pi2_brute_force():
    g = make_x3_grid(5)
    val = besov_seminorm(phi(2, 2), g, pi2)
    ref = brute_seminorm(g.points, g.weights, g.points[:, 1], 2, 2, 2.0)
    assert abs(val - ref) <= 1e-9 * ref


def test_grid_construction():
    g = make_x3_grid(1)
    assert g.n == 9 and g.Q == 2.0
    assert g.weights.sum() == pytest.approx(1, abs=1e-12)
    g = make_x3_grid(4)
    assert g.weights.sum() == pytest.approx(1, abs=1e-12)
    h = 1 / 16
    # adjacent horizontal points (same y) are at distance h
    assert g.metric(0, 17)[0] == pytest.approx(h)
    rng = np.random.default_rng(0)
    i, j = rng.integers(0, g.n, size=(2, 500))
    assert np.array_equal(g.metric(i, j), g.metric(j, i))
    assert np.all((g.metric(i, j) == 0) == (i == j))
    d = make_diag_grid(3, 2.0)
    assert d.Q == 3.0 and d.metric(0, 1)[0] == pytest.approx((1 / 8) ** 0.5)
    with pytest.raises(InputError):
        make_x3_grid(0)
    with pytest.raises(InputError):
        make_custom_grid([[0.0, 0.0]], [0.0])


@given(st.floats(-50, 50).filter(lambda c: abs(c) > 1e-6), st.sampled_from([(2, 0), (2, 2), (3, 1), (1, 0)]))
@settings(max_examples=30)
def test_homogeneity(c, pk):
    g = make_x3_grid(3)
    u = np.sin(7 * g.points[:, 0]) + g.points[:, 1] ** 2
    base = besov_seminorm(phi(*pk), g, u)
    assert besov_seminorm(phi(*pk), g, c * u) == pytest.approx(abs(c) * base, rel=1e-9)


@given(st.integers(0, 2**31))
@settings(max_examples=20)
def test_region_monotone(seed):
    g = make_x3_grid(3)
    rng = np.random.default_rng(seed)
    big = rng.choice(g.n, size=40, replace=False)
    small = big[:15]
    u = rng.normal(size=g.n)
    assert besov_seminorm(phi(2, 1), g, u, region=small) <= besov_seminorm(phi(2, 1), g, u, region=big) + 1e-12
    assert besov_seminorm(phi(2, 1), g, u, region=big) <= besov_seminorm(phi(2, 1), g, u) + 1e-12


def test_lattice_and_generic_paths_agree_exactly():
    g = make_x3_grid(4)
    c = make_custom_grid(g.points, g.weights, "x3", Q=2.0)
    u = np.cos(3 * g.points[:, 0] * g.points[:, 1])
    a, b = besov_seminorm(phi(2, 2), g, u), besov_seminorm(phi(2, 2), c, u)
    assert a == pytest.approx(b, rel=1e-12)
    assert not pair_set(g).sampled and pair_set(g).size == g.n * (g.n - 1) // 2


@pytest.mark.parametrize("which", ["lattice", "generic"])
@pytest.mark.parametrize("u", ["pi1", "pi2", "wave"])
def test_subsampled_within_two_percent(which, u):
    g = make_x3_grid(4)
    if which == "generic":
        g = make_custom_grid(g.points, g.weights, "x3", Q=2.0)
    vals = {"pi1": g.points[:, 0], "pi2": g.points[:, 1], "wave": np.sin(5 * g.points.sum(axis=1))}[u]
    full = besov_seminorm(phi(2, 1), g, vals)
    sub = besov_seminorm(phi(2, 1), g, vals, pair_budget=8000, seed=5, details=True)
    assert sub.sampled and sub.pairs < 12000
    assert abs(sub.value - full) <= 0.02 * full


def test_sampling_is_deterministic():
    g = make_x3_grid(5)
    a = pair_set(g, budget=50_000, seed=7)
    b = pair_set(g, budget=50_000, seed=7 + 2**63)  # same seed after normalisation
    assert a is b
    c = pair_set(g, budget=50_000, seed=8)
    assert not np.array_equal(a.i, c.i) or not np.array_equal(a.j, c.j)
    assert np.all(a.bucket_kept <= a.bucket_counts)
    assert a.bucket_counts.sum() == a.total_pairs


def test_exact_affine_matches_full_sum():
    for g in (make_x3_grid(4), make_diag_grid(4, 2.0)):
        for coeffs in ((1.0, 0.0), (0.0, 1.0), (0.5, -2.0)):
            u = g.points @ np.array(coeffs)
            full = besov_seminorm(phi(2, 2), g, u)
            assert affine_seminorm_exact(phi(2, 2), g, coeffs) == pytest.approx(full, rel=1e-10)


def test_objective_nonincreasing_in_kappa():
    g = make_x3_grid(4)
    for alpha in (0.05, 0.5, 3.0):
        obj = [besov_objective(phi(2, k), g, pi1, alpha) for k in (0, 1, 2, 3, 4)]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(obj, obj[1:]))
    norms = [besov_seminorm(phi(2, k), g, pi1) for k in (0, 1, 2, 4)]
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_classify_sweep_rules():
    assert classify_sweep([0, 0, 0]) == STABILIZING
    assert classify_sweep([1.0, 1.5, 1.51]) == STABILIZING
    assert classify_sweep([1.0, 1.2, 1.5]) == DIVERGING
    assert classify_sweep([1.0, 1.2, 1.25]) == UNDETERMINED
    assert classify_sweep([1.0, 1.5, 1.3]) == UNDETERMINED
    assert classify_sweep([1.0, 1.2, 1.25], stabilize_tol=0.05) == STABILIZING
    assert classify_sweep([1.0, 1.2, 1.25], diverge_ratio=1.03) == DIVERGING


def test_refinement_sweep_basics():
    sv = refinement_sweep(phi(2, 2), make_x3_grid, lambda pts: np.ones(len(pts)), [2, 3, 4])
    assert sv.verdict == STABILIZING and sv.estimates == (0.0, 0.0, 0.0)
    assert [r[0] for r in sv.to_rows()] == [2, 3, 4]
    with pytest.raises(InputError):
        refinement_sweep(phi(2), make_x3_grid, pi1, [3, 4])
    with pytest.raises(InputError):
        refinement_sweep(phi(2), make_x3_grid, pi1, [4, 3, 5])


def test_sweep_trends_on_x3():
    # pi1 at (2,2) grows with refinement while pi2 levels off
    a = refinement_sweep(phi(2, 2), make_x3_grid, pi1, [3, 4, 5, 6], exact_affine=(1, 0)).estimates
    b = refinement_sweep(phi(2, 2), make_x3_grid, pi2, [3, 4, 5, 6], exact_affine=(0, 1)).estimates
    assert all(y > x for x, y in zip(a, a[1:]))
    assert b[-1] / b[-2] < a[-1] / a[-2]


def test_separation_profile_x3_at_3_0():
    x3 = make_spec([1], [[2]])
    spec = spectrum_at_infinity(x3, PKExponent(3, 0))
    # pi_1 converges like a tail of sum j^3 2^-j, so coarse levels still move by > 3%
    prof = separation_profile(phi(3, 0), make_x3_grid, {"pi1": pi1, "pi2": pi2}, [6, 7, 8, 9], spectrum=spec,
                              coordinate_of={"pi1": 1, "pi2": 2}, exact=True)
    assert prof.separated == {"pi1": True, "pi2": True}
    assert prof.consistent


def test_separation_profile_diag_grid():
    # grid metric max{|dx|, |dy|^(1/2)}: pi_2 is 2-Lipschitz-small and separated, pi_1 diverges
    prof = separation_profile(phi(2.5, 0), lambda lv: make_diag_grid(lv, 2.0), {"pi1": pi1, "pi2": pi2},
                              [4, 5, 6, 7, 8], coordinate_of={"pi1": 1, "pi2": 2}, exact=True)
    assert prof.separated == {"pi1": False, "pi2": True}


def test_ball_mass_probe_close_to_two():
    slope = ball_mass_probe(make_x3_grid(6), [0.04, 0.08, 0.16])
    assert 1.5 < slope < 2.5
