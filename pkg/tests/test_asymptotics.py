import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hql.asymptotics import (
    _exp_alpha,
    asymptotic_ratio,
    charpoly_coeff_ratio,
    charpoly_coefficients,
    closed_form_metric_x3,
    dual_norm_limit,
    dual_norm_ratio,
    eigenvector_alignment,
    nilpotent_exp,
    parabolic_metric_abelian,
    singular_data,
)
from hql.errors import ConditioningError, InputError, PreconditionError
from hql.lie import make_spec

X3 = make_spec([1], [[2]])


def test_nilpotent_exp_examples():
    assert nilpotent_exp(2, 1).entries == ((1, 1), (0, 1))
    assert nilpotent_exp(3, 2).entries == ((1, 2, 2), (0, 1, 2), (0, 0, 1))
    assert np.array_equal(nilpotent_exp(4, 0).matrix(), np.eye(4))


@given(st.integers(1, 6), st.fractions(-5, 5, max_denominator=7))
def test_nilpotent_exp_exact_inverse(m, t):
    M = nilpotent_exp(m, t)
    assert M.determinant() == 1
    A, B = M.entries, M.inverse().entries
    prod = [[sum(A[r][k] * B[k][c] for k in range(m)) for c in range(m)] for r in range(m)]
    assert prod == [[Fraction(int(r == c)) for c in range(m)] for r in range(m)]


def test_two_by_two_closed_form():
    t = 10.0
    lam = singular_data(2, t).eigenvalues
    root = t * math.sqrt(t * t + 4)
    assert lam == pytest.approx([((t * t + 2) - root) / 2, ((t * t + 2) + root) / 2], rel=1e-12)
    assert lam[0] * lam[1] == pytest.approx(1, rel=1e-12)


def test_degenerate_at_zero():
    sd = singular_data(2, 0)
    assert sd.degenerate and np.all(sd.eigenvalues == 1)


def _mp_eigen(m, t, dps=60):
    with mpmath.workdps(dps):
        M = mpmath.matrix(m, m)
        for r in range(m):
            for c in range(r, m):
                M[r, c] = mpmath.mpf(t) ** (c - r) / mpmath.factorial(c - r)
        E = mpmath.eigsy(M.T * M, eigvals_only=True)
        return sorted(float(e) for e in E)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("t", [1.0, 10.0, 100.0])
def test_pairing_and_middle(m, t):
    lam = singular_data(m, t).eigenvalues
    for i in range(m):
        assert abs(lam[i] * lam[m - 1 - i] - 1) <= 1e-9
    if m % 2:
        assert abs(lam[m // 2] - 1) <= 1e-10
    assert np.allclose(lam, _mp_eigen(m, t), rtol=1e-9)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_eigenvectors_orthonormal_and_oriented(m):
    V = singular_data(m, 7.0).eigenvectors
    assert np.allclose(V.T @ V, np.eye(m), atol=1e-12)
    assert np.all(np.diag(V) >= 0)


def test_asymptotic_ratio_examples():
    t = 100.0
    assert asymptotic_ratio(2, 2, t) == pytest.approx((t + math.sqrt(t * t + 4)) / (2 * t), rel=1e-12)
    assert abs(asymptotic_ratio(2, 2, t) - 1.0001) <= 1e-4
    for m in (1, 3, 5):
        assert asymptotic_ratio(m, (m + 1) // 2, 37.0) == pytest.approx(1, abs=1e-10)
    assert abs(asymptotic_ratio(3, 3, 1e3) - 1) <= 1e-2


@pytest.mark.parametrize("m", [2, 3, 4])
def test_asymptotic_ratio_converges_monotonically(m):
    for i in range(1, m + 1):
        errs = [abs(asymptotic_ratio(m, i, t) - 1) for t in (10.0, 100.0, 1000.0)]
        if errs[0] < 1e-12:
            continue
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 0.02


@pytest.mark.parametrize("m", [2, 3, 4])
def test_alignment(m):
    for i in range(1, m + 1):
        a = [eigenvector_alignment(m, i, t) for t in (10.0, 100.0, 1000.0)]
        assert a[1] >= a[0] - 1e-12 and a[2] >= a[1] - 1e-12
        assert a[2] >= 0.999
    assert eigenvector_alignment(2, 2, 100.0) >= 0.999
    assert eigenvector_alignment(4, 1, 1e3) >= 0.99
    assert eigenvector_alignment(1, 1, 3.0) == 1.0


def test_precision_modes():
    with pytest.raises(ConditioningError):
        singular_data(8, 1000.0, precision="double")
    ext = singular_data(4, 1000.0, precision="extended").eigenvalues
    assert ext[0] * ext[3] == pytest.approx(1, rel=1e-12)
    assert singular_data(4, 1000.0).precision == "extended"
    assert singular_data(4, 10.0).precision == "double"
    with pytest.raises(InputError):
        singular_data(2, 1.0, precision="quad")


def test_charpoly_examples():
    # SM = [[0, 1], [1, t]]: x^2 - t x - 1
    c = charpoly_coefficients(2)
    assert c[1] == (0, -1)
    assert c[2][0] == -1 and not any(c[2][1:])
    for t in (1, 10, Fraction(7, 3)):
        assert charpoly_coeff_ratio(2, 1, t) == 1.0
    for m in (2, 3, 4, 5):
        vals = {charpoly_coeff_ratio(m, m, t) for t in (1, 5, 100)}
        assert len(vals) == 1
    assert abs(charpoly_coeff_ratio(3, 2, 1000) - 1) <= 1e-2


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_charpoly_matches_numeric(m):
    t = 3.0
    SM = np.fliplr(nilpotent_exp(m, t).matrix())
    num = np.poly(SM)  # monic, highest degree first
    coeffs = charpoly_coefficients(m)
    for k in range(1, m + 1):
        exact = sum(float(a) * t**e for e, a in enumerate(coeffs[k]))
        assert abs(exact) == pytest.approx(abs(num[k]), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_charpoly_ratio_converges(m):
    for k in range(1, m):
        errs = [abs(charpoly_coeff_ratio(m, k, t) - 1) for t in (10, 100, 1000)]
        if errs[0] == 0:
            continue
        assert errs[0] > errs[1] > errs[2] and errs[2] < 0.02


def test_dual_norm():
    d = make_spec([1], [[1]])
    for t in (0.5, 3.0, 40.0):
        assert dual_norm_ratio(d, 1.0, (1, 1, 1), t) == pytest.approx(1, abs=1e-15)
    t = 1e3
    oracle = math.sqrt(1 + t * t) / t
    assert dual_norm_ratio(X3, 1.0, (1, 1, 1), t) == pytest.approx(oracle, rel=1e-12)
    assert abs(dual_norm_ratio(X3, 1.0, (1, 1, 1), t) - 1) <= 1e-3
    j3 = make_spec([1], [[3]])
    assert abs(dual_norm_ratio(j3, 1.0, (1, 1, 1), 1e4) - 0.5) <= 1e-2
    assert dual_norm_limit(j3, 1.0, (1, 1, 1)) == 0.5
    assert dual_norm_limit(j3, 2.0, (1, 1, 2)) == 2.0
    with pytest.raises(InputError):
        dual_norm_ratio(X3, 1.0, (1, 1, 3), 1.0)


def test_parabolic_metric_trivial_cases():
    assert parabolic_metric_abelian(X3, [0.3, 0.4], [0.3, 0.4]) == 0.0
    d11 = make_spec([1], [[1, 1]])
    rng = np.random.default_rng(1)
    for _ in range(20):
        x, y = rng.random(2), rng.random(2)
        assert parabolic_metric_abelian(d11, x, y) == pytest.approx(np.linalg.norm(y - x), rel=1e-10)
    with pytest.raises(PreconditionError):
        parabolic_metric_abelian(make_spec([1, 2], [[1, 1], [1]], [(1, 2, 3, 1)]), [0, 0, 0], [1, 0, 0])


def test_closed_form_metric_examples():
    assert closed_form_metric_x3([0.2, 0.5], [0.9, 0.5]) == pytest.approx(0.7)
    assert closed_form_metric_x3([0, 0], [0, math.exp(-1)]) == pytest.approx(math.exp(-1))


@given(st.tuples(*[st.floats(-3, 3)] * 4))
def test_closed_form_symmetric(c):
    v, w = c[:2], c[2:]
    assert closed_form_metric_x3(v, w) == closed_form_metric_x3(w, v)
    assert (closed_form_metric_x3(v, w) == 0) == (tuple(v) == tuple(w))


def test_parabolic_vs_closed_form_band():
    rng = np.random.default_rng(5)
    r = []
    for _ in range(500):
        x, y = rng.random(2), rng.random(2)
        r.append(parabolic_metric_abelian(X3, x, y) / closed_form_metric_x3(x, y))
    assert 1 / 4 <= min(r) and max(r) <= 4


@pytest.mark.parametrize("t0", [-1.0, 0.5, 2.0])
def test_scale_equivariance(t0):
    shrink = _exp_alpha(X3)(-t0)
    rng = np.random.default_rng(7)
    for _ in range(30):
        x, y = rng.random(2), rng.random(2)
        lhs = parabolic_metric_abelian(X3, shrink @ x, shrink @ y)
        assert lhs == pytest.approx(math.exp(-t0) * parabolic_metric_abelian(X3, x, y), rel=1e-8)


def test_log_holder_bound():
    rng = np.random.default_rng(3)
    x, y = rng.random((4000, 2)), rng.random((4000, 2))
    rho = np.array([closed_form_metric_x3(a, b) for a, b in zip(x, y)])
    keep = (rho > 0) & (rho <= 0.5)
    ratio = np.abs(x[keep, 0] - y[keep, 0]) / (rho[keep] * np.log(1 / rho[keep]))
    # uniform constant: |dx| <= rho + |dy log|dy|| <= rho (1 + log(1/rho)) <= 3 rho log(1/rho) for rho <= 1/2
    assert ratio.max() <= 1 + 1 / math.log(2)
