"""Singular values of Exp(tJ), Newton-identity coefficients, dual norms and
parabolic visual metrics of abelian Heintze groups.

J is the standard nilpotent Jordan block of size m (ones on the
superdiagonal), so Exp(tJ) is upper triangular with entries t^(c-r)/(c-r)!.
With S the index reversal, SM is a symmetric Hankel matrix and
M^T M = (SM)^2, so the eigenvalues of M^T M are the squares of those of SM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from .errors import ConditioningError, InputError, PreconditionError
from .lie import HeintzeSpec, as_fraction

__all__ = [
    "NilpotentExp",
    "SingularData",
    "nilpotent_exp",
    "singular_data",
    "asymptotic_ratio",
    "eigenvector_alignment",
    "charpoly_coefficients",
    "charpoly_coeff_ratio",
    "predicted_charpoly_coeff",
    "dual_norm",
    "dual_norm_ratio",
    "dual_norm_limit",
    "parabolic_metric_abelian",
    "closed_form_metric_x3",
    "diag_metric",
    "COND_LIMIT",
    "AUTO_LIMIT",
]

COND_LIMIT = 1e14
AUTO_LIMIT = 1e8


@dataclass(frozen=True)
class NilpotentExp:
    m: int
    t: object
    entries: tuple  # m x m nested tuples; Fraction when t is rational

    def matrix(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])

    def determinant(self):
        # upper triangular with unit diagonal
        out = self.entries[0][0]
        for k in range(1, self.m):
            out = out * self.entries[k][k]
        return out

    def inverse(self) -> "NilpotentExp":
        return nilpotent_exp(self.m, -self.t)


def nilpotent_exp(m: int, t) -> NilpotentExp:
    """Exp(tJ) by the finite series; exact for int/Fraction/rational-string t."""
    if m < 1:
        raise InputError("m must be >= 1")
    if isinstance(t, (int, Fraction, str)):
        t = as_fraction(t)
        one, zero = Fraction(1), Fraction(0)
    else:
        t = float(t)
        one, zero = 1.0, 0.0
    powers = [one]
    for s in range(1, m):
        powers.append(powers[-1] * t / s)
    rows = tuple(tuple(powers[c - r] if c >= r else zero for c in range(m)) for r in range(m))
    return NilpotentExp(m, t, rows)


def _sm_float(m: int, t: float) -> np.ndarray:
    # (SM)[r, c] = t^s / s! with s = r + c - (m - 1) >= 0
    A = np.zeros((m, m))
    for r in range(m):
        for c in range(m):
            s = r + c - (m - 1)
            if s >= 0:
                A[r, c] = t**s / math.factorial(s)
    return A


@dataclass(frozen=True)
class SingularData:
    eigenvalues: np.ndarray  # ascending eigenvalues of M^T M
    eigenvectors: np.ndarray  # columns, oriented with <v_i, e_i> >= 0
    degenerate: bool = False
    precision: str = "double"


def needs_extended(m: int, t: float, limit: float = COND_LIMIT) -> bool:
    return m > 1 and t != 0 and abs(t) ** (2 * (m - 1)) > limit


def singular_data(m: int, t: float, precision: str = "auto") -> SingularData:
    """Eigen-decomposition of M^T M for M = Exp(tJ), through the symmetric SM.

    ``precision`` is "auto", "double" (raise ``ConditioningError`` past the
    conditioning guard) or "extended".  "auto" already switches to extended
    precision at t^(2(m-1)) > AUTO_LIMIT, where the relative error of the
    smallest eigenvalue in double precision starts to exceed about 1e-11.
    """
    if m < 1:
        raise InputError("m must be >= 1")
    if precision not in ("auto", "double", "extended"):
        raise InputError(f"unknown precision {precision!r}")
    t = float(t)
    if t == 0.0:
        return SingularData(np.ones(m), np.eye(m), degenerate=True)
    if precision == "double" and needs_extended(m, t):
        raise ConditioningError(
            f"t^(2(m-1)) = {abs(t) ** (2 * (m - 1)):.3g} exceeds {COND_LIMIT:.0e}; use extended precision"
        )
    extended = precision == "extended" or (precision == "auto" and needs_extended(m, t, AUTO_LIMIT))
    if not extended:
        beta, V = np.linalg.eigh(_sm_float(m, t))
        lam = beta**2
        used = "double"
    else:
        digits = 30 + int(2 * (m - 1) * math.log10(max(abs(t), 10.0)))
        with mpmath.workdps(digits):
            tt = mpmath.mpf(t)
            A = mpmath.matrix(m, m)
            for r in range(m):
                for c in range(m):
                    s = r + c - (m - 1)
                    if s >= 0:
                        A[r, c] = tt**s / mpmath.factorial(s)
            E, Q = mpmath.eigsy(A)
            lam = np.array([float(E[k] ** 2) for k in range(m)])
            V = np.array([[float(Q[r, c]) for c in range(m)] for r in range(m)])
        used = "extended"
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    V = V[:, order]
    for i in range(m):
        if V[i, i] < 0:
            V[:, i] = -V[:, i]
    return SingularData(lam, V, precision=used)


def asymptotic_ratio(m: int, i: int, t: float, precision: str = "auto") -> float:
    """sqrt(lambda_i) (i-1)! / ((m-i)! t^(2i-m-1)); tends to 1 as t grows."""
    if not t > 0:
        raise InputError("t must be positive")
    if not 1 <= i <= m:
        raise InputError(f"index {i} out of range 1..{m}")
    lam = singular_data(m, t, precision).eigenvalues[i - 1]
    log_pred = math.lgamma(m - i + 1) - math.lgamma(i) + (2 * i - m - 1) * math.log(t)
    return math.exp(0.5 * math.log(lam) - log_pred)


def eigenvector_alignment(m: int, i: int, t: float, precision: str = "auto") -> float:
    """|<v_i(t), e_i>|; tends to 1 as t grows."""
    if not t > 0:
        raise InputError("t must be positive")
    if not 1 <= i <= m:
        raise InputError(f"index {i} out of range 1..{m}")
    V = singular_data(m, t, precision).eigenvectors
    return float(min(1.0, abs(V[i - 1, i - 1])))


# ---------------------------------------------------------------------------
# characteristic polynomial of SM, exactly, as polynomials in t
# ---------------------------------------------------------------------------

Poly = tuple  # coefficients in t, lowest degree first, Fractions


def _padd(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return tuple((a[k] if k < len(a) else 0) + (b[k] if k < len(b) else 0) for k in range(n))


def _pmul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return tuple(out)


def _pscale(a: Poly, c: Fraction) -> Poly:
    return tuple(c * x for x in a)


@lru_cache(maxsize=None)
def charpoly_coefficients(m: int) -> tuple[Poly, ...]:
    """c_0 = 1, c_1, ..., c_m of det(x I - SM) = sum_k c_k x^(m-k), as polynomials in t.

    Power sums T_k = tr((SM)^k) are formed exactly, then Newton's identities
    k e_k = sum_{i=1}^k (-1)^(i-1) e_{k-i} T_i give the elementary symmetric
    polynomials e_k, and c_k = (-1)^k e_k.
    """
    A = [[() for _ in range(m)] for _ in range(m)]
    for r in range(m):
        for c in range(m):
            s = r + c - (m - 1)
            if s >= 0:
                A[r][c] = tuple([Fraction(0)] * s + [Fraction(1, math.factorial(s))])
    P = A
    T = [()]
    for k in range(1, m + 1):
        if k > 1:
            P = [
                [
                    _sum_polys(_pmul(P[r][q], A[q][c]) for q in range(m))
                    for c in range(m)
                ]
                for r in range(m)
            ]
        T.append(_sum_polys(P[r][r] for r in range(m)))
    e = [(Fraction(1),)]
    for k in range(1, m + 1):
        acc: Poly = ()
        for i in range(1, k + 1):
            term = _pmul(e[k - i], T[i])
            acc = _padd(acc, term if i % 2 == 1 else _pscale(term, Fraction(-1)))
        e.append(_pscale(acc, Fraction(1, k)))
    return tuple(_pscale(e[k], Fraction((-1) ** k)) for k in range(m + 1))


def _sum_polys(polys) -> Poly:
    acc: Poly = ()
    for p in polys:
        acc = _padd(acc, p)
    return acc


def _peval(poly: Poly, t):
    acc = 0
    for coef in reversed(poly):
        acc = acc * t + coef
    return acc


def predicted_charpoly_coeff(m: int, k: int) -> tuple[Fraction, int]:
    """(constant, exponent) of the leading term prod_{j<k} j! / prod_{j=m-k}^{m-1} j! t^(k(m-k))."""
    num = math.prod(math.factorial(j) for j in range(1, k))
    den = math.prod(math.factorial(j) for j in range(m - k, m))
    return Fraction(num, den), k * (m - k)


def charpoly_coeff_ratio(m: int, k: int, t) -> float:
    """|c_k(t)| divided by its predicted leading term; exact until the final division."""
    if not 1 <= k <= m:
        raise InputError(f"k must lie in 1..{m}")
    if not float(t) > 0:
        raise InputError("t must be positive")
    tq = as_fraction(t) if not isinstance(t, float) else Fraction(t)
    ck = abs(_peval(charpoly_coefficients(m)[k], tq))
    const, expo = predicted_charpoly_coeff(m, k)
    return float(ck / (const * tq**expo))


# ---------------------------------------------------------------------------
# dual norms
# ---------------------------------------------------------------------------


def _block_of(spec: HeintzeSpec, index: tuple[int, int, int]) -> tuple[int, Fraction]:
    i, j, k = index
    if (i, j, k) not in spec.basis_index:
        raise InputError(f"index {index} is not in the basis")
    return spec.jordan.m_ij(i, j), spec.jordan.eigenvalues[i - 1]


def _poly_part(m: int, k: int, s: float) -> float:
    # ||Exp(-s N^T) d_k|| with N^T d_k = d_{k+1}: coefficients (-s)^(r-k)/(r-k)!
    v = nilpotent_exp(m, -s).entries  # upper triangular; transpose maps d_k -> row k
    col = [v[k - 1][r] for r in range(m)]
    return math.sqrt(sum(float(x) ** 2 for x in col))


def dual_norm(spec: HeintzeSpec, scale: float, index: tuple[int, int, int], t: float) -> float:
    """||Exp(-t scale alpha^T)(d^{ij}_k)|| in the standard inner product."""
    m, mu = _block_of(spec, index)
    s = scale * t
    return _poly_part(m, index[2], s) * math.exp(-s * float(mu))


def dual_norm_ratio(spec: HeintzeSpec, scale: float, index: tuple[int, int, int], t: float) -> float:
    """dual_norm / (t^(m_ij - k) e^(-scale mu_i t)).

    The exponential factor commutes with the nilpotent part and cancels
    exactly, so only the polynomial part is evaluated (no underflow).
    """
    if not t > 0 or not scale > 0:
        raise InputError("t and scale must be positive")
    m, _ = _block_of(spec, index)
    k = index[2]
    return _poly_part(m, k, scale * t) / t ** (m - k)


def dual_norm_limit(spec: HeintzeSpec, scale: float, index: tuple[int, int, int]) -> float:
    """Limit of ``dual_norm_ratio`` as t -> infinity: scale^(m-k) / (m-k)!."""
    m, _ = _block_of(spec, index)
    k = index[2]
    return scale ** (m - k) / math.factorial(m - k)


# ---------------------------------------------------------------------------
# parabolic visual metrics
# ---------------------------------------------------------------------------


def _alpha_float(spec: HeintzeSpec) -> np.ndarray:
    return np.array([[float(x) for x in row] for row in spec.jordan.derivation_matrix()])


def _exp_alpha(spec: HeintzeSpec):
    """s -> Exp(s alpha) via the block structure (exact series for nilpotent parts)."""
    idx = spec.basis_index
    blocks = []
    start = 0
    for i, b in enumerate(spec.jordan.blocks):
        for m in b:
            blocks.append((start, m, float(spec.jordan.eigenvalues[i])))
            start += m

    def expm(s: float) -> np.ndarray:
        E = np.zeros((len(idx), len(idx)))
        for st, m, mu in blocks:
            E[st : st + m, st : st + m] = nilpotent_exp(m, float(s)).matrix() * math.exp(s * mu)
        return E

    return expm


def parabolic_metric_abelian(
    spec: HeintzeSpec,
    x: Sequence[float],
    y: Sequence[float],
    weights: Sequence[float] | None = None,
    tol: float = 1e-12,
) -> float:
    """e^{-s*}, s* the largest s with ||Exp(s alpha)(y - x)||_0 = 1.

    ``weights`` are the b_k of a base norm ||v||_0^2 = sum (v_k / b_k)^2;
    they change the metric only up to a multiplicative constant.
    """
    if not spec.algebra.is_abelian:
        raise PreconditionError("parabolic_metric_abelian needs an abelian algebra")
    v = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    if not np.any(v):
        return 0.0
    b = np.ones(spec.n) if weights is None else np.asarray(weights, dtype=float)
    expm = _exp_alpha(spec)

    def g(s: float) -> float:
        return float(np.linalg.norm((expm(s) @ v) / b)) - 1.0

    A = _alpha_float(spec)
    Bi = np.diag(1.0 / b)
    sym = Bi @ A @ np.diag(b)
    sym = 0.5 * (sym + sym.T)
    monotone = bool(np.all(np.linalg.eigvalsh(sym) > 0))

    # start near the scale of v: e^s ||v|| ~ 1
    s_hi = -math.log(np.linalg.norm(v / b))
    while g(s_hi) <= 0:
        s_hi += 1.0
    # walk down to a point below the crossing; with a monotone norm the
    # step can grow, otherwise a fine fixed step keeps the largest crossing
    step = 1.0 if monotone else 1e-2
    prev = s_hi
    while True:
        s = prev - step
        if g(s) <= 0:
            lo, hi = s, prev
            break
        prev = s
        if monotone:
            step *= 2.0
    # bisection on s to absolute tolerance ``tol``
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return math.exp(-0.5 * (lo + hi))


def closed_form_metric_x3(v: Sequence[float], w: Sequence[float]) -> float:
    """max{|dy|, |dx - dy log|dy||}, with dy log|dy| = 0 when dy = 0."""
    dx = float(w[0]) - float(v[0])
    dy = float(w[1]) - float(v[1])
    ady = abs(dy)
    lg = dy * math.log(ady) if ady > 0 else 0.0
    return max(ady, abs(dx - lg))


def diag_metric(v: Sequence[float], w: Sequence[float], mu: float) -> float:
    """max{|dx|, |dy|^(1/mu)}: the standard quasi-metric for diag(1, mu)."""
    return max(abs(float(w[0]) - float(v[0])), abs(float(w[1]) - float(v[1])) ** (1.0 / mu))
