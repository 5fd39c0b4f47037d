"""Young functions, the phi_{p,kappa} family and Luxembourg norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import DomainError, InputError, PreconditionError

__all__ = [
    "PKExponent",
    "YoungFunction",
    "WeightedSamples",
    "SeriesVerdict",
    "make_phi_pk",
    "luxembourg_norm",
    "doubling_exponent",
    "lower_doubling_check",
    "small_t_dominates",
    "lipschitz_membership_series",
]

REL_TOL = 1e-12


@dataclass(frozen=True, order=True)
class PKExponent:
    """Pair (p, kappa), ordered lexicographically.

    Components may be ``Fraction`` (exact, used by the invariants module) or
    floats.  ``dataclass(order=True)`` compares the field tuple, which is the
    lexicographic order.
    """

    p: Fraction | float
    kappa: Fraction | float

    def as_floats(self) -> tuple[float, float]:
        return float(self.p), float(self.kappa)

    def __str__(self) -> str:
        return f"({self.p}, {self.kappa})"

    @classmethod
    def parse(cls, text: str) -> "PKExponent":
        """Parse ``"p,kappa"``; rational strings such as ``"3/2"`` stay exact."""
        parts = [s.strip() for s in text.replace("(", "").replace(")", "").split(",")]
        if len(parts) != 2:
            raise ValueError(f"expected 'p,kappa', got {text!r}")
        return cls(Fraction(parts[0]), Fraction(parts[1]))


@dataclass(frozen=True)
class YoungFunction:
    """An even convex function with optional growth metadata.

    ``doubling_constant`` is a constant K with phi(2t) <= K phi(t) on
    (0, ``doubling_threshold``].  ``growth_exponent`` is an upper bound for
    t phi'(t) / phi(t) on the same range; the radial-shift and lower-doubling
    estimates use this exponent, not K.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    doubling_constant: float | None = None
    doubling_threshold: float | None = None
    growth_exponent: float | None = None
    family_params: PKExponent | None = None
    scale: float = 1.0
    log_evaluator: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __call__(self, t):
        return self.scale * self.evaluator(np.asarray(t, dtype=np.float64))

    def prime(self, t):
        return self.scale * self.derivative(np.asarray(t, dtype=np.float64))

    def log(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.log_evaluator is not None:
            return math.log(self.scale) + self.log_evaluator(t)
        with np.errstate(divide="ignore"):
            return np.log(self(t))

    def scaled(self, c: float) -> "YoungFunction":
        """The Young function c * phi (c >= 1 keeps the doubling data valid)."""
        return YoungFunction(
            self.evaluator,
            self.derivative,
            self.doubling_constant,
            self.doubling_threshold,
            self.growth_exponent,
            self.family_params,
            self.scale * c,
            self.log_evaluator,
        )

    def objective(self, values: np.ndarray, weights: np.ndarray, alpha: float) -> float:
        """sum_i w_i phi(f_i / alpha)."""
        if self.family_params is not None:
            p, kappa = self.family_params.as_floats()
            return self.scale * kernels.weighted_phi_sum(values, weights, 1.0 / alpha, p, kappa)
        return float(np.dot(weights, self(values / alpha)))


@dataclass(frozen=True)
class WeightedSamples:
    """Discrete measure: atoms (value, weight)."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64).ravel())
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64).ravel())
        if v.shape != w.shape:
            raise InputError(f"{v.size} values but {w.size} weights")
        if np.any(np.isnan(w)) or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InputError("weights must be finite and nonnegative")
        if not np.all(np.isfinite(v)):
            raise InputError("values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def counting(cls, values) -> "WeightedSamples":
        v = np.asarray(values, dtype=np.float64).ravel()
        return cls(v, np.ones_like(v))

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]]) -> "WeightedSamples":
        atoms = list(atoms)
        if not atoms:
            return cls(np.zeros(0), np.zeros(0))
        v, w = zip(*atoms)
        return cls(np.array(v, dtype=float), np.array(w, dtype=float))

    def __len__(self) -> int:
        return self.values.size


def make_phi_pk(e: PKExponent | tuple) -> YoungFunction:
    """phi_{p,kappa}(t) = |t|^p / log(e + 1/|t|)^kappa (natural log)."""
    if not isinstance(e, PKExponent):
        e = PKExponent(*e)
    p, kappa = e.as_floats()
    if not p >= 1 or not kappa >= 0:
        raise DomainError(f"phi_(p,kappa) needs p >= 1 and kappa >= 0, got {e}")

    def value(t):
        return kernels.phi_pk_np(t, p, kappa)

    def deriv(t):
        a = np.abs(t)
        out = np.zeros_like(a)
        nz = a > 0
        an = a[nz]
        L = np.log(math.e + 1.0 / an)
        # d/dt [t^p L^-kappa] = t^(p-1) L^-kappa (p + kappa / ((e t + 1) L))
        out[nz] = an ** (p - 1) / L**kappa * (p + kappa / ((math.e * an + 1.0) * L))
        return out

    def logvalue(t):
        a = np.abs(t)
        with np.errstate(divide="ignore"):
            out = p * np.log(a)
            nz = a > 0
            out[nz] -= kappa * np.log(np.log(math.e + 1.0 / a[nz]))
        return out

    growth = p + kappa
    return YoungFunction(
        evaluator=value,
        derivative=deriv,
        doubling_constant=2.0**growth,
        doubling_threshold=math.inf,
        growth_exponent=growth,
        family_params=PKExponent(e.p, e.kappa),
        log_evaluator=logvalue,
    )


def _as_samples(samples) -> WeightedSamples:
    if isinstance(samples, WeightedSamples):
        return samples
    return WeightedSamples.counting(samples)


def luxembourg_norm(phi: YoungFunction, samples, *, trace: list | None = None) -> float:
    """inf{alpha > 0 : sum_i w_i phi(f_i / alpha) <= 1}.

    The objective is nonincreasing in alpha.  A bracket is grown by doubling
    or halving from the weighted l^p norm of the values, then the crossing is
    refined with Brent's method to relative tolerance 1e-12.  If ``trace`` is a list, every (alpha, objective)
    evaluation is appended to it.
    """
    s = _as_samples(samples)
    active = (s.weights > 0) & (s.values != 0)
    if not np.any(active):
        return 0.0
    v = np.ascontiguousarray(s.values[active])
    w = np.ascontiguousarray(s.weights[active])

    def g(alpha):
        val = phi.objective(v, w, alpha)
        if trace is not None:
            trace.append((alpha, val))
        return val

    lo, hi = _bracket(g, _initial_alpha(phi, v, w))
    if hi is None:
        return lo
    return brentq(lambda a: g(a) - 1.0, lo, hi, xtol=1e-300, rtol=REL_TOL, maxiter=500)


def _initial_alpha(phi: YoungFunction, v: np.ndarray, w: np.ndarray) -> float:
    """Starting point for the bracket: the weighted l^p norm (p = 2 if unknown)."""
    p = float(phi.family_params.p) if phi.family_params is not None else 2.0
    a = np.abs(v)
    m = float(np.max(a))
    guess = m * float(np.dot(w, (a / m) ** p)) ** (1.0 / p)
    return guess if guess > 0 and math.isfinite(guess) else m


def _bracket(g, start: float) -> tuple[float, float | None]:
    """lo < hi with g(lo) >= 1 >= g(hi), grown geometrically from ``start``.

    Returns (alpha, None) when an evaluation hits 1 exactly or lo underflows.
    """
    a = start
    val = g(a)
    if val == 1.0:
        return a, None
    if val > 1.0:
        while True:
            lo, a = a, a * 2.0
            if not math.isfinite(a):
                raise AssertionError("no finite alpha satisfies the Luxembourg constraint")
            val = g(a)
            if val <= 1.0:
                return (a, None) if val == 1.0 else (lo, a)
    while True:
        hi, a = a, a / 2.0
        if a == 0.0:
            return 0.0, None
        val = g(a)
        if val >= 1.0:
            return (a, None) if val == 1.0 else (a, hi)


def doubling_exponent(phi: YoungFunction, jmin: int = 10, jmax: int = 50) -> float:
    """Estimate p_phi = limsup_{t->0} t phi'(t) / phi(t).

    The ratio is sampled at t = 2^-j.  Ratios that approach their limit at a
    logarithmic rate (the phi_{p,kappa} family) are extrapolated to t -> 0 by
    a quadratic fit in s = 1 / log(1/t).  Returns ``inf`` when the sampled
    ratios blow up.
    """
    j = np.arange(jmin, jmax + 1, dtype=float)
    t = 2.0**-j
    with np.errstate(divide="ignore", invalid="ignore"):
        r = t * phi.prime(t) / phi(t)
    if not np.all(np.isfinite(r)) or r[-1] > 1e6:
        return math.inf
    if np.all(np.diff(r[-10:]) > 0) and r[-1] > 2 * r[-10]:
        return math.inf
    if np.ptp(r) <= 1e-12 * abs(r[-1]):
        return float(r[-1])
    # fit only the far tail, where O(t) corrections are below roundoff
    tail = j >= max(jmin, (jmin + 2 * jmax) // 3)
    s = 1.0 / (j[tail] * math.log(2.0))
    coef = np.polynomial.polynomial.polyfit(s, r[tail], 2)
    return float(max(coef[0], 1.0))


def lower_doubling_check(phi: YoungFunction, x: float, y: float) -> bool:
    """x^K phi(y) <= phi(x y) for x in [0, 1], with K the growth exponent."""
    if phi.growth_exponent is None or phi.doubling_threshold != math.inf:
        raise PreconditionError("lower doubling needs a growth exponent valid on (0, inf)")
    if not 0.0 <= x <= 1.0 or y < 0:
        raise PreconditionError(f"need x in [0,1] and y >= 0, got x={x}, y={y}")
    lhs = x**phi.growth_exponent * float(phi(y))
    rhs = float(phi(x * y))
    # roundoff slack: absolute 1e-15 plus a few ulps of the right side
    return lhs <= rhs * (1.0 + 1e-12) + 1e-15


def small_t_dominates(
    phi1: YoungFunction,
    phi2: YoungFunction,
    a_grid: Sequence[float] | None = None,
    b_grid: Sequence[float] | None = None,
    t0: float = 1.0,
    n: int = 2048,
    tmin: float = 1e-300,
) -> bool:
    """Search for constants a, b with phi2(t) <= a phi1(b t) on (0, t0].

    ``True`` exhibits a witness on the sample.  ``False`` only means no pair
    on the grid works; it is not a proof that phi1 does not dominate phi2.
    The comparison runs in log space on a geometric sample down to ``tmin``
    so that logarithmic corrections are visible before underflow.
    """
    if a_grid is None:
        a_grid = [2.0**k for k in range(-6, 7)]
    if b_grid is None:
        b_grid = [2.0**k for k in range(-6, 7)]
    t = np.geomspace(tmin * t0, t0, n)
    lhs = phi2.log(t)
    for b in b_grid:
        base = phi1.log(b * t)
        for a in a_grid:
            if np.all(lhs <= math.log(a) + base + 1e-12 * np.abs(lhs)):
                return True
    return False


@dataclass(frozen=True)
class SeriesVerdict:
    kind: str  # "finite" | "divergent"
    value: float | None = None


def lipschitz_membership_series(e: PKExponent | tuple, Q: float) -> SeriesVerdict:
    """Convergence of sum_{j>=0} phi_{p,kappa}(2^-j) 2^{jQ}.

    Terms are 2^{j(Q-p)} / log(e + 2^j)^kappa, so the series converges iff
    p > Q, or p == Q and kappa > 1.  Finite cases also carry the sum.
    """
    if not isinstance(e, PKExponent):
        e = PKExponent(*e)
    if not Q > 0:
        raise DomainError("Q must be positive")
    if e <= PKExponent(Fraction(Q) if isinstance(e.p, Fraction) else Q, 1):
        return SeriesVerdict("divergent")
    p, kappa = e.as_floats()
    Qf = float(Q)
    # the p == Q series decays only like j^-kappa, too slowly for extrapolating
    # summers; sum N terms directly and close with an Euler-Maclaurin tail
    N = 1000
    with mpmath.workdps(30):
        def f(x):
            return mpmath.power(2, x * (Qf - p)) / mpmath.log(mpmath.e + mpmath.power(2, x)) ** kappa

        head = mpmath.fsum(f(j) for j in range(N))
        tail = mpmath.quad(f, [N, mpmath.inf]) + f(N) / 2 - mpmath.diff(f, N) / 12
        total = head + tail
    return SeriesVerdict("finite", float(total))
