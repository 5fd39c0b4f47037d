"""Critical exponents, spectrum dimensions and classification verdicts.

All exponents are exact ``Fraction`` pairs compared lexicographically
through :class:`hql.young.PKExponent`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import InputError, PreconditionError
from .lie import (
    HeintzeSpec,
    SubalgebraChain,
    Subspace,
    as_fraction,
    is_carnot_type,
    subgroup_chain,
)
from .young import PKExponent

__all__ = [
    "SpectrumResult",
    "ExponentInterval",
    "ClassificationVerdict",
    "critical_exponents",
    "global_critical",
    "local_trivial_at_N_point",
    "spectrum_at_infinity",
    "local_infinity_exponent_bounds",
    "pointed_sphere_report",
    "conformal_dim_attainment",
    "abelian_qi_classify",
    "carnot_vs_noncarnot",
    "vanishing_threshold",
    "extension_threshold",
    "index_set",
    "i_m_functions",
    "unresolved_regions",
    "default_exponents",
]

QUOTIENT_K = "QuotientByK"
QUOTIENT_H = "QuotientByH"
SEPARATES = "SeparatesPoints"
UNRESOLVED = "Unresolved"


def _exponent(e) -> PKExponent:
    if isinstance(e, PKExponent):
        return PKExponent(as_fraction(e.p), as_fraction(e.kappa))
    if isinstance(e, str):
        return PKExponent.parse(e)
    p, kappa = e
    return PKExponent(as_fraction(p), as_fraction(kappa))


@dataclass(frozen=True)
class SpectrumResult:
    verdict: str
    index: int | None = None
    dimension: int | None = None
    subgroup: Subspace | None = None
    extrapolated: bool = False

    def label(self) -> str:
        if self.verdict in (QUOTIENT_K, QUOTIENT_H):
            return f"{self.verdict}({self.index})"
        return self.verdict

    def to_dict(self) -> dict:
        out = {"verdict": self.label(), "dimension": self.dimension}
        if self.subgroup is not None:
            out["subgroup_basis"] = self.subgroup.to_lists()
        if self.extrapolated:
            out["extrapolated"] = True
        return out


@dataclass(frozen=True)
class ExponentInterval:
    lower: PKExponent
    upper: PKExponent

    def __post_init__(self):
        if self.upper < self.lower:
            raise ValueError("interval bounds out of order")


@dataclass(frozen=True)
class ClassificationVerdict:
    outcome: str  # "Isomorphic" | "Distinguished" | "Inconclusive" | "NotQuasiIsometric"
    scale: Fraction | None = None
    witness: str | None = None
    values: tuple = ()
    reason: str | None = None

    def to_dict(self) -> dict:
        out: dict = {"outcome": self.outcome}
        if self.scale is not None:
            out["scale"] = str(self.scale)
        if self.witness is not None:
            out["witness"] = self.witness
            out["values"] = [_jsonable(v) for v in self.values]
        if self.reason is not None:
            out["reason"] = self.reason
        return out


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------


def critical_exponents(spec: HeintzeSpec) -> tuple[Fraction, ...]:
    """(p_1, ..., p_d, p_{d+1} = 1) with p_i = tr(alpha) / mu_i."""
    tr = spec.jordan.trace
    return tuple(tr / mu for mu in spec.jordan.eigenvalues) + (Fraction(1),)


def global_critical(spec: HeintzeSpec) -> PKExponent:
    """(p_1, 1 + p_1 (m_1 - 1)); cohomology is still trivial at this exponent."""
    p1 = critical_exponents(spec)[0]
    m1 = spec.jordan.m(1)
    return PKExponent(p1, 1 + p1 * (m1 - 1))


def local_trivial_at_N_point(spec: HeintzeSpec, e) -> bool:
    return _exponent(e) <= global_critical(spec)


def _quotient(kind: str, i: int, spec: HeintzeSpec, chain: SubalgebraChain) -> SpectrumResult:
    sub = chain.k[i] if kind == QUOTIENT_K else chain.h[i]
    return SpectrumResult(kind, i, spec.n - sub.dim, sub)


def spectrum_at_infinity(spec: HeintzeSpec, e, chain: SubalgebraChain | None = None) -> SpectrumResult:
    """Which quotient of N the spectrum of the local algebra at infinity is."""
    e = _exponent(e)
    chain = chain or subgroup_chain(spec)
    p, kappa = e.p, e.kappa
    ps = critical_exponents(spec)
    d = spec.jordan.d
    if p > ps[0]:
        return SpectrumResult(SEPARATES, None, spec.n, None, extrapolated=True)
    for i in range(1, d + 1):
        pi, pnext = ps[i - 1], ps[i]
        if pnext < p < pi:
            return _quotient(QUOTIENT_K, i, spec, chain)
        if p == pi:
            mi = spec.jordan.m(i)
            if mi == 1:
                return _quotient(QUOTIENT_K, i if kappa <= 1 else i - 1, spec, chain)
            if 1 + pi * (mi - 2) < kappa <= 1 + pi * (mi - 1):
                return _quotient(QUOTIENT_H, i, spec, chain)
            return SpectrumResult(UNRESOLVED)
    return SpectrumResult(UNRESOLVED)


def unresolved_regions(spec: HeintzeSpec) -> list[dict]:
    """Parameter regions where spectrum_at_infinity answers Unresolved.

    Each region is {"p": value or {"at_most": value}, "kappa": None (any) or
    {"at_most": a} / {"greater_than": b}}.
    """
    ps = critical_exponents(spec)
    out = []
    for i in range(1, spec.jordan.d + 1):
        pi, mi = ps[i - 1], spec.jordan.m(i)
        if mi >= 2:
            out.append({"p": pi, "kappa": {"at_most": 1 + pi * (mi - 2)}})
            out.append({"p": pi, "kappa": {"greater_than": 1 + pi * (mi - 1)}})
    out.append({"p": {"at_most": Fraction(1)}, "kappa": None})
    return out


def default_exponents(spec: HeintzeSpec) -> list[PKExponent]:
    """A table covering every regime: each p_i with the kappa breakpoints around it,
    the midpoints of the open intervals, and one exponent above p_1."""
    ps = critical_exponents(spec)
    out = {PKExponent(ps[0] + 1, Fraction(0))}
    for i in range(1, spec.jordan.d + 1):
        pi, mi = ps[i - 1], spec.jordan.m(i)
        for kappa in {Fraction(0), Fraction(1), 1 + pi * (mi - 1), 2 + pi * (mi - 1)}:
            out.add(PKExponent(pi, kappa))
        out.add(PKExponent((pi + ps[i]) / 2, Fraction(0)))
    return sorted(out)


def local_infinity_exponent_bounds(spec: HeintzeSpec, chain: SubalgebraChain | None = None) -> ExponentInterval:
    chain = chain or subgroup_chain(spec)
    i_alpha = next(i for i in range(1, spec.jordan.d + 1) if chain.k[i].dim == spec.n)
    p = critical_exponents(spec)[i_alpha - 1]
    m = spec.jordan.m(i_alpha)
    return ExponentInterval(PKExponent(p, Fraction(0)), PKExponent(p, 1 + p * max(m - 2, 0)))


def vanishing_threshold(spec: HeintzeSpec, index: tuple[int, int, int]) -> PKExponent:
    """(p_i, 1 + p_i (m_ij + 1 - 2k)); the second entry may be negative."""
    i, j, k = index
    if (i, j, k) not in spec.basis_index:
        raise InputError(f"index {index} is not in the basis")
    p = critical_exponents(spec)[i - 1]
    return PKExponent(p, 1 + p * (spec.jordan.m_ij(i, j) + 1 - 2 * k))


def index_set(spec: HeintzeSpec, kind: str, i: int) -> frozenset:
    """The index sets K_i = {(r,j,k): r <= i} and H_i = K_{i-1} + maximal-block heads."""
    idx = spec.basis_index
    if kind == "K":
        return frozenset(t for t in idx if t[0] <= i)
    if kind == "H":
        if i < 1:
            raise InputError("H_i needs i >= 1")
        mi = spec.jordan.m(i)
        head = {(i, j, 1) for (r, j, k) in idx if r == i and spec.jordan.m_ij(i, j) == mi}
        return frozenset(t for t in idx if t[0] < i) | frozenset(head)
    raise InputError(f"index set kind must be 'K' or 'H', got {kind!r}")


def i_m_functions(spec: HeintzeSpec, I0: Iterable[tuple[int, int, int]]) -> tuple[int, int]:
    I0 = set(I0)
    rest = [t for t in spec.basis_index if t not in I0]
    if not rest:
        raise PreconditionError("no extension threshold: the index set is everything")
    i = min(r for r, _, _ in rest)
    m = max(spec.jordan.m_ij(i, s) - l for r, s, l in rest if r == i)
    return i, m


def extension_threshold(spec: HeintzeSpec, index_set_spec) -> PKExponent:
    """(p_i, 1 + p_i m) for an index set given as ("K", i), ("H", i) or explicit triples."""
    if isinstance(index_set_spec, tuple) and len(index_set_spec) == 2 and isinstance(index_set_spec[0], str):
        I0 = index_set(spec, *index_set_spec)
    else:
        I0 = index_set_spec
    i, m = i_m_functions(spec, I0)
    p = critical_exponents(spec)[i - 1]
    return PKExponent(p, 1 + p * m)


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointedSphereVerdict:
    verdict: str  # "FixedInfinity" | "CarnotInconclusive"
    preserved_cosets: Subspace | None = None

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict}
        if self.preserved_cosets is not None:
            out["preserved_cosets_of"] = self.preserved_cosets.to_lists()
        return out


def pointed_sphere_report(spec: HeintzeSpec, chain: SubalgebraChain | None = None) -> PointedSphereVerdict:
    if is_carnot_type(spec):
        return PointedSphereVerdict("CarnotInconclusive")
    chain = chain or subgroup_chain(spec)
    return PointedSphereVerdict("FixedInfinity", chain.h[1])


def conformal_dim_attainment(spec: HeintzeSpec) -> str:
    return "NotAttained" if spec.jordan.m(1) >= 2 else "Inconclusive"


def _normalized(spec: HeintzeSpec) -> list[tuple[Fraction, tuple[int, ...]]]:
    mu1 = spec.jordan.eigenvalues[0]
    return [(mu / mu1, tuple(sorted(b, reverse=True))) for mu, b in zip(spec.jordan.eigenvalues, spec.jordan.blocks)]


def abelian_qi_classify(a: HeintzeSpec, b: HeintzeSpec) -> ClassificationVerdict:
    """Abelian N: quasi-isometric iff the Jordan forms agree up to scaling."""
    if not (a.algebra.is_abelian and b.algebra.is_abelian):
        raise PreconditionError("abelian_qi_classify needs abelian algebras; use carnot_vs_noncarnot")
    na, nb = _normalized(a), _normalized(b)
    if len(na) != len(nb):
        return ClassificationVerdict("Distinguished", witness="d", values=(len(na), len(nb)))
    ra, rb = [x for x, _ in na], [x for x, _ in nb]
    if ra != rb:
        return ClassificationVerdict("Distinguished", witness="eigenvalue_ratios", values=(ra, rb))
    da, db = [sum(bl) for _, bl in na], [sum(bl) for _, bl in nb]
    if da != db:
        return ClassificationVerdict("Distinguished", witness="dim_V", values=(da, db))
    ba, bb = [list(bl) for _, bl in na], [list(bl) for _, bl in nb]
    if ba != bb:
        return ClassificationVerdict("Distinguished", witness="block_multiset", values=(ba, bb))
    scale = a.jordan.eigenvalues[0] / b.jordan.eigenvalues[0]
    return ClassificationVerdict("Isomorphic", scale=scale)


def _h1_invariants(spec: HeintzeSpec, chain: SubalgebraChain) -> dict:
    h1 = chain.h[1]
    mu1 = spec.jordan.eigenvalues[0]
    weights = []
    for i, mu in enumerate(spec.jordan.eigenvalues, start=1):
        eig = Subspace.span(spec.n, [spec.unit(c) for c in spec.eigen_coords(i)])
        inter = h1.dim + eig.dim - (h1 + eig).dim
        if inter:
            weights.append((mu / mu1, inter))
    return {
        "dim_h1": h1.dim,
        "weights_h1": weights,
        "mu1_blocks_in_h1": weights[0][1] if weights and weights[0][0] == 1 else 0,
    }


def carnot_vs_noncarnot(a: HeintzeSpec, b: HeintzeSpec) -> ClassificationVerdict:
    ca, cb = is_carnot_type(a), is_carnot_type(b)
    if ca != cb:
        return ClassificationVerdict(
            "NotQuasiIsometric", witness="carnot_type", values=(ca, cb), reason="Carnot mismatch"
        )
    ia = _h1_invariants(a, subgroup_chain(a))
    ib = _h1_invariants(b, subgroup_chain(b))
    for key in ("dim_h1", "weights_h1", "mu1_blocks_in_h1"):
        if ia[key] != ib[key]:
            return ClassificationVerdict(
                "NotQuasiIsometric", witness=key, values=(ia[key], ib[key]), reason=f"{key} differs"
            )
    return ClassificationVerdict("Inconclusive", reason="necessary H_1 invariants agree")
