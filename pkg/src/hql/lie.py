"""Nilpotent Lie algebras, Jordan-form derivations and the subalgebra chain.

Everything here is exact: vectors are tuples of ``Fraction`` and subspaces
are stored by their reduced row echelon basis, which is canonical, so two
``Subspace`` objects are equal iff they span the same space.

Indices in diagnostics and in spec files are 1-based; internal arrays are
0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .errors import InputError, PreconditionError, SpecValidationError

__all__ = [
    "Subspace",
    "LieAlgebraSpec",
    "JordanSpec",
    "HeintzeSpec",
    "SubalgebraChain",
    "ValidationReport",
    "CheckResult",
    "as_fraction",
    "rref",
    "kernel",
    "validate_spec",
    "lie_span",
    "subgroup_chain",
    "is_carnot_type",
    "normalizer",
    "almost_isometry_predicate",
    "jordan_spec_from_matrix",
    "permute_blocks",
]

Vector = tuple  # tuple[Fraction, ...]


def as_fraction(x) -> Fraction:
    """Exact rational from int, Fraction, rational string ("3/2") or float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InputError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        # decimal literal as written, e.g. 1.5 -> 3/2, 0.1 -> 1/10
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational number: {x!r}") from exc
    raise InputError(f"not a rational number: {x!r}")


# ---------------------------------------------------------------------------
# exact linear algebra
# ---------------------------------------------------------------------------


def rref(rows: Iterable[Sequence[Fraction]], n: int | None = None) -> tuple[Vector, ...]:
    """Nonzero rows of the reduced row echelon form."""
    m = [list(map(Fraction, r)) for r in rows]
    if not m:
        return ()
    ncols = len(m[0]) if n is None else n
    piv_row = 0
    for c in range(ncols):
        pr = next((r for r in range(piv_row, len(m)) if m[r][c] != 0), None)
        if pr is None:
            continue
        m[piv_row], m[pr] = m[pr], m[piv_row]
        pv = m[piv_row][c]
        if pv != 1:
            m[piv_row] = [x / pv for x in m[piv_row]]
        for r in range(len(m)):
            if r != piv_row and m[r][c] != 0:
                f = m[r][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[piv_row])]
        piv_row += 1
        if piv_row == len(m):
            break
    return tuple(tuple(r) for r in m[:piv_row])


def kernel(rows: Sequence[Sequence[Fraction]], n: int) -> tuple[Vector, ...]:
    """Basis of {x : A x = 0} for the matrix with the given rows (n columns)."""
    R = rref(rows, n)
    pivots = []
    for r in R:
        pivots.append(next(c for c in range(n) if r[c] != 0))
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * n
        x[f] = Fraction(1)
        for r, pc in zip(R, pivots):
            x[pc] = -r[f]
        basis.append(tuple(x))
    return tuple(basis)


def _unit(n: int, a: int) -> Vector:
    return tuple(Fraction(1) if k == a else Fraction(0) for k in range(n))


@dataclass(frozen=True)
class Subspace:
    """Subspace of Q^n given by its canonical (RREF) basis."""

    n: int
    basis: tuple[Vector, ...]

    @classmethod
    def span(cls, n: int, vectors: Iterable[Sequence]) -> "Subspace":
        return cls(n, rref([tuple(as_fraction(x) for x in v) for v in vectors], n))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, ())

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, tuple(_unit(n, a) for a in range(n)))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, v: Sequence) -> bool:
        return len(rref(self.basis + (tuple(v),), self.n)) == self.dim

    def issubset(self, other: "Subspace") -> bool:
        return all(other.contains(v) for v in self.basis)

    def __add__(self, other: "Subspace") -> "Subspace":
        return Subspace(self.n, rref(self.basis + other.basis, self.n))

    def annihilator(self) -> tuple[Vector, ...]:
        """Basis of linear functionals vanishing on the subspace."""
        return kernel(self.basis, self.n)

    def to_lists(self) -> list[list[str]]:
        return [[str(x) for x in v] for v in self.basis]


# ---------------------------------------------------------------------------
# Lie algebras and Jordan data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LieAlgebraSpec:
    """Structure constants c[i][j][k]: [e_i, e_j] = sum_k c[i][j][k] e_k."""

    n: int
    c: tuple  # n x n x n nested tuples of Fraction

    @classmethod
    def abelian(cls, n: int) -> "LieAlgebraSpec":
        z = Fraction(0)
        return cls(n, tuple(tuple(tuple(z for _ in range(n)) for _ in range(n)) for _ in range(n)))

    @classmethod
    def from_brackets(cls, n: int, brackets: Iterable[tuple], antisymmetrize: bool = True) -> "LieAlgebraSpec":
        """Build from sparse 1-based entries (i, j, k, value) meaning c^k_ij = value.

        With ``antisymmetrize`` an entry for (i, j) whose mirror (j, i) is not
        listed also sets c^k_ji = -value.  Listing both with inconsistent
        values is kept as given and reported by ``validate_spec``.
        """
        if n < 1:
            raise InputError("dimension must be positive")
        c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
        given = set()
        entries = []
        for item in brackets:
            if len(item) != 4:
                raise InputError(f"bracket entry needs (i, j, k, value), got {item!r}")
            i, j, k, val = item
            for idx in (i, j, k):
                if not isinstance(idx, int) or not 1 <= idx <= n:
                    raise InputError(f"bracket index {idx!r} out of range 1..{n}")
            entries.append((i - 1, j - 1, k - 1, as_fraction(val)))
            given.add((i - 1, j - 1))
        for i, j, k, val in entries:
            c[i][j][k] += val
        if antisymmetrize:
            for i, j, k, val in entries:
                if (j, i) not in given and i != j:
                    c[j][i][k] -= val
        return cls(n, tuple(tuple(tuple(row) for row in plane) for plane in c))

    def to_brackets(self) -> list[tuple[int, int, int, Fraction]]:
        """Sparse 1-based entries with i < j (the antisymmetric half)."""
        out = []
        for i in range(self.n):
            for j in range(i + 1, self.n):
                for k in range(self.n):
                    if self.c[i][j][k] != 0:
                        out.append((i + 1, j + 1, k + 1, self.c[i][j][k]))
        return out

    @property
    def is_abelian(self) -> bool:
        return all(x == 0 for plane in self.c for row in plane for x in row)

    def bracket(self, u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
        n = self.n
        out = [Fraction(0)] * n
        for i in range(n):
            if u[i] == 0:
                continue
            for j in range(n):
                if v[j] == 0:
                    continue
                f = u[i] * v[j]
                cij = self.c[i][j]
                for k in range(n):
                    if cij[k] != 0:
                        out[k] += f * cij[k]
        return tuple(out)

    def bracket_basis(self, a: int, b: int) -> Vector:
        return tuple(self.c[a][b])


@dataclass(frozen=True)
class JordanSpec:
    """Eigenvalues mu_1 < ... < mu_d with the block sizes of each."""

    eigenvalues: tuple[Fraction, ...]
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        ev = tuple(as_fraction(x) for x in self.eigenvalues)
        bl = tuple(tuple(int(m) for m in b) for b in self.blocks)
        if len(ev) != len(bl):
            raise InputError(f"{len(ev)} eigenvalues but {len(bl)} block lists")
        for i, b in enumerate(bl):
            if not b:
                raise InputError(f"eigenvalue {i + 1} has no Jordan blocks")
            if any(m < 1 for m in b):
                raise InputError(f"block sizes must be >= 1 (eigenvalue {i + 1})")
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "blocks", bl)

    @property
    def d(self) -> int:
        return len(self.eigenvalues)

    @property
    def n(self) -> int:
        return sum(sum(b) for b in self.blocks)

    @property
    def trace(self) -> Fraction:
        return sum((mu * sum(b) for mu, b in zip(self.eigenvalues, self.blocks)), Fraction(0))

    def m(self, i: int) -> int:
        """Largest block size for eigenvalue i (1-based)."""
        return max(self.blocks[i - 1])

    def m_ij(self, i: int, j: int) -> int:
        return self.blocks[i - 1][j - 1]

    def basis_index(self) -> tuple[tuple[int, int, int], ...]:
        """Triples (i, j, k), 1-based, in coordinate order."""
        return tuple(
            (i + 1, j + 1, k + 1)
            for i, b in enumerate(self.blocks)
            for j, m in enumerate(b)
            for k in range(m)
        )

    def derivation_matrix(self) -> tuple[tuple[Fraction, ...], ...]:
        """alpha in the Jordan basis: alpha d_k = mu d_k + d_{k-1}; columns are images."""
        idx = self.basis_index()
        n = len(idx)
        A = [[Fraction(0)] * n for _ in range(n)]
        for col, (i, j, k) in enumerate(idx):
            A[col][col] = self.eigenvalues[i - 1]
            if k > 1:
                A[col - 1][col] = Fraction(1)
        return tuple(tuple(r) for r in A)


@dataclass(frozen=True)
class HeintzeSpec:
    algebra: LieAlgebraSpec
    jordan: JordanSpec
    name: str = ""

    @property
    def n(self) -> int:
        return self.algebra.n

    @property
    def basis_index(self) -> tuple[tuple[int, int, int], ...]:
        return self.jordan.basis_index()

    def coord(self, i: int, j: int, k: int) -> int:
        """0-based coordinate of d^{ij}_k."""
        try:
            return self.basis_index.index((i, j, k))
        except ValueError:
            raise InputError(f"index ({i},{j},{k}) is not in the basis") from None

    def apply_alpha(self, v: Sequence[Fraction]) -> Vector:
        A = self.jordan.derivation_matrix()
        n = len(v)
        return tuple(sum((A[r][c] * v[c] for c in range(n) if A[r][c] != 0), Fraction(0)) for r in range(n))

    def eigen_coords(self, i: int, top_only: bool = False) -> list[int]:
        """Coordinates of d^{ij}_1 for eigenvalue i (optionally only maximal blocks)."""
        mi = self.jordan.m(i)
        out = []
        for c, (a, j, k) in enumerate(self.basis_index):
            if a == i and k == 1 and (not top_only or self.jordan.m_ij(i, j) == mi):
                out.append(c)
        return out

    def block_coords(self, i: int) -> list[int]:
        """Coordinates spanning the generalised eigenspace V_i."""
        return [c for c, (a, _, _) in enumerate(self.basis_index) if a == i]

    def unit(self, c: int) -> Vector:
        return _unit(self.n, c)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class ValidationReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        if self.ok:
            return "all checks passed"
        return "; ".join(f"{c.name}: {', '.join(c.diagnostics[:3])}" for c in self.failed())

    def to_dict(self) -> dict:
        return {
            "valid": self.ok,
            "checks": [{"name": c.name, "passed": c.passed, "diagnostics": c.diagnostics} for c in self.checks],
        }

    def raise_if_invalid(self) -> None:
        if not self.ok:
            raise SpecValidationError(self)


def _check_dimension(spec: HeintzeSpec) -> CheckResult:
    ok = spec.jordan.n == spec.algebra.n
    diag = [] if ok else [f"blocks sum to {spec.jordan.n}, algebra has dimension {spec.algebra.n}"]
    return CheckResult("dimension", ok, diag)


def _check_eigenvalues(spec: HeintzeSpec) -> CheckResult:
    diag = []
    ev = spec.jordan.eigenvalues
    for i, mu in enumerate(ev):
        if mu <= 0:
            diag.append(f"mu_{i + 1} = {mu} is not positive")
    for i in range(len(ev) - 1):
        if not ev[i] < ev[i + 1]:
            diag.append(f"eigenvalues not strictly ascending at {i + 1}")
    return CheckResult("eigenvalue_positivity", not diag, diag)


def _check_antisymmetry(alg: LieAlgebraSpec) -> CheckResult:
    diag = []
    n = alg.n
    for i in range(n):
        for j in range(i, n):
            for k in range(n):
                if alg.c[i][j][k] != -alg.c[j][i][k]:
                    diag.append(f"({i + 1},{j + 1},{k + 1})")
    return CheckResult("antisymmetry", not diag, diag)


def _check_jacobi(alg: LieAlgebraSpec) -> CheckResult:
    diag = []
    n = alg.n
    units = [_unit(n, a) for a in range(n)]
    for a, b, c in combinations(range(n), 3):
        x, y, z = units[a], units[b], units[c]
        s = [Fraction(0)] * n
        for u, v, w in ((x, y, z), (y, z, x), (z, x, y)):
            t = alg.bracket(u, alg.bracket(v, w))
            s = [p + q for p, q in zip(s, t)]
        if any(s):
            diag.append(f"({a + 1},{b + 1},{c + 1})")
    return CheckResult("jacobi", not diag, diag)


def lower_central_series(alg: LieAlgebraSpec, max_steps: int | None = None) -> list[Subspace]:
    """g^1 = g, g^{k+1} = [g, g^k]; stops at 0 or when the series stalls."""
    n = alg.n
    cur = Subspace.full(n)
    series = [cur]
    for _ in range(max_steps or n):
        vecs = [alg.bracket(_unit(n, a), v) for a in range(n) for v in cur.basis]
        nxt = Subspace.span(n, vecs) if vecs else Subspace.zero(n)
        series.append(nxt)
        if nxt.dim == 0 or nxt == cur:
            break
        cur = nxt
    return series


def _check_nilpotent(alg: LieAlgebraSpec) -> CheckResult:
    series = lower_central_series(alg)
    ok = series[-1].dim == 0
    diag = [] if ok else [f"lower central series stalls at dimension {series[-1].dim}"]
    return CheckResult("nilpotency", ok, diag)


def _check_leibniz(spec: HeintzeSpec) -> CheckResult:
    alg = spec.algebra
    n = alg.n
    diag = []
    A = spec.jordan.derivation_matrix()
    cols = [tuple(A[r][c] for r in range(n)) for c in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            lhs = spec.apply_alpha(alg.bracket_basis(a, b))
            r1 = alg.bracket(cols[a], _unit(n, b))
            r2 = alg.bracket(_unit(n, a), cols[b])
            if any(l != x + y for l, x, y in zip(lhs, r1, r2)):
                diag.append(f"({a + 1},{b + 1})")
    return CheckResult("leibniz", not diag, diag)


def validate_spec(spec: HeintzeSpec) -> ValidationReport:
    """Run every structural check; a HeintzeSpec is usable only if all pass."""
    dim = _check_dimension(spec)
    checks = [dim, _check_eigenvalues(spec), _check_antisymmetry(spec.algebra), _check_jacobi(spec.algebra),
              _check_nilpotent(spec.algebra)]
    if dim.passed:
        checks.append(_check_leibniz(spec))
    else:
        checks.append(CheckResult("leibniz", False, ["skipped: dimension mismatch"]))
    return ValidationReport(checks)


# ---------------------------------------------------------------------------
# spans, chain, predicates
# ---------------------------------------------------------------------------


def lie_span(algebra: LieAlgebraSpec, generators: Iterable[Sequence] | Subspace) -> Subspace:
    """Smallest subalgebra containing the generators."""
    n = algebra.n
    sub = generators if isinstance(generators, Subspace) else Subspace.span(n, generators)
    for _ in range(n + 1):
        vecs = list(sub.basis)
        for u, v in combinations(sub.basis, 2):
            w = algebra.bracket(u, v)
            if any(w):
                vecs.append(w)
        nxt = Subspace.span(n, vecs)
        if nxt.dim == sub.dim:
            return nxt
        sub = nxt
    return sub


@dataclass(frozen=True)
class SubalgebraChain:
    """k[i] and h[i] for i = 0..d; h[0] is the zero space."""

    k: tuple[Subspace, ...]
    h: tuple[Subspace, ...]

    @property
    def d(self) -> int:
        return len(self.k) - 1

    def ordered(self) -> list[tuple[str, Subspace]]:
        out = [("k0", self.k[0])]
        for i in range(1, self.d + 1):
            out += [(f"h{i}", self.h[i]), (f"k{i}", self.k[i])]
        return out

    def verify(self) -> bool:
        seq = [s for _, s in self.ordered()]
        return seq[0].dim == 0 and seq[-1].dim == seq[-1].n and all(
            a.issubset(b) for a, b in zip(seq, seq[1:])
        )


def subgroup_chain(spec: HeintzeSpec, validate: bool = True) -> SubalgebraChain:
    if validate:
        validate_spec(spec).raise_if_invalid()
    n, d = spec.n, spec.jordan.d
    alg = spec.algebra
    ks = [Subspace.zero(n)]
    hs = [Subspace.zero(n)]
    w_prev: list[int] = []
    for i in range(1, d + 1):
        v0 = spec.eigen_coords(i, top_only=True)
        hs.append(lie_span(alg, [spec.unit(c) for c in w_prev + v0]))
        w_prev = w_prev + spec.block_coords(i)
        ks.append(lie_span(alg, [spec.unit(c) for c in w_prev]))
    chain = SubalgebraChain(tuple(ks), tuple(hs))
    if not chain.verify():
        raise AssertionError("subalgebra chain is not increasing")
    return chain


def is_carnot_type(spec: HeintzeSpec) -> bool:
    """The mu_1-eigenvectors generate the whole algebra."""
    gens = [spec.unit(c) for c in spec.eigen_coords(1)]
    return lie_span(spec.algebra, gens).dim == spec.n


def normalizer(algebra: LieAlgebraSpec, sub: Subspace | Iterable[Sequence]) -> Subspace:
    """{v : [v, w] in sub for all w in sub}."""
    n = algebra.n
    if not isinstance(sub, Subspace):
        sub = Subspace.span(n, sub)
    ann = sub.annihilator()
    rows = []
    for w in sub.basis:
        # column a of ad_w^T: [e_a, w]
        images = [algebra.bracket(_unit(n, a), w) for a in range(n)]
        for y in ann:
            rows.append(tuple(sum((y[k] * images[a][k] for k in range(n)), Fraction(0)) for a in range(n)))
    rows = [r for r in rows if any(r)]
    if not rows:
        return Subspace.full(n)
    return Subspace.span(n, kernel(rows, n))


def almost_isometry_predicate(spec: HeintzeSpec, chain: SubalgebraChain | None = None) -> bool:
    """The normalizer of h_1 is strictly bigger than h_1."""
    chain = chain or subgroup_chain(spec)
    h1 = chain.h[1]
    return normalizer(spec.algebra, h1).dim > h1.dim


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def permute_blocks(spec: HeintzeSpec, i: int, perm: Sequence[int]) -> tuple[HeintzeSpec, list[int]]:
    """Reorder the Jordan blocks of eigenvalue i (1-based) by ``perm`` (0-based).

    Returns the relabelled spec and the coordinate map old -> new, with the
    structure constants transported along.
    """
    old_idx = spec.basis_index
    blocks = list(spec.jordan.blocks)
    blocks[i - 1] = tuple(blocks[i - 1][p] for p in perm)
    new_j = {old + 1: new + 1 for new, old in enumerate(perm)}
    jordan = JordanSpec(spec.jordan.eigenvalues, tuple(blocks))
    new_idx = jordan.basis_index()
    pos = {t: c for c, t in enumerate(new_idx)}
    mapping = []
    for a, j, k in old_idx:
        mapping.append(pos[(a, new_j[j] if a == i else j, k)])
    n = spec.n
    c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(n):
            for k in range(n):
                c[mapping[a]][mapping[b]][mapping[k]] = spec.algebra.c[a][b][k]
    alg = LieAlgebraSpec(n, tuple(tuple(tuple(r) for r in p) for p in c))
    return HeintzeSpec(alg, jordan, spec.name), mapping


def jordan_spec_from_matrix(matrix: Sequence[Sequence]) -> tuple[JordanSpec, list[list[Fraction]]]:
    """Jordan data of a rational matrix with rational spectrum.

    Returns the JordanSpec (eigenvalues ascending, block sizes listed largest
    first) and the change of basis P with ``matrix = P J P^-1``.  Raises
    ``InputError`` if an eigenvalue is irrational or complex.
    """
    import sympy

    M = sympy.Matrix([[sympy.Rational(str(as_fraction(x))) for x in row] for row in matrix])
    if M.rows != M.cols:
        raise InputError("matrix must be square")
    for ev in M.eigenvals():
        if not (ev.is_rational and ev.is_real):
            raise InputError(f"eigenvalue {ev} is not rational; exact Jordan form unavailable")
    # order blocks: eigenvalue ascending, then size descending
    P, J = M.jordan_form()
    blocks = []
    start = 0
    n = M.rows
    while start < n:
        end = start
        while end + 1 < n and J[end, end + 1] == 1:
            end += 1
        blocks.append((Fraction(str(J[start, start])), end - start + 1, start))
        start = end + 1
    blocks.sort(key=lambda b: (b[0], -b[1]))
    eigen: list[Fraction] = []
    sizes: list[list[int]] = []
    cols = []
    for mu, m, s in blocks:
        if not eigen or eigen[-1] != mu:
            eigen.append(mu)
            sizes.append([])
        sizes[-1].append(m)
        cols.extend(range(s, s + m))
    Pr = [[Fraction(str(P[r, c])) for c in cols] for r in range(n)]
    return JordanSpec(tuple(eigen), tuple(tuple(s) for s in sizes)), Pr


def make_spec(eigenvalues, blocks, brackets=(), name: str = "") -> HeintzeSpec:
    """Convenience constructor from plain Python data (1-based brackets)."""
    jordan = JordanSpec(tuple(eigenvalues), tuple(tuple(b) for b in blocks))
    alg = LieAlgebraSpec.from_brackets(jordan.n, brackets)
    return HeintzeSpec(alg, jordan, name)


__all__.append("make_spec")
__all__.append("lower_central_series")
