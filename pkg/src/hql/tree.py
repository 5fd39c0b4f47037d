"""Cochains and radial limits on truncated b-regular rooted trees.

Vertices at depth r are numbered 0..b^r-1 left to right; the parent of
vertex i at depth r is i // b at depth r-1.  A vertex function is a flat
array in breadth-first order.  Edges are indexed by their child vertex, so
an edge cochain has one entry per non-root vertex, also in breadth-first
order; edge sigma between depths r-1 and r has sigma_- the parent and
sigma_+ the child.

The boundary is the set of leaves (depth R) with the uniform measure
H(leaf) = b^-R, so the depth-r cylinders have mass b^-r.  Level functions
G(xi, r), r = 1..R, are arrays of shape (R, b^R) and carry the product
measure H (x) mu_v with v = b, i.e. mass b^-R v^r per entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, PreconditionError
from .young import WeightedSamples, YoungFunction, luxembourg_norm

__all__ = [
    "TreeComplex",
    "InequalityReport",
    "coboundary",
    "cochain_norm",
    "vertex_norm",
    "level_norm",
    "leaf_norm",
    "shift",
    "coboundary_bound_check",
    "shift_contraction_check",
    "radial_analysis",
    "strichartz_check",
    "trace_norm_check",
    "strichartz_constant",
    "shadow_average_extension",
    "tree_besov_seminorm",
    "shadow_band",
    "random_vertex_function",
    "random_level_function",
    "level_concentrated_ratio",
    "run_tree_suite",
]

MAX_DEPTH = {2: 14}
PAIR_BUDGET = 4_000_000


@dataclass(frozen=True)
class TreeComplex:
    b: int
    R: int

    def __post_init__(self):
        if self.b < 2 or self.R < 1:
            raise InputError("need branching b >= 2 and depth R >= 1")
        cap = MAX_DEPTH.get(self.b, max(1, int(14 * math.log(2) / math.log(self.b))))
        if self.R > cap:
            raise InputError(f"depth {self.R} exceeds the cap {cap} for b = {self.b}")

    @property
    def v(self) -> float:
        return float(self.b)

    @property
    def Q(self) -> float:
        return math.log(self.b)

    def level_size(self, r: int) -> int:
        return self.b**r

    def offset(self, r: int) -> int:
        return (self.b**r - 1) // (self.b - 1)

    @property
    def n_vertices(self) -> int:
        return self.offset(self.R + 1)

    @property
    def n_edges(self) -> int:
        return self.n_vertices - 1

    @property
    def n_leaves(self) -> int:
        return self.b**self.R

    @property
    def max_degree(self) -> int:
        return self.b + 1

    def level(self, f: np.ndarray, r: int) -> np.ndarray:
        return f[self.offset(r) : self.offset(r + 1)]

    def edge_level(self, w: np.ndarray, r: int) -> np.ndarray:
        """Edges between depths r-1 and r (r >= 1)."""
        return w[self.offset(r) - 1 : self.offset(r + 1) - 1]

    def depths(self) -> np.ndarray:
        return np.concatenate([np.full(self.level_size(r), r) for r in range(self.R + 1)])

    def ancestor(self, r: int) -> np.ndarray:
        """For each leaf, the index (within depth r) of its depth-r ancestor."""
        return np.arange(self.n_leaves) // self.b ** (self.R - r)

    def parent_index(self) -> np.ndarray:
        """Global index of the parent of every non-root vertex."""
        out = np.empty(self.n_edges, dtype=np.int64)
        for r in range(1, self.R + 1):
            child = np.arange(self.level_size(r))
            out[self.offset(r) - 1 : self.offset(r + 1) - 1] = self.offset(r - 1) + child // self.b
        return out

    def level_weights(self) -> np.ndarray:
        """Mass b^-R v^r of each entry of a level function, shape (R, b^R)."""
        r = np.arange(1, self.R + 1, dtype=float)
        return np.repeat((self.v**r / self.n_leaves)[:, None], self.n_leaves, axis=1)


# ---------------------------------------------------------------------------
# cochains and norms
# ---------------------------------------------------------------------------


def coboundary(tree: TreeComplex, f: np.ndarray) -> np.ndarray:
    """df(sigma) = f(sigma_+) - f(sigma_-), one entry per edge."""
    f = np.asarray(f, dtype=float)
    if f.shape != (tree.n_vertices,):
        raise InputError(f"vertex function needs {tree.n_vertices} values, got {f.shape}")
    return f[1:] - f[tree.parent_index()]


def cochain_norm(phi: YoungFunction, tree: TreeComplex, w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    if w.shape != (tree.n_edges,):
        raise InputError(f"edge cochain needs {tree.n_edges} values, got {w.shape}")
    return luxembourg_norm(phi, WeightedSamples.counting(w))


def vertex_norm(phi: YoungFunction, tree: TreeComplex, f: np.ndarray) -> float:
    return luxembourg_norm(phi, WeightedSamples.counting(f))


def level_norm(phi: YoungFunction, tree: TreeComplex, G: np.ndarray) -> float:
    """Norm in L^phi(boundary x N) with the product measure H (x) mu_v."""
    G = np.asarray(G, dtype=float)
    if G.shape != (tree.R, tree.n_leaves):
        raise InputError(f"level function needs shape {(tree.R, tree.n_leaves)}, got {G.shape}")
    vals, wts = _compress_levels(tree, G)
    return luxembourg_norm(phi, WeightedSamples(vals, wts))


def _compress_levels(tree: TreeComplex, G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Atoms of G; levels constant on depth-r cylinders collapse to one atom per cylinder.

    A depth-r cylinder carries mass b^-r v^r = 1 at level r.
    """
    vals, wts = [], []
    for r in range(1, tree.R + 1):
        row = G[r - 1].reshape(tree.level_size(r), -1)
        if np.all(row == row[:, :1]):
            vals.append(row[:, 0])
            wts.append(np.ones(row.shape[0]))
        else:
            vals.append(G[r - 1])
            wts.append(np.full(tree.n_leaves, tree.v**r / tree.n_leaves))
    return np.concatenate(vals), np.concatenate(wts)


def leaf_norm(phi: YoungFunction, tree: TreeComplex, u: np.ndarray) -> float:
    """Norm in L^phi(boundary, H)."""
    u = np.asarray(u, dtype=float)
    return luxembourg_norm(phi, WeightedSamples(u, np.full(u.size, 1.0 / tree.n_leaves)))


def shift(G: np.ndarray) -> np.ndarray:
    """S*G(xi, r) = G(xi, r + 1), truncated to zero at the last level."""
    out = np.zeros_like(G)
    out[:-1] = G[1:]
    return out


def strichartz_constant(phi: YoungFunction, tree: TreeComplex) -> float:
    """(1 - v^(-1/K))^-1, the bound for sum_k ||S*||^k."""
    K = _growth(phi)
    return 1.0 / (1.0 - tree.v ** (-1.0 / K))


def _growth(phi: YoungFunction) -> float:
    if phi.growth_exponent is None:
        raise PreconditionError("this check needs a Young function with a growth exponent K")
    return float(phi.growth_exponent)


# ---------------------------------------------------------------------------
# inequality checks
# ---------------------------------------------------------------------------


@dataclass
class InequalityReport:
    name: str
    lhs: list[float] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    tol: float = 1e-9

    def add(self, lhs: float, rhs: float) -> None:
        self.lhs.append(float(lhs))
        self.rhs.append(float(rhs))

    @property
    def passed(self) -> bool:
        return all(l <= r + self.tol * max(1.0, abs(r)) for l, r in zip(self.lhs, self.rhs))

    @property
    def min_slack(self) -> float:
        if not self.lhs:
            return math.inf
        return float(min(r - l for l, r in zip(self.lhs, self.rhs)))

    @property
    def worst_ratio(self) -> float:
        ratios = [l / r for l, r in zip(self.lhs, self.rhs) if r > 0]
        return float(max(ratios)) if ratios else 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": len(self.lhs),
            "passed": self.passed,
            "worst_ratio": self.worst_ratio,
            "min_slack": self.min_slack,
        }


def coboundary_bound_check(phi: YoungFunction, tree: TreeComplex, samples) -> InequalityReport:
    """||df||_phi <= N ||f||_{N phi} with N the maximal vertex degree."""
    N = tree.max_degree
    Nphi = phi.scaled(N)
    rep = InequalityReport("coboundary_bound")
    for f in samples:
        rep.add(cochain_norm(phi, tree, coboundary(tree, f)), N * vertex_norm(Nphi, tree, f))
    return rep


def shift_contraction_check(phi: YoungFunction, tree: TreeComplex, G: np.ndarray, tol: float = 1e-9):
    """(||S*G||, v^(-1/K) ||G||); asserts lhs <= rhs + tol."""
    K = _growth(phi)
    lhs = level_norm(phi, tree, shift(G))
    rhs = tree.v ** (-1.0 / K) * level_norm(phi, tree, G)
    if lhs > rhs + tol * max(1.0, rhs):
        raise AssertionError(f"shift contraction violated: {lhs} > {rhs}")
    return lhs, rhs


@dataclass
class RadialData:
    F: np.ndarray  # (R, leaves): F(xi, r) = sum_{k >= r} df(theta_xi[k])
    DF: np.ndarray  # (R, leaves): df(theta_xi[r])
    f_inf: np.ndarray  # leaf values
    f_root: float
    level_residuals: list[float]  # ||f_inf - f_r||_phi in L^phi(H), r = 1..R


def radial_analysis(phi: YoungFunction | None, tree: TreeComplex, f: np.ndarray) -> RadialData:
    f = np.asarray(f, dtype=float)
    df = coboundary(tree, f)
    R, L = tree.R, tree.n_leaves
    DF = np.empty((R, L))
    fr = np.empty((R, L))  # f_r(xi) = f(theta_xi(r - 1))
    for r in range(1, R + 1):
        anc = tree.ancestor(r)
        DF[r - 1] = tree.edge_level(df, r)[anc]
        fr[r - 1] = tree.level(f, r - 1)[tree.ancestor(r - 1)]
    f_inf = tree.level(f, R).copy()
    # F(xi, r) = sum_{k=r}^R DF(xi, k), accumulated from the leaves upward
    F = np.cumsum(DF[::-1], axis=0)[::-1]
    residuals = []
    if phi is not None:
        residuals = [leaf_norm(phi, tree, f_inf - fr[r]) for r in range(R)]
    return RadialData(F, DF, f_inf, float(f[0]), residuals)


def strichartz_check(phi: YoungFunction, tree: TreeComplex, f: np.ndarray) -> tuple[float, float]:
    """(||F||_phi, C ||DF||_phi) with C = (1 - v^(-1/K))^-1."""
    rd = radial_analysis(None, tree, f)
    return level_norm(phi, tree, rd.F), strichartz_constant(phi, tree) * level_norm(phi, tree, rd.DF)


def trace_norm_check(phi: YoungFunction, tree: TreeComplex, f: np.ndarray) -> tuple[float, float]:
    """(||f_inf - f(root)||_phi, C ||df||_phi).

    On a tree each edge at depth r is crossed by exactly b^(R-r) leaves, so
    ||DF|| = ||df|| and the constant is the Strichartz one.
    """
    f = np.asarray(f, dtype=float)
    lhs = leaf_norm(phi, tree, tree.level(f, tree.R) - f[0])
    rhs = strichartz_constant(phi, tree) * cochain_norm(phi, tree, coboundary(tree, f))
    return lhs, rhs


# ---------------------------------------------------------------------------
# shadow averages and the leaf Besov seminorm
# ---------------------------------------------------------------------------


def _leaf_pairs(tree: TreeComplex, budget: int, seed: int):
    """Ordered leaf pairs (i, j, split depth, weight) with i != j.

    The weight is H(i) H(j) rho^-2Q = b^-2R b^(2c).  Beyond ``budget`` pairs
    each split depth is subsampled uniformly with the weights inflated
    accordingly (deterministic given the seed).
    """
    b, R, L = tree.b, tree.R, tree.n_leaves
    total = L * (L - 1)
    idx = np.arange(L)
    out_i, out_j, out_c, out_w = [], [], [], []
    if total <= budget:
        for i in range(L):
            j = np.delete(idx, i)
            c = R - _split_height(i, j, b)
            out_i.append(np.full(j.size, i))
            out_j.append(j)
            out_c.append(c)
        I, J, C = np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_c)
        return I, J, C, (b ** (2.0 * C - 2.0 * R))
    rng = np.random.default_rng(seed)
    per_c = budget // R
    for c in range(R):
        # pairs splitting exactly at depth c: same depth-c ancestor, different depth-(c+1) ancestors
        n_c = L * (b ** (R - c) - b ** (R - c - 1))
        k = min(per_c, n_c)
        i = rng.integers(0, L, size=k)
        block = b ** (R - c)
        sub = b ** (R - c - 1)
        base = (i // block) * block
        own = (i % block) // sub
        other = (own + rng.integers(1, b, size=k)) % b
        j = base + other * sub + rng.integers(0, sub, size=k)
        out_i.append(i)
        out_j.append(j)
        out_c.append(np.full(k, c))
        out_w.append(np.full(k, b ** (2.0 * c - 2.0 * R) * n_c / k))
    return (np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_c), np.concatenate(out_w))


def _split_height(i: int, j: np.ndarray, b: int) -> np.ndarray:
    """Levels above the leaves at which i and j first share an ancestor."""
    h = np.zeros(j.shape, dtype=np.int64)
    a, bb = np.full(j.shape, i), j.copy()
    while np.any(a != bb):
        ne = a != bb
        a[ne] //= b
        bb[ne] //= b
        h[ne] += 1
    return h


def tree_besov_seminorm(
    phi: YoungFunction, tree: TreeComplex, u: np.ndarray, budget: int = PAIR_BUDGET, seed: int = 0
) -> float:
    """<u>_phi over ordered leaf pairs with density rho^-2Q = b^(2 split depth)."""
    u = np.asarray(u, dtype=float)
    I, J, _, W = _leaf_pairs(tree, budget, seed)
    return luxembourg_norm(phi, WeightedSamples(u[I] - u[J], W))


def shadow_band(phi: YoungFunction, tree: TreeComplex) -> tuple[float, float]:
    """Derived band for ||df|| / <u> on trees: [1/(2 C_T), b^3/(b^2-1)]."""
    b = tree.b
    return 1.0 / (2.0 * strichartz_constant(phi, tree)), b**3 / (b**2 - 1.0)


@dataclass
class ShadowResult:
    f: np.ndarray
    df_norm: float
    besov: float
    ratio: float
    band: tuple[float, float]
    within_band: bool


def shadow_average_extension(
    phi: YoungFunction, tree: TreeComplex, u: np.ndarray, budget: int = PAIR_BUDGET, seed: int = 0
) -> ShadowResult:
    """f(x) = average of u over the cylinder of x, with ||df|| against <u>."""
    u = np.asarray(u, dtype=float)
    if u.shape != (tree.n_leaves,):
        raise InputError(f"leaf function needs {tree.n_leaves} values")
    parts = []
    for r in range(tree.R + 1):
        parts.append(u.reshape(tree.level_size(r), -1).mean(axis=1))
    f = np.concatenate(parts)
    dn = cochain_norm(phi, tree, coboundary(tree, f))
    bs = tree_besov_seminorm(phi, tree, u, budget, seed)
    band = shadow_band(phi, tree)
    if bs == 0:
        ratio = 0.0 if dn == 0 else math.inf
        ok = dn == 0
    else:
        ratio = dn / bs
        ok = band[0] * (1 - 1e-9) <= ratio <= band[1] * (1 + 1e-9)
    return ShadowResult(f, dn, bs, ratio, band, ok)


# ---------------------------------------------------------------------------
# random inputs
# ---------------------------------------------------------------------------


def random_vertex_function(tree: TreeComplex, rng: np.random.Generator) -> np.ndarray:
    """Random f with increments decaying like b^(-s r), s uniform in [0, 1]."""
    s = rng.uniform(0.0, 1.0)
    f = np.empty(tree.n_vertices)
    f[0] = rng.normal()
    parent = tree.parent_index()
    depth = tree.depths()[1:]
    inc = rng.normal(size=tree.n_edges) * tree.b ** (-s * depth)
    for r in range(1, tree.R + 1):
        sl = slice(tree.offset(r), tree.offset(r + 1))
        f[sl] = f[parent[sl.start - 1 : sl.stop - 1]] + inc[sl.start - 1 : sl.stop - 1]
    return f


def random_level_function(tree: TreeComplex, rng: np.random.Generator) -> np.ndarray:
    """Random G constant on depth-r cylinders at level r, with random level profile."""
    G = np.empty((tree.R, tree.n_leaves))
    s = rng.uniform(-1.0, 1.0)
    for r in range(1, tree.R + 1):
        vals = rng.normal(size=tree.level_size(r)) * tree.b ** (-s * r)
        G[r - 1] = vals[tree.ancestor(r)]
    return G


def level_concentrated_ratio(phi: YoungFunction, tree: TreeComplex, r: int | None = None) -> float:
    """||S*G|| / ||G|| for G = 1 on level r and 0 elsewhere (r = R by default).

    For phi = |t|^p this is v^(-1/p) exactly, so the contraction bound is sharp.
    """
    r = tree.R if r is None else r
    if not 2 <= r <= tree.R:
        raise InputError(f"level must lie in 2..{tree.R}")
    G = np.zeros((tree.R, tree.n_leaves))
    G[r - 1] = 1.0
    return level_norm(phi, tree, shift(G)) / level_norm(phi, tree, G)


def run_tree_suite(phi: YoungFunction, tree: TreeComplex, trials: int, seed: int = 0) -> dict[str, InequalityReport]:
    """All four inequalities on ``trials`` random inputs each."""
    rng = np.random.default_rng(seed)
    K = _growth(phi)
    contraction = InequalityReport("shift_contraction")
    strich = InequalityReport("strichartz")
    trace = InequalityReport("trace")
    samples = []
    for _ in range(trials):
        G = random_level_function(tree, rng)
        contraction.add(level_norm(phi, tree, shift(G)), tree.v ** (-1.0 / K) * level_norm(phi, tree, G))
        f = random_vertex_function(tree, rng)
        samples.append(f)
        strich.add(*strichartz_check(phi, tree, f))
        trace.add(*trace_norm_check(phi, tree, f))
    cob = coboundary_bound_check(phi, tree, samples)
    return {rep.name: rep for rep in (contraction, strich, trace, cob)}
