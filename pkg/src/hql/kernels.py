"""Numeric inner loops: Young-function sums and boundary pair sums.

Every public kernel exists as ``*_nb`` (numba loop) and ``*_np`` (vectorised
numpy).  The unsuffixed names are bound at import time according to
:mod:`hql._accel`.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

E = math.e

METRIC_EUCLIDEAN = 0
METRIC_X3 = 1
METRIC_DIAG = 2

_U64_MASK = (1 << 64) - 1


# ---------------------------------------------------------------------------
# phi_{p,kappa}(t) = |t|^p / log(e + 1/|t|)^kappa
# ---------------------------------------------------------------------------


def phi_pk_np(t, p, kappa):
    a = np.abs(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(a)
    nz = a > 0
    an = a[nz]
    with np.errstate(over="ignore"):  # huge arguments map to inf, as in the loop kernel
        if kappa == 0.0:
            out[nz] = an**p
        else:
            out[nz] = an**p / np.log(E + 1.0 / an) ** kappa
    return out


@njit
def _phi_pk_scalar(a, p, kappa):
    if a == 0.0:
        return 0.0
    # integer fast paths avoid the generic pow
    if p == 2.0:
        ap = a * a
    elif p == 1.0:
        ap = a
    elif p == 3.0:
        ap = a * a * a
    else:
        ap = a**p
    if kappa == 0.0:
        return ap
    L = math.log(E + 1.0 / a)
    if kappa == 1.0:
        return ap / L
    if kappa == 2.0:
        return ap / (L * L)
    return ap / L**kappa


@njit
def phi_pk_nb(t, p, kappa):
    out = np.empty(t.shape[0])
    for k in range(t.shape[0]):
        out[k] = _phi_pk_scalar(abs(t[k]), p, kappa)
    return out


def weighted_phi_sum_np(values, weights, inv_alpha, p, kappa):
    return float(np.dot(weights, phi_pk_np(values * inv_alpha, p, kappa)))


@njit
def weighted_phi_sum_nb(values, weights, inv_alpha, p, kappa):
    s = 0.0
    for k in range(values.shape[0]):
        w = weights[k]
        if w != 0.0:
            s += w * _phi_pk_scalar(abs(values[k] * inv_alpha), p, kappa)
    return s


# ---------------------------------------------------------------------------
# boundary quasi-metrics on point clouds
# ---------------------------------------------------------------------------


def pair_metric_np(pts_a, pts_b, code, param):
    """Vectorised metric between matching rows of ``pts_a`` and ``pts_b``."""
    d = pts_b - pts_a
    if code == METRIC_EUCLIDEAN:
        return np.sqrt(np.sum(d * d, axis=1))
    dx = np.abs(d[:, 0]) if code == METRIC_DIAG else d[:, 0]
    dy = d[:, 1]
    ady = np.abs(dy)
    if code == METRIC_X3:
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(ady > 0, dy * np.log(np.where(ady > 0, ady, 1.0)), 0.0)
        return np.maximum(ady, np.abs(dx - lg))
    if code == METRIC_DIAG:
        return np.maximum(dx, ady ** (1.0 / param))
    raise ValueError(f"unknown metric code {code}")


@njit
def _metric_scalar(pts, i, j, code, param):
    if code == 0:
        s = 0.0
        for c in range(pts.shape[1]):
            d = pts[j, c] - pts[i, c]
            s += d * d
        return math.sqrt(s)
    dx = pts[j, 0] - pts[i, 0]
    dy = pts[j, 1] - pts[i, 1]
    ady = abs(dy)
    if code == 1:
        lg = dy * math.log(ady) if ady > 0.0 else 0.0
        r = abs(dx - lg)
        return ady if ady > r else r
    # code == 2
    r = ady ** (1.0 / param)
    adx = abs(dx)
    return adx if adx > r else r


@njit
def _bucket(rho, bucket_min, nbuckets):
    b = int(math.floor(math.log2(rho))) - bucket_min
    if b < 0:
        return 0
    if b >= nbuckets:
        return nbuckets - 1
    return b


@njit
def _splitmix(x):
    # 64-bit mixer; uint64 arithmetic wraps
    x = (x + np.uint64(0x9E3779B97F4A7C15))
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@njit
def _uniform(i, j, seed):
    h = _splitmix(np.uint64(seed) ^ _splitmix(np.uint64(i) * np.uint64(0x100000001B3) + np.uint64(j)))
    return float(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit
def pair_bucket_counts_nb(pts, idx, code, param, bucket_min, nbuckets):
    counts = np.zeros(nbuckets, dtype=np.int64)
    n = idx.shape[0]
    for a in range(n):
        i = idx[a]
        for b in range(a + 1, n):
            rho = _metric_scalar(pts, i, idx[b], code, param)
            if rho > 0.0:
                counts[_bucket(rho, bucket_min, nbuckets)] += 1
    return counts


@njit
def pair_select_nb(pts, idx, code, param, bucket_min, nbuckets, prob, caps, seed):
    """Bernoulli-select unordered pairs with per-bucket inclusion probability.

    Returns (i, j, rho, bucket) for the selected pairs.  ``caps`` bounds the
    number kept per bucket (guards the preallocated buffers).
    """
    total = 0
    for b in range(nbuckets):
        total += caps[b]
    oi = np.empty(total, dtype=np.int32)
    oj = np.empty(total, dtype=np.int32)
    orho = np.empty(total, dtype=np.float64)
    ob = np.empty(total, dtype=np.int16)
    kept = np.zeros(nbuckets, dtype=np.int64)
    k = 0
    n = idx.shape[0]
    for a in range(n):
        i = idx[a]
        for c in range(a + 1, n):
            j = idx[c]
            rho = _metric_scalar(pts, i, j, code, param)
            if rho <= 0.0:
                continue
            b = _bucket(rho, bucket_min, nbuckets)
            if kept[b] >= caps[b]:
                continue
            if prob[b] < 1.0 and _uniform(i, j, seed) >= prob[b]:
                continue
            oi[k] = i
            oj[k] = j
            orho[k] = rho
            ob[k] = b
            kept[b] += 1
            k += 1
    return oi[:k], oj[:k], orho[:k], ob[:k], kept


def _uniform_np(i, j, seed):
    m = np.uint64
    with np.errstate(over="ignore"):
        h = _mix_np(m(seed) ^ _mix_np(i.astype(np.uint64) * m(0x100000001B3) + j.astype(np.uint64)))
    return (h >> m(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _row_pairs_np(pts, idx, a, code, param):
    i = idx[a]
    js = idx[a + 1 :]
    rho = pair_metric_np(np.broadcast_to(pts[i], (js.shape[0], pts.shape[1])), pts[js], code, param)
    return i, js, rho


def _bucket_np(rho, bucket_min, nbuckets):
    b = np.floor(np.log2(rho)).astype(np.int64) - bucket_min
    return np.clip(b, 0, nbuckets - 1)


def pair_bucket_counts_np(pts, idx, code, param, bucket_min, nbuckets):
    counts = np.zeros(nbuckets, dtype=np.int64)
    for a in range(idx.shape[0] - 1):
        _, _, rho = _row_pairs_np(pts, idx, a, code, param)
        rho = rho[rho > 0]
        counts += np.bincount(_bucket_np(rho, bucket_min, nbuckets), minlength=nbuckets)
    return counts


def pair_select_np(pts, idx, code, param, bucket_min, nbuckets, prob, caps, seed):
    out_i, out_j, out_r, out_b = [], [], [], []
    kept = np.zeros(nbuckets, dtype=np.int64)
    for a in range(idx.shape[0] - 1):
        i, js, rho = _row_pairs_np(pts, idx, a, code, param)
        ok = rho > 0
        js, rho = js[ok], rho[ok]
        b = _bucket_np(rho, bucket_min, nbuckets)
        sub = prob[b] < 1.0
        if np.any(sub):
            u = _uniform_np(np.full(js.shape[0], i), js, seed)
            keep = ~sub | (u < prob[b])
            js, rho, b = js[keep], rho[keep], b[keep]
        # per-bucket caps, applied in enumeration order like the loop kernel
        if js.size:
            order_ok = np.ones(js.shape[0], dtype=bool)
            for bb in np.unique(b):
                sel = np.flatnonzero(b == bb)
                room = caps[bb] - kept[bb]
                if sel.size > room:
                    order_ok[sel[max(room, 0):]] = False
                kept[bb] += min(sel.size, max(room, 0))
            js, rho, b = js[order_ok], rho[order_ok], b[order_ok]
        out_i.append(np.full(js.shape[0], i, dtype=np.int32))
        out_j.append(js.astype(np.int32))
        out_r.append(rho)
        out_b.append(b.astype(np.int16))
    if not out_i:
        z = np.zeros(0)
        return z.astype(np.int32), z.astype(np.int32), z, z.astype(np.int16), kept
    return (np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_r),
            np.concatenate(out_b), kept)


# ---------------------------------------------------------------------------
# lattice pairs: all pairs of an N x N grid sharing a displacement (a, b)
# ---------------------------------------------------------------------------


@njit
def _lattice_fill(N, a, b, cls, k, full, seed, oi, oj, oc, pos0):
    # point (ix, iy) has index ix * N + iy; canonical classes have a > 0 or (a == 0 and b > 0)
    ny = N - abs(b)
    y0 = -b if b < 0 else 0
    nx = N - a
    p = pos0
    if full:
        for ix in range(nx):
            for t in range(ny):
                iy = y0 + t
                oi[p] = ix * N + iy
                oj[p] = (ix + a) * N + iy + b
                oc[p] = cls
                p += 1
    else:
        M = nx * ny
        for t in range(k):
            h = _splitmix(np.uint64(seed) ^ _splitmix(np.uint64(cls) * np.uint64(0x100000001B3) + np.uint64(t)))
            q = int(h % np.uint64(M))
            ix = q // ny
            iy = y0 + q % ny
            oi[p] = ix * N + iy
            oj[p] = (ix + a) * N + iy + b
            oc[p] = cls
            p += 1
    return p


@njit
def lattice_pairs_nb(N, ca, cb, ck, cfull, seed):
    total = 0
    for c in range(ca.shape[0]):
        total += ck[c]
    oi = np.empty(total, dtype=np.int32)
    oj = np.empty(total, dtype=np.int32)
    oc = np.empty(total, dtype=np.int32)
    p = 0
    for c in range(ca.shape[0]):
        if ck[c] > 0:
            p = _lattice_fill(N, ca[c], cb[c], c, ck[c], cfull[c], seed, oi, oj, oc, p)
    return oi, oj, oc


def lattice_pairs_np(N, ca, cb, ck, cfull, seed):
    out_i, out_j, out_c = [], [], []
    m = np.uint64
    for c in np.flatnonzero(ck > 0):
        a, b, k = int(ca[c]), int(cb[c]), int(ck[c])
        ny = N - abs(b)
        y0 = -b if b < 0 else 0
        if cfull[c]:
            ix, t = np.divmod(np.arange(k), ny)
        else:
            with np.errstate(over="ignore"):
                t = np.arange(k, dtype=np.uint64)
                h = _mix_np(m(seed) ^ _mix_np(m(c) * m(0x100000001B3) + t))
            q = (h % m((N - a) * ny)).astype(np.int64)
            ix, t = np.divmod(q, ny)
        iy = y0 + t
        out_i.append(ix * N + iy)
        out_j.append((ix + a) * N + iy + b)
        out_c.append(np.full(k, c))
    if not out_i:
        z = np.zeros(0, dtype=np.int32)
        return z, z, z
    return (np.concatenate(out_i).astype(np.int32), np.concatenate(out_j).astype(np.int32),
            np.concatenate(out_c).astype(np.int32))


def _mix_np(x):
    m = np.uint64
    with np.errstate(over="ignore"):
        x = x + m(0x9E3779B97F4A7C15)
        x = (x ^ (x >> m(30))) * m(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> m(27))) * m(0x94D049BB133111EB)
        return x ^ (x >> m(31))


if USE_NUMBA:
    phi_pk = phi_pk_nb
    weighted_phi_sum = weighted_phi_sum_nb
    pair_bucket_counts = pair_bucket_counts_nb
    pair_select = pair_select_nb
    lattice_pairs = lattice_pairs_nb
else:
    phi_pk = phi_pk_np
    weighted_phi_sum = weighted_phi_sum_np
    pair_bucket_counts = pair_bucket_counts_np
    pair_select = pair_select_np
    lattice_pairs = lattice_pairs_np
