"""Independent oracles used to verify the library's implementations.

Everything here recomputes statistics from first principles (brute-force
double loops, exact enumeration, Monte Carlo permutation, dense linear
algebra) without calling into the code paths being checked.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

# ---------------------------------------------------------------------------
# Brute-force statistics
# ---------------------------------------------------------------------------


def brute_ks_statistic(x, y) -> float:
    """ECDF sup-distance by direct counting at every pooled point."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    best = 0.0
    for z in np.concatenate([x, y]):
        fx = np.sum(x <= z) / x.size
        fy = np.sum(y <= z) / y.size
        diff = abs(fx - fy)
        if diff > best:
            best = diff
    return float(best)


def brute_energy_distance(x, y) -> float:
    """Energy distance from explicit O(n^2) pairwise means."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a = np.mean(np.abs(x[:, None] - y[None, :]))
    b = np.mean(np.abs(x[:, None] - x[None, :]))
    c = np.mean(np.abs(y[:, None] - y[None, :]))
    return float(math.sqrt(max(2.0 * a - b - c, 0.0)))


def sorted_pairing_wasserstein(x, y) -> float:
    """W1 for equal-size samples: mean absolute gap of sorted pairs."""
    x = np.sort(np.asarray(x, dtype=np.float64))
    y = np.sort(np.asarray(y, dtype=np.float64))
    assert x.size == y.size
    return float(np.mean(np.abs(x - y)))


def normal_equations_polyfit(xs, ys, degree: int, at: float) -> float:
    """Least-squares polynomial through (xs, ys) evaluated at ``at``."""
    xs = np.asarray(xs, dtype=np.float64) - at
    v = np.vander(xs, degree + 1)
    coef, *_ = np.linalg.lstsq(v, np.asarray(ys, dtype=np.float64), rcond=None)
    return float(coef[-1])


def gls_level_smoother(y, q: float, r: float) -> np.ndarray:
    """Batch solution of the local-level smoothing problem.

    Minimises sum (y_t - x_t)^2 / r + sum (x_t - x_{t-1})^2 / q, which is
    the smoothed state mean with a diffuse prior on the initial level.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    d = np.zeros((n - 1, n))
    idx = np.arange(n - 1)
    d[idx, idx] = -1.0
    d[idx, idx + 1] = 1.0
    a = np.eye(n) / r + d.T @ d / q
    return np.linalg.solve(a, y / r)


def mw_exact_two_sided(x, y) -> float:
    """Exact two-sided Mann-Whitney p by enumerating all labelings."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = x.size
    pooled = np.concatenate([x, y])
    order = pooled.argsort(kind="mergesort")
    ranks = np.empty(pooled.size)
    sorted_vals = pooled[order]
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    base = m * (m + 1) / 2.0
    u_obs = ranks[:m].sum() - base
    us = [
        sum(ranks[k] for k in idx) - base
        for idx in combinations(range(pooled.size), m)
    ]
    us = np.array(us)
    lo = np.mean(us <= u_obs + 1e-12)
    hi = np.mean(us >= u_obs - 1e-12)
    return float(min(1.0, 2.0 * min(lo, hi)))


def direct_js_distance(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = (p + q) / 2.0
    div = 0.5 * np.sum(p * np.log2(p / m)) + 0.5 * np.sum(q * np.log2(q / m))
    return float(math.sqrt(max(div, 0.0)))


def direct_kl(p, q) -> float:
    """KL(q || p) with natural log, matching the library's direction."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return float(np.sum(q * np.log(q / p)))


def direct_hellinger(p, q) -> float:
    return float(
        math.sqrt(max(1.0 - np.sum(np.sqrt(np.asarray(p) * np.asarray(q))), 0.0))
    )


def direct_psi(p, q, floor: float = 1e-4) -> float:
    p = np.maximum(np.asarray(p, dtype=np.float64), floor)
    q = np.maximum(np.asarray(q, dtype=np.float64), floor)
    return float(np.sum((q - p) * np.log(q / p)))


def welch_t_p(x, y) -> float:
    """Closed-form Welch p-value via the regularised incomplete beta."""
    from scipy.special import betainc

    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = x.size, y.size
    vx, vy = x.var(ddof=1), y.var(ddof=1)
    se2 = vx / m + vy / n
    t = (x.mean() - y.mean()) / math.sqrt(se2)
    df = se2 ** 2 / ((vx / m) ** 2 / (m - 1) + (vy / n) ** 2 / (n - 1))
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


# ---------------------------------------------------------------------------
# Vectorised permutation oracles
#
# Each draws label permutations of the pooled sample, recomputes the
# method's statistic from scratch, and estimates the p-value as the
# fraction of permuted statistics at least as extreme as the observed
# one. A small tolerance keeps float-equal statistics counted.
# ---------------------------------------------------------------------------

_EQ = 1e-12


def _memberships(rng, n_perm: int, n_total: int, m: int, batch: int = 2000):
    """Yield boolean membership matrices marking the reference rows."""
    done = 0
    while done < n_perm:
        b = min(batch, n_perm - done)
        u = rng.random((b, n_total))
        idx = np.argpartition(u, m - 1, axis=1)[:, :m]
        mem = np.zeros((b, n_total), dtype=bool)
        mem[np.arange(b)[:, None], idx] = True
        yield mem
        done += b


def perm_p_ks(x, y, n_perm: int = 10000, seed: int = 0) -> tuple[float, float]:
    """Permutation p for the KS sup statistic. Returns (d_obs, p)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = x.size, y.size
    total = m + n
    pooled = np.concatenate([x, y])
    order = np.argsort(pooled, kind="mergesort")
    zs = pooled[order]
    # evaluate only at tie-group ends where the ECDF step completes
    ends = np.concatenate([zs[:-1] != zs[1:], [True]])
    labels = np.concatenate([np.ones(m, dtype=bool), np.zeros(n, dtype=bool)])[order]

    def d_stat(mem_sorted: np.ndarray) -> np.ndarray:
        cx = np.cumsum(mem_sorted, axis=-1) / m
        cy = (np.arange(1, total + 1) - np.cumsum(mem_sorted, axis=-1)) / n
        return np.max(np.abs(cx - cy)[..., ends], axis=-1)

    d_obs = float(d_stat(labels[None, :])[0])
    rng = np.random.default_rng(seed)
    count = 0
    for mem in _memberships(rng, n_perm, total, m):
        count += int(np.sum(d_stat(mem) >= d_obs - _EQ))
    return d_obs, count / n_perm


def _midranks(z: np.ndarray) -> np.ndarray:
    zs = np.sort(z)
    uniq = np.unique(z)
    left = np.searchsorted(zs, uniq, side="left")
    right = np.searchsorted(zs, uniq, side="right")
    mid = (left + right + 1) / 2.0
    return mid[np.searchsorted(uniq, z)]


def perm_p_cvm(x, y, n_perm: int = 10000, seed: int = 0) -> tuple[float, float]:
    """Permutation p for the two-sample Cramer-von Mises T statistic."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = x.size, y.size
    total = m + n
    ranks = _midranks(np.concatenate([x, y]))

    def t_stat(mem: np.ndarray) -> np.ndarray:
        # mem: (b, total) marking reference rows; ranks are fixed
        b = mem.shape[0]
        rx = np.where(mem, ranks[None, :], np.inf)
        rx = np.sort(rx, axis=1)[:, :m]
        ry = np.where(~mem, ranks[None, :], np.inf)
        ry = np.sort(ry, axis=1)[:, :n]
        u = m * np.sum((rx - np.arange(1, m + 1)) ** 2, axis=1)
        u += n * np.sum((ry - np.arange(1, n + 1)) ** 2, axis=1)
        return u / (m * n * total) - (4.0 * m * n - 1.0) / (6.0 * total)

    labels = np.concatenate([np.ones(m, dtype=bool), np.zeros(n, dtype=bool)])
    t_obs = float(t_stat(labels[None, :])[0])
    rng = np.random.default_rng(seed)
    count = 0
    for mem in _memberships(rng, n_perm, total, m, batch=500):
        count += int(np.sum(t_stat(mem) >= t_obs - _EQ))
    return t_obs, count / n_perm


def perm_p_mw(x, y, n_perm: int = 10000, seed: int = 0) -> tuple[float, float]:
    """Two-sided permutation p for the Mann-Whitney U statistic."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = x.size, y.size
    ranks = _midranks(np.concatenate([x, y]))
    base = m * (m + 1) / 2.0
    mu = m * n / 2.0
    u_obs = float(ranks[:m].sum() - base)
    rng = np.random.default_rng(seed)
    count = 0
    for mem in _memberships(rng, n_perm, m + n, m):
        u = mem @ ranks - base
        count += int(np.sum(np.abs(u - mu) >= abs(u_obs - mu) - _EQ))
    return u_obs, count / n_perm


def perm_p_t(x, y, n_perm: int = 10000, seed: int = 0) -> tuple[float, float]:
    """Two-sided permutation p for the Welch t statistic."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = x.size, y.size
    z = np.concatenate([x, y])
    z2 = z * z
    s_all, s2_all = z.sum(), z2.sum()

    def t_stat(mem: np.ndarray) -> np.ndarray:
        sx = mem @ z
        sx2 = mem @ z2
        sy = s_all - sx
        sy2 = s2_all - sx2
        mx, my = sx / m, sy / n
        vx = (sx2 - m * mx ** 2) / (m - 1)
        vy = (sy2 - n * my ** 2) / (n - 1)
        return (mx - my) / np.sqrt(vx / m + vy / n)

    labels = np.concatenate([np.ones(m, dtype=bool), np.zeros(n, dtype=bool)])
    t_obs = float(t_stat(labels[None, :])[0])
    rng = np.random.default_rng(seed)
    count = 0
    for mem in _memberships(rng, n_perm, m + n, m):
        count += int(np.sum(np.abs(t_stat(mem)) >= abs(t_obs) - _EQ))
    return t_obs, count / n_perm


def perm_p_es(
    x, y, t_points=(0.4, 0.8), n_perm: int = 10000, seed: int = 0
) -> tuple[float, float]:
    """Permutation p for the Epps-Singleton W2 statistic.

    The characteristic-function features are fixed by the pooled sample
    (the scale uses the pooled semi-interquartile range, which is
    permutation-invariant), so each permutation only reassigns rows.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = x.size, y.size
    total = m + n
    pooled = np.concatenate([x, y])
    sigma = (np.percentile(pooled, 75) - np.percentile(pooled, 25)) / 2.0
    ts = np.asarray(t_points, dtype=np.float64) / sigma
    g = np.concatenate(
        [np.cos(np.outer(ts, pooled)), np.sin(np.outer(ts, pooled))], axis=0
    ).T  # (total, 4)
    d = g.shape[1]
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    gprod = np.stack([g[:, i] * g[:, j] for i, j in pairs], axis=1)
    small = min(m, n) < 25
    corr = (
        1.0 / (1.0 + total ** (-0.45) + 10.1 * (m ** (-1.7) + n ** (-1.7)))
        if small
        else 1.0
    )

    def w_stat(mem: np.ndarray) -> np.ndarray:
        b = mem.shape[0]
        memf = mem.astype(np.float64)
        sx = memf @ g  # (b, d)
        sx2 = memf @ gprod  # (b, npairs)
        sy = g.sum(axis=0)[None, :] - sx
        sy2 = gprod.sum(axis=0)[None, :] - sx2
        mx, my = sx / m, sy / n
        covx = np.empty((b, d, d))
        covy = np.empty((b, d, d))
        for k, (i, j) in enumerate(pairs):
            cx = sx2[:, k] / m - mx[:, i] * mx[:, j]
            cy = sy2[:, k] / n - my[:, i] * my[:, j]
            covx[:, i, j] = covx[:, j, i] = cx
            covy[:, i, j] = covy[:, j, i] = cy
        est = total * (covx / m + covy / n)
        diff = mx - my
        sol = np.linalg.solve(est, diff[:, :, None])[:, :, 0]
        return corr * total * np.einsum("bi,bi->b", diff, sol)

    labels = np.concatenate([np.ones(m, dtype=bool), np.zeros(n, dtype=bool)])
    w_obs = float(w_stat(labels[None, :])[0])
    rng = np.random.default_rng(seed)
    count = 0
    for mem in _memberships(rng, n_perm, total, m, batch=1000):
        count += int(np.sum(w_stat(mem) >= w_obs - _EQ))
    return w_obs, count / n_perm


def perm_p_ad(x, y, n_perm: int = 2000, seed: int = 0) -> tuple[float, float]:
    """Permutation p for the midrank two-sample Anderson-Darling statistic.

    Assumes continuous data (no pooled ties), which makes the per-block
    counts vectorisable.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = x.size, y.size
    total = m + n
    pooled = np.concatenate([x, y])
    assert np.unique(pooled).size == total, "oracle assumes no ties"
    order = np.argsort(pooled, kind="mergesort")
    labels = np.concatenate([np.ones(m, dtype=bool), np.zeros(n, dtype=bool)])[order]
    j = np.arange(1, total + 1, dtype=np.float64)
    bj = j - 0.5
    denom = bj * (total - bj) - total / 4.0

    def a2_stat(mem_sorted: np.ndarray) -> np.ndarray:
        memf = mem_sorted.astype(np.float64)
        cum = np.cumsum(memf, axis=1)
        mij_x = cum - memf / 2.0
        mij_y = (j[None, :] - cum) - (1.0 - memf) / 2.0
        inner_x = (total * mij_x - bj[None, :] * m) ** 2 / denom[None, :]
        inner_y = (total * mij_y - bj[None, :] * n) ** 2 / denom[None, :]
        a2 = inner_x.sum(axis=1) / (m * total) + inner_y.sum(axis=1) / (n * total)
        return a2 * (total - 1.0) / total

    a2_obs = float(a2_stat(labels[None, :])[0])
    rng = np.random.default_rng(seed)
    count = 0
    for mem in _memberships(rng, n_perm, total, m):
        count += int(np.sum(a2_stat(mem) >= a2_obs - _EQ))
    return a2_obs, count / n_perm
