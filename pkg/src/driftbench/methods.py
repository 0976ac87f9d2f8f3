"""Two-sample drift detection methods.

Every detector compares a reference sample against a current sample and
returns a :class:`MethodOutput` carrying the raw statistic plus a drift
value, which is either a p-value (statistical tests) or a
distance/divergence (metric methods). All functions are pure; the only
seeded method is the classifier-based ``spot_the_difference``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import special

from .errors import MethodError

#: Reporting floor for p-values, avoids underflow to exactly 0 in output.
MIN_P = 1e-300

P_VALUE = "p_value"
DISTANCE = "distance"


@dataclass(frozen=True)
class MethodOutput:
    """Result of one two-sample comparison."""

    method: str
    statistic: float
    drift_value: float
    value_kind: str
    degenerate: bool = False


@dataclass(frozen=True)
class MethodSpec:
    """Registry entry: output kind, minimum per-side sample size, scope."""

    id: str
    value_kind: str
    min_samples: int = 1
    dataset_level: bool = False
    seeded: bool = False


METHOD_SPECS: dict[str, MethodSpec] = {
    "ks": MethodSpec("ks", P_VALUE),
    "ks_approx": MethodSpec("ks_approx", DISTANCE),
    "cvm": MethodSpec("cvm", P_VALUE),
    "anderson_darling": MethodSpec("anderson_darling", P_VALUE, min_samples=2),
    "epps_singleton": MethodSpec("epps_singleton", P_VALUE, min_samples=5),
    "mann_whitney": MethodSpec("mann_whitney", P_VALUE),
    "t_test": MethodSpec("t_test", P_VALUE, min_samples=2),
    "wasserstein": MethodSpec("wasserstein", DISTANCE),
    "energy": MethodSpec("energy", DISTANCE),
    "jensen_shannon": MethodSpec("jensen_shannon", DISTANCE),
    "kl": MethodSpec("kl", DISTANCE),
    "hellinger": MethodSpec("hellinger", DISTANCE),
    "psi": MethodSpec("psi", DISTANCE),
    "spot_the_difference": MethodSpec(
        "spot_the_difference", P_VALUE, min_samples=20, dataset_level=True, seeded=True
    ),
}

#: The full method catalog (one entry per method family).
TABLE_METHODS: tuple[str, ...] = (
    "ks",
    "cvm",
    "anderson_darling",
    "epps_singleton",
    "mann_whitney",
    "t_test",
    "wasserstein",
    "energy",
    "jensen_shannon",
    "kl",
    "hellinger",
    "psi",
    "spot_the_difference",
)


def _clamp_p(p: float) -> float:
    return float(min(max(p, MIN_P), 1.0))


def _as_sample(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size == 0:
        raise MethodError(f"{name} sample is empty")
    if not np.all(np.isfinite(arr)):
        raise MethodError(f"{name} sample contains non-finite values")
    return arr


def _midranks(z: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean rank of their block."""
    zs = np.sort(z)
    uniq = np.unique(z)
    left = np.searchsorted(zs, uniq, side="left")
    right = np.searchsorted(zs, uniq, side="right")
    mid = (left + right + 1) / 2.0
    return mid[np.searchsorted(uniq, z)]


# ---------------------------------------------------------------------------
# Empirical-CDF tests
# ---------------------------------------------------------------------------

def ks_two_sample(ref, cur) -> MethodOutput:
    """Exact two-sample Kolmogorov-Smirnov test.

    The statistic is the supremum over the pooled sample of the absolute
    ECDF difference; the p-value comes from the asymptotic Kolmogorov
    distribution at effective size m*n/(m+n).
    """
    x = np.sort(_as_sample(ref, "reference"))
    y = np.sort(_as_sample(cur, "current"))
    m, n = x.size, y.size
    pooled = np.concatenate([x, y])
    d = float(
        np.max(
            np.abs(
                np.searchsorted(x, pooled, side="right") / m
                - np.searchsorted(y, pooled, side="right") / n
            )
        )
    )
    en = math.sqrt(m * n / (m + n))
    p = float(special.kolmogorov(en * d))
    return MethodOutput("ks", d, _clamp_p(p), P_VALUE)


def ks_approximate(ref, cur) -> MethodOutput:
    """Quartile-binned Kolmogorov-Smirnov statistic for large references.

    Bin edges are the reference quartiles (upper edge included); the
    statistic is the largest cumulative relative frequency gap at those
    edges. No p-value is produced, so the output must be paired with a
    constant or sigma-band threshold.
    """
    x = np.sort(_as_sample(ref, "reference"))
    y = np.sort(_as_sample(cur, "current"))
    edges = np.quantile(x, [0.25, 0.5, 0.75, 1.0])
    if np.unique(edges).size < 2:
        raise MethodError(
            "degenerate reference: quartile edges collapse to a single bin"
        )
    fx = np.searchsorted(x, edges, side="right") / x.size
    fy = np.searchsorted(y, edges, side="right") / y.size
    d = float(np.max(np.abs(fx - fy)))
    return MethodOutput("ks_approx", d, d, DISTANCE)


def _cvm_limit_cdf(x: float) -> float:
    """CDF of the limiting distribution of the Cramer-von Mises statistic."""
    tot = 0.0
    for k in range(64):
        y = 4 * k + 1
        q = y * y / (16.0 * x)
        # kve is exp-scaled Bessel K, so the factor is exp(-2q) overall
        term = (
            math.exp(special.gammaln(k + 0.5) - special.gammaln(k + 1))
            / (math.pi ** 1.5 * math.sqrt(x))
            * math.sqrt(y)
            * math.exp(-2.0 * q)
            * special.kve(0.25, q)
        )
        tot += term
        if abs(term) < 1e-12:
            break
    return min(max(tot, 0.0), 1.0)


def cvm_two_sample(ref, cur) -> MethodOutput:
    """Two-sample Cramer-von Mises test on pooled midranks.

    Asymptotic p-value from the limiting distribution after moment
    standardisation, clamped to [1e-16, 1].
    """
    x = _as_sample(ref, "reference")
    y = _as_sample(cur, "current")
    m, n = x.size, y.size
    big_n = m + n
    ranks = _midranks(np.concatenate([x, y]))
    rx = np.sort(ranks[:m])
    ry = np.sort(ranks[m:])
    u = m * np.sum((rx - np.arange(1, m + 1)) ** 2) + n * np.sum(
        (ry - np.arange(1, n + 1)) ** 2
    )
    t = u / (m * n * big_n) - (4.0 * m * n - 1.0) / (6.0 * big_n)
    et = (1.0 + 1.0 / big_n) / 6.0
    vt = (
        (big_n + 1.0)
        * (4.0 * m * n * big_n - 3.0 * (m * m + n * n) - 2.0 * m * n)
        / (45.0 * big_n ** 2 * 4.0 * m * n)
    )
    tn = 1.0 / 6.0 + (t - et) / math.sqrt(45.0 * vt)
    if tn < 0.003:
        p = 1.0
    else:
        p = min(max(1.0 - _cvm_limit_cdf(tn), 1e-16), 1.0)
    return MethodOutput("cvm", float(t), float(p), P_VALUE)


# Published critical-value grid for the standardised k-sample
# Anderson-Darling statistic at the significance levels in _AD_SIG.
_AD_B0 = np.array([0.675, 1.281, 1.645, 1.960, 2.326, 2.573, 3.085])
_AD_B1 = np.array([-0.245, 0.250, 0.678, 1.149, 1.822, 2.364, 3.615])
_AD_B2 = np.array([-0.105, -0.305, -0.362, -0.391, -0.396, -0.345, -0.154])
_AD_SIG = np.array([0.25, 0.10, 0.05, 0.025, 0.01, 0.005, 0.001])


def anderson_darling_2samp(ref, cur) -> MethodOutput:
    """Two-sample Anderson-Darling test (midrank variant).

    The standardised statistic is located on the published
    critical-value grid by quadratic interpolation of log significance;
    the p-value is clamped to [0.001, 0.25] at the grid ends.
    """
    x = _as_sample(ref, "reference")
    y = _as_sample(cur, "current")
    m, n = x.size, y.size
    big_n = m + n
    z = np.sort(np.concatenate([x, y]))
    zstar = np.unique(z)
    if zstar.size < 2:
        raise MethodError("pooled sample is constant")
    left = np.searchsorted(z, zstar, side="left")
    lj = np.searchsorted(z, zstar, side="right") - left
    bj = left + lj / 2.0
    a2 = 0.0
    for sample, size in ((x, m), (y, n)):
        s = np.sort(sample)
        s_right = np.searchsorted(s, zstar, side="right").astype(np.float64)
        fij = s_right - np.searchsorted(s, zstar, side="left")
        mij = s_right - fij / 2.0
        inner = (
            lj
            / big_n
            * (big_n * mij - bj * size) ** 2
            / (bj * (big_n - bj) - big_n * lj / 4.0)
        )
        a2 += inner.sum() / size
    a2 *= (big_n - 1.0) / big_n

    h_cap = 1.0 / m + 1.0 / n
    hs_cs = np.cumsum(1.0 / np.arange(big_n - 1, 1, -1))
    h = hs_cs[-1] + 1.0
    g = float(np.sum(hs_cs / np.arange(2, big_n)))
    k = 2.0
    a = (4.0 * g - 6.0) * (k - 1.0) + (10.0 - 6.0 * g) * h_cap
    b = (
        (2.0 * g - 4.0) * k ** 2
        + 8.0 * h * k
        + (2.0 * g - 14.0 * h - 4.0) * h_cap
        - 8.0 * h
        + 4.0 * g
        - 6.0
    )
    c = (
        (6.0 * h + 2.0 * g - 2.0) * k ** 2
        + (4.0 * h - 4.0 * g + 6.0) * k
        + (2.0 * h - 6.0) * h_cap
        + 4.0 * h
    )
    d = (2.0 * h + 6.0) * k ** 2 - 4.0 * h * k
    sigmasq = (a * big_n ** 3 + b * big_n ** 2 + c * big_n + d) / (
        (big_n - 1.0) * (big_n - 2.0) * (big_n - 3.0)
    )
    m_groups = k - 1.0
    tkn = (a2 - m_groups) / math.sqrt(sigmasq)

    grid = _AD_B0 + _AD_B1 / math.sqrt(m_groups) + _AD_B2 / m_groups
    if tkn < grid.min():
        p = float(_AD_SIG.max())
    elif tkn > grid.max():
        p = float(_AD_SIG.min())
    else:
        fit = np.polyfit(grid, np.log(_AD_SIG), 2)
        p = float(math.exp(np.polyval(fit, tkn)))
        p = min(max(p, float(_AD_SIG.min())), float(_AD_SIG.max()))
    return MethodOutput("anderson_darling", float(tkn), p, P_VALUE)


def epps_singleton(ref, cur, t_points=(0.4, 0.8)) -> MethodOutput:
    """Epps-Singleton characteristic-function test.

    The empirical characteristic function is evaluated at ``t_points``
    scaled by the pooled semi-interquartile range. Near-constant or
    too-coarse data makes the covariance estimate singular and raises a
    MethodError, which callers may surface as "no result".
    """
    x = _as_sample(ref, "reference")
    y = _as_sample(cur, "current")
    m, n = x.size, y.size
    if m < 5 or n < 5:
        raise MethodError("epps_singleton needs at least 5 observations per side")
    pooled = np.concatenate([x, y])
    sigma = (np.percentile(pooled, 75) - np.percentile(pooled, 25)) / 2.0
    if sigma <= 0:
        raise MethodError(
            "zero semi-interquartile range: covariance matrix is singular"
        )
    ts = np.asarray(t_points, dtype=np.float64) / sigma
    gx = np.concatenate(
        [np.cos(np.outer(ts, x)), np.sin(np.outer(ts, x))], axis=0
    ).T
    gy = np.concatenate(
        [np.cos(np.outer(ts, y)), np.sin(np.outer(ts, y))], axis=0
    ).T
    big_n = m + n
    # covariance of sqrt(N) * (mean g_x - mean g_y)
    est_cov = big_n * (
        np.cov(gx.T, bias=True) / m + np.cov(gy.T, bias=True) / n
    )
    if np.linalg.matrix_rank(est_cov) < est_cov.shape[0]:
        raise MethodError(
            "singular covariance matrix: data is nearly constant or two-valued"
        )
    g_diff = gx.mean(axis=0) - gy.mean(axis=0)
    w = float(big_n * g_diff @ np.linalg.solve(est_cov, g_diff))
    if min(m, n) < 25:
        w *= 1.0 / (1.0 + big_n ** (-0.45) + 10.1 * (m ** (-1.7) + n ** (-1.7)))
    df = 2 * len(t_points)
    p = float(special.chdtrc(df, w))
    return MethodOutput("epps_singleton", w, _clamp_p(p), P_VALUE)


def mann_whitney_u(ref, cur) -> MethodOutput:
    """Two-sided Mann-Whitney U test with midranks.

    Uses exact enumeration of all labelings when m + n <= 10, otherwise
    the normal approximation with tie and continuity corrections.
    """
    x = _as_sample(ref, "reference")
    y = _as_sample(cur, "current")
    m, n = x.size, y.size
    big_n = m + n
    pooled = np.concatenate([x, y])
    ranks = _midranks(pooled)
    u = float(np.sum(ranks[:m]) - m * (m + 1) / 2.0)
    if big_n <= 10:
        base = m * (m + 1) / 2.0
        us = np.array(
            [np.sum(ranks[list(idx)]) - base for idx in combinations(range(big_n), m)]
        )
        lo = np.mean(us <= u + 1e-12)
        hi = np.mean(us >= u - 1e-12)
        p = min(1.0, 2.0 * min(lo, hi))
    else:
        mu = m * n / 2.0
        _, counts = np.unique(pooled, return_counts=True)
        tie_term = np.sum(counts ** 3 - counts)
        s2 = m * n / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)))
        if s2 <= 0:
            return MethodOutput("mann_whitney", u, 1.0, P_VALUE, degenerate=True)
        diff = u - mu
        z = (diff - 0.5 * np.sign(diff)) / math.sqrt(s2)
        p = min(1.0, 2.0 * float(special.ndtr(-abs(z))))
    return MethodOutput("mann_whitney", u, _clamp_p(p), P_VALUE)


def t_test(ref, cur) -> MethodOutput:
    """Welch two-sample t-test, two-sided.

    Both samples constant is degenerate: p is 1 when the means agree and
    0 otherwise, with the degenerate flag set.
    """
    x = _as_sample(ref, "reference")
    y = _as_sample(cur, "current")
    m, n = x.size, y.size
    if m < 2 or n < 2:
        raise MethodError("t_test needs at least 2 observations per side")
    vx = float(x.var(ddof=1))
    vy = float(y.var(ddof=1))
    dm = float(x.mean() - y.mean())
    if vx == 0.0 and vy == 0.0:
        if dm == 0.0:
            return MethodOutput("t_test", 0.0, 1.0, P_VALUE, degenerate=True)
        return MethodOutput(
            "t_test", math.copysign(math.inf, dm), 0.0, P_VALUE, degenerate=True
        )
    se2 = vx / m + vy / n
    tstat = dm / math.sqrt(se2)
    df = se2 ** 2 / ((vx / m) ** 2 / (m - 1) + (vy / n) ** 2 / (n - 1))
    p = 2.0 * float(special.stdtr(df, -abs(tstat)))
    return MethodOutput("t_test", float(tstat), _clamp_p(p), P_VALUE)


# ---------------------------------------------------------------------------
# Distance metrics
# ---------------------------------------------------------------------------

def wasserstein_1d(ref, cur, normalize: bool = True) -> MethodOutput:
    """First Wasserstein distance between the empirical distributions.

    Computed exactly by integrating the absolute ECDF difference. With
    ``normalize`` the distance is divided by the reference standard
    deviation so the common 0.1 threshold is scale-free.
    """
    x = np.sort(_as_sample(ref, "reference"))
    y = np.sort(_as_sample(cur, "current"))
    m, n = x.size, y.size
    pooled = np.sort(np.concatenate([x, y]))
    deltas = np.diff(pooled)
    cdf_x = np.searchsorted(x, pooled[:-1], side="right") / m
    cdf_y = np.searchsorted(y, pooled[:-1], side="right") / n
    d = float(np.sum(np.abs(cdf_x - cdf_y) * deltas))
    if normalize:
        s = float(x.std())
        if s == 0.0:
            raise MethodError(
                "reference standard deviation is zero: cannot normalize"
            )
        d /= s
    return MethodOutput("wasserstein", d, d, DISTANCE)


def _sum_abs_cross(x_sorted: np.ndarray, y_sorted: np.ndarray) -> float:
    """Sum of |x_i - y_j| over all pairs, via prefix sums (O(n log n))."""
    m = x_sorted.size
    prefix = np.concatenate([[0.0], np.cumsum(x_sorted)])
    total = prefix[-1]
    k = np.searchsorted(x_sorted, y_sorted, side="right")
    s = y_sorted * k - prefix[k] + (total - prefix[k]) - y_sorted * (m - k)
    return float(np.sum(s))


def _sum_abs_within(x_sorted: np.ndarray) -> float:
    """Sum of |x_i - x_j| over all ordered pairs (diagonal contributes 0)."""
    m = x_sorted.size
    idx = np.arange(1, m + 1)
    return float(2.0 * np.sum((2.0 * idx - m - 1.0) * x_sorted))


def energy_distance(ref, cur) -> MethodOutput:
    """Energy distance in square-root form, exact pairwise means in 1-D."""
    x = np.sort(_as_sample(ref, "reference"))
    y = np.sort(_as_sample(cur, "current"))
    m, n = x.size, y.size
    a = _sum_abs_cross(x, y) / (m * n)
    b = _sum_abs_within(x) / (m * m)
    c = _sum_abs_within(y) / (n * n)
    d = math.sqrt(max(2.0 * a - b - c, 0.0))
    return MethodOutput("energy", d, d, DISTANCE)


# ---------------------------------------------------------------------------
# Binned divergences
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SharedHistogram:
    """Equal-width histogram over the pooled range, shared by both samples."""

    edges: np.ndarray
    ref_probs: np.ndarray
    cur_probs: np.ndarray
    smoothing_eps: float = 1e-9


def _sturges(n: int) -> int:
    return int(math.ceil(math.log2(max(n, 1)))) + 1


def shared_histogram(ref, cur, n_bins: int | None = None) -> SharedHistogram:
    """Bin both samples on one equal-width grid spanning the pooled range.

    The automatic bin count is max(10, Sturges(len(ref))). A smoothing
    epsilon is added to every count before normalisation so downstream
    divergences stay finite; the pooled maximum lands in the last bin.
    """
    x = _as_sample(ref, "reference")
    y = _as_sample(cur, "current")
    lo = min(x.min(), y.min())
    hi = max(x.max(), y.max())
    if lo == hi:
        raise MethodError("pooled data is constant: cannot build histogram")
    if n_bins is None:
        n_bins = max(10, _sturges(x.size))
    if n_bins < 1:
        raise MethodError("n_bins must be >= 1")
    edges = np.linspace(lo, hi, n_bins + 1)
    eps = 1e-9
    ref_counts = np.histogram(x, bins=edges)[0].astype(np.float64) + eps
    cur_counts = np.histogram(y, bins=edges)[0].astype(np.float64) + eps
    return SharedHistogram(
        edges, ref_counts / ref_counts.sum(), cur_counts / cur_counts.sum(), eps
    )


def jensen_shannon_distance(h: SharedHistogram) -> MethodOutput:
    """Square root of the Jensen-Shannon divergence, log base 2 (range [0, 1])."""
    p = h.ref_probs
    q = h.cur_probs
    mix = 0.5 * (p + q)
    div = 0.5 * (
        np.sum(p * np.log2(p / mix)) + np.sum(q * np.log2(q / mix))
    )
    d = float(min(math.sqrt(max(div, 0.0)), 1.0))
    return MethodOutput("jensen_shannon", d, d, DISTANCE)


def kl_divergence(h: SharedHistogram) -> MethodOutput:
    """Kullback-Leibler divergence KL(current || reference), natural log."""
    d = float(np.sum(h.cur_probs * np.log(h.cur_probs / h.ref_probs)))
    d = max(d, 0.0)
    return MethodOutput("kl", d, d, DISTANCE)


def hellinger_distance(h: SharedHistogram) -> MethodOutput:
    """Hellinger distance sqrt(1 - sum(sqrt(p * q))), range [0, 1]."""
    bc = float(np.sum(np.sqrt(h.ref_probs * h.cur_probs)))
    d = math.sqrt(max(1.0 - min(bc, 1.0), 0.0))
    return MethodOutput("hellinger", d, d, DISTANCE)


def psi_from_probs(ref_probs, cur_probs, floor: float = 1e-4) -> float:
    """Population stability index over matched bin proportions."""
    p = np.maximum(np.asarray(ref_probs, dtype=np.float64), floor)
    q = np.maximum(np.asarray(cur_probs, dtype=np.float64), floor)
    return float(np.sum((q - p) * np.log(q / p)))


def psi(ref, cur, n_bins: int = 10) -> MethodOutput:
    """Population stability index with reference-quantile bins.

    Bin edges are reference quantiles (deciles by default) with the
    outer edges extended to infinity; per-bin proportions are floored at
    1e-4 before the log ratio.
    """
    x = _as_sample(ref, "reference")
    y = _as_sample(cur, "current")
    if np.unique(x).size < n_bins:
        raise MethodError(
            f"reference has fewer than {n_bins} distinct values for psi binning"
        )
    interior = np.quantile(x, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    edges = np.unique(interior)
    if edges.size < 1:
        raise MethodError("reference quantile edges collapsed")
    ref_prop = np.bincount(
        np.searchsorted(edges, x, side="right"), minlength=edges.size + 1
    ) / x.size
    cur_prop = np.bincount(
        np.searchsorted(edges, y, side="right"), minlength=edges.size + 1
    ) / y.size
    d = psi_from_probs(ref_prop, cur_prop)
    return MethodOutput("psi", d, d, DISTANCE)


def psi_categorical(ref, cur) -> MethodOutput:
    """PSI over the reference's category proportions (binary/categorical data)."""
    x = _as_sample(ref, "reference")
    y = _as_sample(cur, "current")
    cats = np.unique(np.concatenate([x, y]))
    if cats.size < 2:
        raise MethodError("pooled data has a single category")
    ref_prop = np.array([np.mean(x == c) for c in cats])
    cur_prop = np.array([np.mean(y == c) for c in cats])
    d = psi_from_probs(ref_prop, cur_prop)
    return MethodOutput("psi", d, d, DISTANCE)


# ---------------------------------------------------------------------------
# Classifier two-sample test
# ---------------------------------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def spot_the_difference(
    ref_rows,
    cur_rows,
    holdout_frac: float = 0.25,
    seed: int = 0,
) -> MethodOutput:
    """Classifier two-sample test on whole rows.

    Reference rows are labelled 0 and current rows 1. The larger side is
    downsampled for class balance, rows are paired and the holdout keeps
    pairs together so both classes stay balanced. A regularised logistic
    classifier (500 full-batch gradient steps, step 0.1, L2 1e-3) is fit
    on standardised training features; the p-value is the one-sided
    binomial tail of the held-out accuracy against chance.
    """
    r = np.atleast_2d(np.asarray(ref_rows, dtype=np.float64))
    c = np.atleast_2d(np.asarray(cur_rows, dtype=np.float64))
    if r.ndim != 2 or c.ndim != 2 or r.shape[1] != c.shape[1]:
        raise MethodError("reference and current frames must share one column set")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(c))):
        raise MethodError("frames contain non-finite values")
    m, n = r.shape[0], c.shape[0]
    if min(m, n) < 20:
        raise MethodError("spot_the_difference needs at least 20 rows per side")
    rng = np.random.default_rng(seed)
    k = min(m, n)
    r_bal = r[rng.choice(m, size=k, replace=False)] if m > k else r
    c_bal = c[rng.choice(n, size=k, replace=False)] if n > k else c

    pair_order = rng.permutation(k)
    h_pairs = max(1, int(round(k * holdout_frac)))
    if h_pairs >= k:
        raise MethodError("holdout fraction leaves no training data")
    hold = pair_order[:h_pairs]
    train = pair_order[h_pairs:]

    x_tr = np.vstack([r_bal[train], c_bal[train]])
    y_tr = np.concatenate([np.zeros(train.size), np.ones(train.size)])
    x_ho = np.vstack([r_bal[hold], c_bal[hold]])
    y_ho = np.concatenate([np.zeros(hold.size), np.ones(hold.size)])
    if np.unique(y_ho).size < 2:
        raise MethodError("single-class holdout")

    mu = x_tr.mean(axis=0)
    sd = x_tr.std(axis=0)
    sd[sd == 0.0] = 1.0
    z_tr = np.hstack([np.ones((x_tr.shape[0], 1)), (x_tr - mu) / sd])
    z_ho = np.hstack([np.ones((x_ho.shape[0], 1)), (x_ho - mu) / sd])

    w = np.zeros(z_tr.shape[1])
    step, l2 = 0.1, 1e-3
    for _ in range(500):
        grad = z_tr.T @ (_sigmoid(z_tr @ w) - y_tr) / y_tr.size
        grad[1:] += l2 * w[1:]
        w -= step * grad

    pred = _sigmoid(z_ho @ w) >= 0.5
    n_h = y_ho.size
    correct = int(np.sum(pred == y_ho))
    acc = correct / n_h
    # P[Binom(n_h, 1/2) >= correct]
    p = 1.0 if correct == 0 else float(special.bdtrc(correct - 1, n_h, 0.5))
    return MethodOutput("spot_the_difference", acc, _clamp_p(p), P_VALUE)


# ---------------------------------------------------------------------------
# Uniform dispatch
# ---------------------------------------------------------------------------

def evaluate(
    method: str,
    ref,
    cur,
    *,
    seed: int = 0,
    n_bins: int | None = None,
    dtype: str = "numeric",
) -> MethodOutput:
    """Run one per-variable method by id on a reference/current pair.

    Histogram-based divergences build their shared histogram here; psi
    switches to category proportions for binary data, matching how
    column dtypes are handled in the detection pipeline.
    """
    if method not in METHOD_SPECS:
        raise MethodError(f"unknown method: {method}")
    if method == "ks":
        return ks_two_sample(ref, cur)
    if method == "ks_approx":
        return ks_approximate(ref, cur)
    if method == "cvm":
        return cvm_two_sample(ref, cur)
    if method == "anderson_darling":
        return anderson_darling_2samp(ref, cur)
    if method == "epps_singleton":
        return epps_singleton(ref, cur)
    if method == "mann_whitney":
        return mann_whitney_u(ref, cur)
    if method == "t_test":
        return t_test(ref, cur)
    if method == "wasserstein":
        return wasserstein_1d(ref, cur)
    if method == "energy":
        return energy_distance(ref, cur)
    if method in ("jensen_shannon", "kl", "hellinger"):
        h = shared_histogram(ref, cur, n_bins)
        if method == "jensen_shannon":
            return jensen_shannon_distance(h)
        if method == "kl":
            return kl_divergence(h)
        return hellinger_distance(h)
    if method == "psi":
        if dtype in ("binary", "categorical"):
            return psi_categorical(ref, cur)
        return psi(ref, cur, n_bins if n_bins else 10)
    if method == "spot_the_difference":
        return spot_the_difference(
            np.asarray(ref, dtype=np.float64).reshape(len(ref), -1),
            np.asarray(cur, dtype=np.float64).reshape(len(cur), -1),
            seed=seed,
        )
    raise MethodError(f"unknown method: {method}")
