"""Split scoring: hard C4.5 threshold search and Gaussian-filtered soft search.

Both searches are vectorized over attributes. The hard search runs on
columns presorted once per training matrix, so every caller (single
attribute, all attributes, oversampled baselines) goes through the same
kernel and produces bit-identical numbers for identical inputs.
"""

from __future__ import annotations

import math
import warnings
import weakref
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermeval
from scipy.special import ndtr, xlogy

from .core_data import WeightedIndexSet

GAIN_EPS = 1e-12
MAX_GRID = 20000
WINDOW_RTOL = 1e-9
_LN2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)


def _taylor_order(resolution):
    """Smallest order whose remainder bound (h^(k+1) / (k+1)!) is below 1e-17."""
    h = 0.5 * resolution
    k, term = 1, h
    while term > 1e-17 and k < 40:
        k += 1
        term *= h / k
    return max(k - 1, 1)


def normal_cdf(z):
    """Standard normal CDF of a scalar via the complementary error function."""
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_cdf_array(z):
    """Vectorized standard normal CDF."""
    return ndtr(z)


def truncated_cdf(z, window):
    """Normal CDF forced to exactly 0 below ``-window`` and 1 above ``window``.

    Offsets within ``WINDOW_RTOL * window`` of an edge count as inside, so
    a grid point that sits on the edge up to rounding keeps its CDF value.
    """
    z = np.asarray(z, dtype=float)
    edge = window * (1.0 + WINDOW_RTOL)
    return np.where(z < -edge, 0.0, np.where(z > edge, 1.0, ndtr(z)))


@dataclass
class SearchStats:
    """Counts candidate thresholds whose gain was evaluated."""

    evaluations: int = 0
    by_depth: dict = field(default_factory=dict)

    def add(self, n, depth=None):
        self.evaluations += int(n)
        if depth is not None:
            self.by_depth[depth] = self.by_depth.get(depth, 0) + int(n)


@dataclass(frozen=True)
class SoftSearchConfig:
    """Soft search settings.

    Attributes:
        u_s: Uncertainty factor; sigma of attribute j is ``u_s * mean_j``.
        window: Kernel truncation in units of sigma; the grid extends
            ``window / 2`` sigmas beyond the observed values.
        resolution: Grid step in units of sigma.
    """

    u_s: float = 0.0
    window: float = 6.0
    resolution: float = 0.1

    def __post_init__(self):
        if self.u_s < 0:
            raise ValueError("u_s must be nonnegative")
        if self.window <= 0:
            raise ValueError("window must be positive")
        if not 0 < self.resolution < self.window:
            raise ValueError("resolution must lie in (0, window)")


@dataclass(frozen=True, eq=False)
class SplitCandidate:
    attribute: int
    threshold: float
    gain: float
    gain_ratio: float
    left_weight: float
    right_weight: float
    left_classes: np.ndarray
    right_classes: np.ndarray


def _xlog2x_sum(c):
    """Returns ``t log2 t - sum_k c_k log2 c_k`` over the last axis."""
    t = c.sum(axis=-1)
    return (xlogy(t, t) - xlogy(c, c).sum(axis=-1)) / _LN2


def entropy(hist):
    """Shannon entropy in bits of a (possibly fractional) class histogram."""
    h = np.asarray(hist, dtype=float)
    t = h.sum()
    if t <= 0:
        return 0.0
    return float(max(_xlog2x_sum(h) / t, 0.0))


def conditional_entropy(left, right):
    """Weighted mean entropy of the two branch histograms."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    t = left.sum() + right.sum()
    if t <= 0:
        return 0.0
    return float((_xlog2x_sum(left) + _xlog2x_sum(right)) / t)


def split_information(left_w, right_w):
    """Entropy of the branch proportions."""
    return entropy([left_w, right_w])


def gain_ratio(gain, left_w, right_w):
    """Gain divided by split information; 0 when one branch is empty."""
    if left_w + right_w <= 0:
        raise ValueError("branch weights must not both be zero")
    si = split_information(left_w, right_w)
    return 0.0 if si <= 0 else gain / si


def _gain_terms(left, right, totals):
    """Gain and split information for arrays of branch class weights.

    Args:
        left: (..., K) left-branch class weights.
        right: (..., K) right-branch class weights.
        totals: (K,) or broadcastable class totals of the known values;
            ``left + right`` equals them up to rounding.

    Returns:
        Tuple (information gain, split information, left weight, right
        weight), all in bits and of the leading shape.
    """
    lw = left.sum(axis=-1)
    rw = right.sum(axis=-1)
    kt = totals.sum(axis=-1)
    h_all = xlogy(kt, kt) - xlogy(totals, totals).sum(axis=-1)
    xl = xlogy(lw, lw)
    xr = xlogy(rw, rw)
    h_cond = xl + xr - xlogy(left, left).sum(axis=-1) - xlogy(right, right).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        info = (h_all - h_cond) / (_LN2 * kt)
        sinfo = (xlogy(kt, kt) - xl - xr) / (_LN2 * kt)
    return info, sinfo, lw, rw


class SortedColumns:
    """Per-column sort of a value matrix, reused across all nodes of a tree.

    NaN cells sort last and never act as thresholds.
    """

    def __init__(self, X, y, n_classes):
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        self.order = np.argsort(X, axis=0, kind="stable")
        self.values = np.take_along_axis(X, self.order, axis=0)
        ys = np.asarray(y)[self.order]
        self.class_masks = np.stack([(ys == k).astype(float) for k in range(n_classes)])
        self.n_known = np.count_nonzero(~np.isnan(X), axis=0)
        self.boundary = self.values[:-1] < self.values[1:]
        run_end = np.empty_like(self.order)
        rows = np.arange(n)
        for j in range(X.shape[1]):
            col = self.values[:, j]
            k = self.n_known[j]
            run_end[:k, j] = np.searchsorted(col[:k], col[:k], side="right") - 1
            run_end[k:, j] = rows[k:]
        # index of the last row sharing the value that follows position p
        self.next_run_end = run_end[1:]
        self.n_rows = n
        self.n_classes = n_classes


_SORT_CACHE = weakref.WeakKeyDictionary()


def sorted_columns(data):
    """Cached :class:`SortedColumns` for a dataset."""
    sc = _SORT_CACHE.get(data)
    if sc is None:
        sc = SortedColumns(data.X, data.y, data.n_classes)
        _SORT_CACHE[data] = sc
    return sc


def dense_weights(view, n):
    w = np.zeros(n)
    w[view.rows] = view.weights
    return w


class AttributeBest:
    """Per-attribute best splits returned by the vectorized kernels."""

    __slots__ = ("attributes", "threshold", "gain", "gain_ratio", "left", "right")

    def __init__(self, attributes, threshold, gain, gain_ratio, left, right):
        self.attributes = attributes
        self.threshold = threshold
        self.gain = gain
        self.gain_ratio = gain_ratio
        self.left = left
        self.right = right

    def candidate(self, i):
        left, right = self.left[i], self.right[i]
        return SplitCandidate(int(self.attributes[i]), float(self.threshold[i]),
                              float(self.gain[i]), float(self.gain_ratio[i]),
                              float(left.sum()), float(right.sum()), left, right)


def _eligible(lw, rw, min_branch_weight):
    if min_branch_weight <= 0:
        return np.ones(np.shape(lw), dtype=bool)
    floor = min_branch_weight * (1.0 - 1e-9)
    return (lw >= floor) & (rw >= floor)


def hard_scan(cols, w, attributes, min_branch_weight=0.0, stats=None, depth=None):
    """Best hard threshold per attribute for the view given by dense weights.

    Candidates are the distinct in-view values x(2)..x(D) of each attribute;
    rows with ``value < threshold`` go left. Ties in gain go to the
    smaller threshold.

    Args:
        cols: SortedColumns of the training matrix.
        w: Dense weight vector over all rows (0 = not in view).
        attributes: Attribute indices to scan.
        min_branch_weight: Both branches must carry at least this weight.
        stats: Optional SearchStats counter.
        depth: Node depth for the counter.

    Returns:
        AttributeBest; attributes without a candidate get gain ``-inf``.
    """
    atts = np.asarray(attributes, dtype=np.int64)
    m = atts.size
    n = cols.n_rows
    K = cols.n_classes
    total = w.sum()
    thr = np.full(m, np.nan)
    gain = np.full(m, -np.inf)
    ratio = np.zeros(m)
    left = np.zeros((m, K))
    right = np.zeros((m, K))
    if n < 2 or m == 0:
        return AttributeBest(atts, thr, gain, ratio, left, right)
    ws = w[cols.order[:, atts]]
    cum = np.cumsum(ws[None, :, :] * cols.class_masks[:, :, atts], axis=1)
    cum = np.moveaxis(cum, 0, -1)  # (n, m, K)
    pc = np.cumsum(ws > 0, axis=0)
    nk = cols.n_known[atts]
    has = nk > 0
    known = np.zeros((m, K))
    known[has] = cum[nk[has] - 1, np.flatnonzero(has)]
    nxt = np.take_along_axis(pc, cols.next_run_end[:, atts], axis=0)
    valid = cols.boundary[:, atts] & (pc[:-1] > 0) & (nxt - pc[:-1] > 0)
    L = cum[:-1]
    R = np.maximum(known[None, :, :] - L, 0.0)
    kt = known.sum(axis=1)
    info, sinfo, lw, rw = _gain_terms(L, R, known[None, :, :])
    valid &= _eligible(lw, rw, min_branch_weight)
    if stats is not None:
        stats.add(np.count_nonzero(valid), depth)
    scores = np.where(valid, info, -np.inf)
    best = np.argmax(scores, axis=0)
    idx = np.arange(m)
    ok = valid[best, idx]
    frac = np.where(total > 0, kt / total, 0.0)
    g = scores[best, idx] * frac
    gain[ok] = g[ok]
    si = sinfo[best, idx]
    ratio[ok] = np.where(si[ok] > 0, g[ok] / np.where(si[ok] > 0, si[ok], 1.0), 0.0)
    thr[ok] = cols.values[best[ok] + 1, atts[ok]]
    left[ok] = L[best[ok], idx[ok]]
    right[ok] = R[best[ok], idx[ok]]
    return AttributeBest(atts, thr, gain, ratio, left, right)


def hard_best_split(data, view, j, min_branch_weight=0.0, stats=None):
    """Best C4.5 threshold for attribute ``j`` or None without candidates."""
    cols = sorted_columns(data)
    res = hard_scan(cols, dense_weights(view, data.n_rows), [j], min_branch_weight, stats)
    return res.candidate(0) if np.isfinite(res.gain[0]) else None


def candidate_grid(values, sigma, cfg):
    """Soft-search thresholds: an arithmetic progression of step
    ``resolution * sigma`` from ``min - window/2 * sigma`` with the upper end
    ``max + window/2 * sigma`` appended.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no values")
    half = 0.5 * cfg.window * sigma
    lo = float(values.min()) - half
    hi = float(values.max()) + half
    step = cfg.resolution * sigma
    n_steps = int(math.floor((hi - lo) / step + 1e-9))
    grid = lo + np.arange(n_steps + 1) * step
    if abs(grid[-1] - hi) <= 1e-9 * step:
        grid[-1] = hi
    elif grid[-1] < hi:
        grid = np.append(grid, hi)
    else:
        grid[-1] = hi
    return grid


def grid_size(vmin, vmax, sigma, cfg):
    return int(math.floor((vmax - vmin + cfg.window * sigma) / (cfg.resolution * sigma) + 1e-9)) + 2


@lru_cache(maxsize=16)
def _band_tables(window, resolution):
    """Taylor tables for kernel CDF increments over one band of grid steps.

    A value whose first band offset is ``z0 = s - window - resolution`` with
    ``s`` in [0, resolution] has CDF ``Phi(c_b + s')`` at band step ``b``,
    where ``c_b`` is the centre of the b-th step interval and
    ``|s'| <= resolution / 2``. Interior intervals use a Taylor expansion
    whose order depends on the resolution (error near 1e-16). Intervals
    fully outside the window are exactly 0 or 1; intervals that can touch a
    window edge are evaluated exactly.

    Returns:
        Tuple (increment table, CDF table, straddle columns, lower edges).
        Row k of each table multiplies ``s'**k``.
    """
    d = resolution
    q = window / d
    nb = int(math.floor(2 * q + 1)) + 2
    b = np.arange(nb)
    if abs(q - round(q)) < 1e-9:
        # integer ratio: classify by index; the column that can land on the
        # upper edge is evaluated exactly
        qi = int(round(q))
        below = b == 0
        above = b > 2 * qi + 1
    else:
        lower = -window - d + d * b
        below = lower + d <= -window
        above = lower >= window
    lower = -window - d + d * b
    inside = ~(below | above) & (lower >= -window - 1e-12) & (lower + d <= window + 1e-12)
    if abs(q - round(q)) < 1e-9:
        inside[2 * int(round(q)) + 1] = False
    straddle = ~(inside | below | above)
    centre = lower + 0.5 * d
    order = _taylor_order(d)
    T = np.zeros((order + 1, nb))
    c = centre[inside]
    phi = np.exp(-0.5 * c * c) / math.sqrt(2 * math.pi)
    T[0, inside] = ndtr(c)
    for k in range(1, order + 1):
        coef = np.zeros(k)
        coef[-1] = 1.0
        T[k, inside] = (-1) ** (k - 1) * hermeval(c, coef) * phi / math.factorial(k)
    T[0, above] = 1.0
    dT = np.diff(T, axis=1, prepend=0.0)
    return dT, T, np.flatnonzero(straddle), lower


def _band_increments(s, window, resolution):
    """CDF increments over the band for offsets ``s`` (shape (n,)) -> (n, nb)."""
    dT, T, straddle, lower = _band_tables(window, resolution)
    S = np.vander(s - 0.5 * resolution, dT.shape[0], increasing=True)
    dF = S @ dT
    if not straddle.size:
        return dF
    # patch the increments next to exactly evaluated columns
    nb = T.shape[1]
    cols = np.unique(np.concatenate([straddle, straddle - 1, straddle + 1]))
    cols = cols[(cols >= 0) & (cols < nb)]
    F = S @ T[:, cols]
    hit = np.isin(cols, straddle)
    F[:, hit] = truncated_cdf(lower[cols[hit]][None, :] + s[:, None], window)
    pos = {c: i for i, c in enumerate(cols)}
    for c in straddle:
        i = pos[c]
        dF[:, c] = F[:, i] - (F[:, pos[c - 1]] if c > 0 else 0.0)
        if c + 1 < nb:
            dF[:, c + 1] = F[:, pos[c + 1]] - F[:, i]
    return dF


def _soft_increments(x, w, y, n_classes, lo, step, sizes, sigma, cfg):
    """Scatters banded CDF increments of weighted points onto their grids.

    Args:
        x: (n, m) values; NaN cells are ignored.
        w: (n,) weights.
        y: (n,) class ids.
        lo, step, sizes, sigma: (m,) per-column grid start, step, grid
            size and kernel sigma.

    Returns:
        Tuple of (m, Gmax, K) increments and (m, K) column totals. The last
        grid point of column j holds the residual mass, so increments sum
        to the column totals.
    """
    n, m = x.shape
    K = n_classes
    gmax = int(sizes.max())
    known = ~np.isnan(x)
    wk = np.where(known, w[:, None], 0.0)
    totals = np.stack([wk[y == k].sum(axis=0) for k in range(K)], axis=1)
    a = (np.where(known, x, lo[None, :]) - lo[None, :]) / sigma[None, :]
    # k0 is the last grid index whose offset lies strictly below the
    # toleranced lower window edge
    tol = WINDOW_RTOL * cfg.window / cfg.resolution
    k0 = np.ceil((a - cfg.window) / cfg.resolution - tol).astype(np.int64) - 1
    s = np.clip((k0 * cfg.resolution - a) + cfg.window + cfg.resolution, 0.0,
                cfg.resolution)
    dF = _band_increments(s.ravel(), cfg.window, cfg.resolution)
    nb = dF.shape[1]
    # padded layout: nb slots before grid index 0 and after the grid end
    stride = gmax + 2 * nb
    base = ((np.arange(m)[None, :] * stride + nb + k0) * K + y[:, None]).ravel()
    flat = base[:, None] + (np.arange(nb) * K)[None, :]
    dF *= wk.ravel()[:, None]
    inc = np.bincount(flat.ravel(), weights=dF.ravel(), minlength=m * stride * K)
    inc = inc.reshape(m, stride, K)
    out = inc[:, nb: nb + gmax].copy()
    out[:, 0] += inc[:, :nb].sum(axis=1)
    tail = np.arange(gmax)[None, :] >= (sizes - 1)[:, None]
    out[tail] = 0.0
    cols = np.arange(m)
    out[cols, sizes - 1] = totals - out.sum(axis=1)
    return out, totals


def soft_density_increments(values, class_weights, grid, sigma, cfg):
    """Per-grid-point density increments of weighted values.

    Args:
        values: (D,) distinct sorted values.
        class_weights: (D, K) weights per value and class.
        grid: Thresholds from :func:`candidate_grid`.
        sigma: Kernel standard deviation.
        cfg: SoftSearchConfig (window, resolution).

    Returns:
        Tuple (delta_rho, delta_rho_by_class) of shapes (G,) and (G, K).
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    values = np.asarray(values, dtype=float)
    cw = np.asarray(class_weights, dtype=float)
    D, K = cw.shape
    grid = np.asarray(grid, dtype=float)
    rows, cls = np.nonzero(cw > 0)
    x = values[rows][:, None]
    w = cw[rows, cls]
    step = cfg.resolution * sigma
    inc, _ = _soft_increments(x, w, cls, K, np.array([grid[0]]), np.array([step]),
                              np.array([grid.size]), np.array([sigma]), cfg)
    by_class = inc[0, : grid.size]
    return by_class.sum(axis=1), by_class


def soft_scan(data, view, attributes, sigmas, cfg, min_branch_weight=0.0, stats=None,
              depth=None):
    """Best soft-search threshold for each attribute in ``attributes``.

    ``sigmas`` gives a positive kernel sigma per attribute. The chosen
    threshold maximizes the filtered gain; exact ties are resolved to the
    centre of the first run of consecutive maximal grid points.
    """
    atts = np.asarray(attributes, dtype=np.int64)
    sig = np.asarray(sigmas, dtype=float)
    m = atts.size
    K = data.n_classes
    thr = np.full(m, np.nan)
    gain = np.full(m, -np.inf)
    ratio = np.zeros(m)
    left = np.zeros((m, K))
    right = np.zeros((m, K))
    out = AttributeBest(atts, thr, gain, ratio, left, right)
    if m == 0:
        return out
    x = data.X[view.rows][:, atts]
    w = view.weights
    y = data.y[view.rows]
    total = w.sum()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        vmin = np.nanmin(x, axis=0)
        vmax = np.nanmax(x, axis=0)
    ok = np.isfinite(vmin)
    if not ok.all():
        sel = np.flatnonzero(ok)
        sub = soft_scan(data, view, atts[sel], sig[sel], cfg, min_branch_weight, stats, depth)
        for name in ("threshold", "gain", "gain_ratio", "left", "right"):
            getattr(out, name)[sel] = getattr(sub, name)
        return out
    half = 0.5 * cfg.window * sig
    lo = vmin - half
    hi = vmax + half
    step = cfg.resolution * sig
    n_steps = np.floor((hi - lo) / step + 1e-9).astype(np.int64)
    on_lattice = np.abs(lo + n_steps * step - hi) <= 1e-9 * step
    sizes = n_steps + 1 + (~on_lattice)
    inc, totals = _soft_increments(x, w, y, K, lo, step, sizes, sig, cfg)
    gmax = inc.shape[1]
    rho_l = np.cumsum(inc, axis=1)
    rho_r = np.maximum(totals[:, None, :] - rho_l, 0.0)
    kt = totals.sum(axis=1)
    info, sinfo, lw, rw = _gain_terms(rho_l, rho_r, totals[:, None, :])
    kidx = np.arange(gmax)[None, :]
    grid = lo[:, None] + kidx * step[:, None]
    lastpos = sizes - 1
    grid[np.arange(m), lastpos] = hi
    valid = kidx < sizes[:, None]
    if min_branch_weight > 0:
        valid &= _eligible(lw, rw, min_branch_weight)
        # the child views are cut at the threshold, so hard counts must qualify too
        known = ~np.isnan(x)
        hard_w = np.where(known, w[:, None], 0.0)
        hk = np.clip(np.floor((np.where(known, x, lo) - lo) / step).astype(np.int64) + 1,
                     0, gmax)
        flat = (np.arange(m)[None, :] * (gmax + 1) + hk).ravel()
        hl = np.cumsum(np.bincount(flat, weights=hard_w.ravel(),
                                   minlength=m * (gmax + 1)).reshape(m, gmax + 1)[:, :gmax],
                       axis=1)
        valid &= _eligible(hl, kt[:, None] - hl, min_branch_weight)
    if stats is not None:
        stats.add(int(sizes.sum()), depth)
    scores = np.where(valid, info, -np.inf)
    frac = kt / total if total > 0 else np.zeros(m)
    for i in range(m):
        row = scores[i]
        top = row.max()
        if not np.isfinite(top):
            continue
        hits = np.flatnonzero(row == top)
        run_end = 0
        while run_end + 1 < hits.size and hits[run_end + 1] == hits[run_end] + 1:
            run_end += 1
        k = hits[run_end // 2]
        g = top * frac[i]
        thr[i] = grid[i, k]
        gain[i] = g
        ratio[i] = g / sinfo[i, k] if sinfo[i, k] > 0 else 0.0
        left[i] = rho_l[i, k]
        right[i] = rho_r[i, k]
    return out


def attribute_sigmas(means, u, attributes):
    """Kernel sigmas ``u * mean_j``; nonpositive entries mark a hard fallback."""
    return u * np.asarray(means, dtype=float)[np.asarray(attributes, dtype=np.int64)]


def soft_best_split(data, view, j, cfg, min_branch_weight=0.0, stats=None, means=None):
    """Soft-search threshold for attribute ``j``.

    Sigma is ``cfg.u_s`` times the attribute mean of ``data`` (the full
    training set), or of ``means`` when given. ``u_s == 0`` and
    nonpositive sigmas delegate to :func:`hard_best_split`.
    """
    if cfg.u_s == 0:
        return hard_best_split(data, view, j, min_branch_weight, stats)
    mu = data.means if means is None else means
    sigma = float(attribute_sigmas(mu, cfg.u_s, [j])[0])
    if not sigma > 0:
        warnings.warn(f"attribute {j}: nonpositive sigma {sigma:g}; using hard search")
        return hard_best_split(data, view, j, min_branch_weight, stats)
    res = soft_scan(data, view, [j], [sigma], cfg, min_branch_weight, stats)
    return res.candidate(0) if np.isfinite(res.gain[0]) else None


def _select(results, n_attributes):
    """Picks the cross-attribute winner by gain ratio among positive gains."""
    best = None
    best_key = None
    for res in results:
        for i, j in enumerate(res.attributes):
            g = res.gain[i]
            if not g > GAIN_EPS:
                continue
            key = (res.gain_ratio[i], -int(j))
            if best_key is None or key > best_key:
                best, best_key = (res, i), key
    return None if best is None else best[0].candidate(best[1])


def best_split_all_attributes(data, view, mode="hard", cfg=None, min_branch_weight=0.0,
                              stats=None, depth=None, means=None, dense=None):
    """Best split over all attributes.

    Each attribute contributes its max-gain threshold; the winner is the one
    with the highest gain ratio, ties going to the lower attribute index.

    Args:
        data: Training dataset.
        view: WeightedIndexSet of the node.
        mode: "hard" or "soft" search.
        cfg: SoftSearchConfig for soft mode.
        min_branch_weight: Minimum weight on each side of a candidate.
        stats: Optional SearchStats.
        depth: Node depth recorded in ``stats``.
        means: Attribute means for sigma; defaults to ``data.means``.
        dense: Optional precomputed dense weight vector of ``view``.

    Returns:
        SplitCandidate or None when no attribute has gain above 1e-12.
    """
    M = data.n_attributes
    allatt = np.arange(M)
    if mode == "hard" or cfg is None or cfg.u_s == 0:
        w = dense if dense is not None else dense_weights(view, data.n_rows)
        return _select([hard_scan(sorted_columns(data), w, allatt, min_branch_weight,
                                  stats, depth)], M)
    if mode != "soft":
        raise ValueError(f"unknown search mode {mode!r}")
    mu = data.means if means is None else means
    sig = attribute_sigmas(mu, cfg.u_s, allatt)
    with np.errstate(invalid="ignore"):
        vmin = np.nanmin(np.where(np.isnan(data.X), np.inf, data.X), axis=0)
        vmax = np.nanmax(np.where(np.isnan(data.X), -np.inf, data.X), axis=0)
    soft = sig > 0
    if not soft.all():
        warnings.warn("nonpositive sigma for some attributes; using hard search there")
    big = np.zeros(M, dtype=bool)
    big[soft] = [grid_size(a, b, s, cfg) > MAX_GRID
                 for a, b, s in zip(vmin[soft], vmax[soft], sig[soft])]
    if big.any():
        warnings.warn("soft grid too fine for some attributes; using hard search there")
    soft &= ~big
    results = []
    if soft.any():
        results.append(soft_scan(data, view, allatt[soft], sig[soft], cfg, min_branch_weight,
                                 stats, depth))
    if not soft.all():
        w = dense if dense is not None else dense_weights(view, data.n_rows)
        results.append(hard_scan(sorted_columns(data), w, allatt[~soft], min_branch_weight,
                                 stats, depth))
    return _select(results, M)


def view_of(rows, weights=None):
    """Convenience constructor for a WeightedIndexSet with unit weights."""
    rows = np.asarray(rows)
    return WeightedIndexSet(rows, np.ones(rows.size) if weights is None else weights)
