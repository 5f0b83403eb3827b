"""Self-checks run by ``softdt validate``: toy thresholds, toy curve, density and CDF oracles."""

from __future__ import annotations

import math
from typing import NamedTuple

import mpmath
import numpy as np

from ..core_data import Dataset, RngStream, WeightedIndexSet
from ..split_search import (SoftSearchConfig, candidate_grid, hard_best_split, normal_cdf,
                            soft_best_split, soft_density_increments, truncated_cdf)
from .toy import MODES, toy_misclassification_prob, toy_monte_carlo

DEFAULT_SIGMAS = (0.25, 0.5, 1.0, 2.0, 4.0)


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def d_term_forms(sigma):
    """Order-preservation probability with the sqrt(2) scale and with a plain 2."""
    return normal_cdf(4.0 / (math.sqrt(2.0) * sigma)), normal_cdf(4.0 / (2.0 * sigma))


def check_toy_thresholds(tolerance=0.15):
    """Hard search picks 2 on the four-point toy; soft search with sigma 0.3 lands near 0."""
    data = Dataset.from_arrays(np.array([[-2.0], [-2.0], [2.0], [2.0]]), [0, 0, 1, 1])
    view = WeightedIndexSet.full(4)
    hard = hard_best_split(data, view, 0)
    soft = soft_best_split(data, view, 0, SoftSearchConfig(u_s=0.3), means=np.array([1.0]))
    return [Check("toy hard threshold", hard is not None and hard.threshold == 2.0,
                  f"tau={hard.threshold if hard else None}"),
            Check("toy soft threshold", soft is not None and abs(soft.threshold) <= tolerance,
                  f"tau={soft.threshold if soft else None:.6g}")]


def check_toy_curve(sigmas=DEFAULT_SIGMAS, draws=1_000_000, tolerance=0.005, seed=0):
    """Analytic misclassification probability against simulation."""
    out = []
    for mode in MODES:
        for s in sigmas:
            p = toy_misclassification_prob(s, 1.0, mode)
            mc, se = toy_monte_carlo(s, 1.0, mode, draws, RngStream(seed).derive("toy", mode, s))
            diff = abs(p - mc)
            out.append(Check(f"toy {mode} sigma={s:g}", diff <= tolerance,
                             f"analytic={p:.6f} mc={mc:.6f} diff={diff:.2e} se={se:.1e}"))
    return out


def direct_density_increments(values, class_weights, grid, sigma, window):
    """Increments from explicit CDF sums at every grid point.

    The first point carries all mass below it and the last point the
    remainder, so the increments add up to the total weight.
    """
    values = np.asarray(values, dtype=float)
    cw = np.asarray(class_weights, dtype=float)
    z = (np.asarray(grid)[:, None] - values[None, :]) / sigma
    cum = truncated_cdf(z, window) @ cw
    inc = np.diff(cum, axis=0, prepend=0.0)
    inc[-1] = cw.sum(axis=0) - cum[-2]
    return inc.sum(axis=1), inc


def check_density_oracle(cases=20, tolerance=1e-9, seed=0):
    """Incremental soft densities against direct CDF sums on random inputs."""
    cfg = SoftSearchConfig(u_s=1.0)
    worst = worst_closure = 0.0
    for case in range(cases):
        gen = RngStream(seed).derive("density", case).generator
        d = int(gen.integers(2, 12))
        values = np.sort(gen.choice(np.arange(-50, 50), size=d, replace=False) * 0.1)
        cw = gen.integers(0, 4, size=(d, 3)).astype(float)
        cw[cw.sum(axis=1) == 0, 0] = 1.0
        sigma = float(gen.uniform(0.05, 2.0))
        grid = candidate_grid(values, sigma, cfg)
        rho, by_class = soft_density_increments(values, cw, grid, sigma, cfg)
        ref, ref_by = direct_density_increments(values, cw, grid, sigma, cfg.window)
        worst = max(worst, float(np.max(np.abs(by_class - ref_by))), float(np.max(np.abs(rho - ref))))
        worst_closure = max(worst_closure, abs(float(rho.sum()) - float(cw.sum())))
    return [Check("density increments vs direct sums", worst <= tolerance, f"max err={worst:.2e}"),
            Check("density closure", worst_closure <= tolerance, f"max err={worst_closure:.2e}")]


def check_normal_cdf(tolerance=1e-12):
    """Double-precision CDF against a 50-digit reference."""
    mpmath.mp.dps = 50
    zs = np.linspace(-8.0, 8.0, 161)
    worst = max(abs(normal_cdf(z) - float(mpmath.ncdf(mpmath.mpf(float(z))))) for z in zs)
    return [Check("normal cdf vs 50-digit reference", worst <= tolerance, f"max err={worst:.2e}")]


def run_validation(sigmas=DEFAULT_SIGMAS, draws=1_000_000, tolerance=0.005, seed=0):
    """All checks; ``tolerance`` applies to the simulation comparison."""
    return (check_toy_thresholds() + check_toy_curve(sigmas, draws, tolerance, seed)
            + check_density_oracle() + check_normal_cdf())
