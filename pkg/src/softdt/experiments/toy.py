"""Two-point toy problem: misclassification probability under Gaussian noise.

Training points x1 ~ N(-2, sigma^2) (class 0) and x4 ~ N(2, sigma^2)
(class 1) are split at their midpoint m. A class-1 test point x_t is
misclassified when it lands on the class-0 side of m.
"""

from __future__ import annotations

import math

import numpy as np

from ..core_data import as_rng
from ..split_search import normal_cdf

MODES = ("train-uncertain", "both-uncertain")


def prob_order_preserved(sigma):
    """P(x1 < x4): the difference x1 - x4 is N(-4, 2 sigma^2)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return normal_cdf(4.0 / (math.sqrt(2.0) * sigma))


def prob_test_left_of_midpoint(sigma, x_t=1.0, mode="train-uncertain"):
    """P(x_t < m) with m ~ N(0, sigma^2 / 2) and, in both-uncertain mode,
    x_t itself ~ N(x_t, sigma^2)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if mode == "train-uncertain":
        sd = sigma / math.sqrt(2.0)
    elif mode == "both-uncertain":
        sd = sigma * math.sqrt(1.5)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return 1.0 - normal_cdf(x_t / sd)


def toy_misclassification_prob(sigma, x_t=1.0, mode="train-uncertain"):
    """Probability that the class-1 test point is predicted as class 0.

    P(y_hat = 0) = P(d < 0) P(c < 0) + P(d > 0) P(c > 0) with
    d = x1 - x4 and c = x_t - m.
    """
    pd = prob_order_preserved(sigma)
    pc = prob_test_left_of_midpoint(sigma, x_t, mode)
    return pd * pc + (1.0 - pd) * (1.0 - pc)


def toy_monte_carlo(sigma, x_t=1.0, mode="train-uncertain", draws=1_000_000, rng=None):
    """Simulated misclassification rate and its standard error."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    gen = as_rng(rng).generator
    x1 = -2.0 + sigma * gen.standard_normal(draws)
    x4 = 2.0 + sigma * gen.standard_normal(draws)
    xt = np.full(draws, float(x_t))
    if mode == "both-uncertain":
        xt = xt + sigma * gen.standard_normal(draws)
    m = 0.5 * (x1 + x4)
    # class 0 sits on the side of m where x1 lies
    wrong = np.where(x1 < x4, xt < m, xt > m)
    p = float(wrong.mean())
    return p, math.sqrt(max(p * (1 - p), 1e-300) / draws)
