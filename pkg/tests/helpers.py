"""Independent oracles shared by the test modules.

These deliberately avoid the library's own code paths: success probabilities
come from scipy distributions, the l1/linf support oracle minimizes the
penalized objective numerically, and binomial tails are brute-force sums.
"""

import math

import numpy as np
from scipy import stats


def exact_lasso_success(config, lam, mu, sigma):
    """Closed-form success probability of the max-statistic rule."""
    q0 = 2 * stats.norm.sf(lam / sigma)
    qa = stats.norm.sf((lam - mu) / sigma) + stats.norm.sf((lam + mu) / sigma)
    pi = config.epsilon * qa + (1 - config.epsilon) * q0
    row_detect = 1.0 - (1.0 - pi) ** config.k
    no_fp = (1.0 - q0) ** (config.k * (config.p - config.s))
    return row_detect ** config.s * no_fp


def exact_group_success(config, lam_sq, mu, sigma):
    """Success probability of the chi-square rule via noncentral chi-square."""
    t = lam_sq / sigma**2
    k, eps = config.k, config.epsilon
    zmax = min(k, int(stats.binom.isf(1e-12, k, eps)) + 2)
    zs = np.arange(0, zmax + 1)
    pmf = stats.binom.pmf(zs, k, eps)
    nc = zs * (mu / sigma) ** 2
    det = np.where(nc == 0, stats.chi2.sf(t, k),
                   stats.ncx2.sf(t, k, np.maximum(nc, 1e-300)))
    row_detect = float((pmf * det).sum())
    fp_row = stats.chi2.sf(t, k)
    return row_detect ** config.s * (1 - fp_row) ** (config.p - config.s)


def linf_objective(Y, theta, lam):
    return 0.5 * ((Y - theta) ** 2).sum() + lam * np.abs(theta).max(axis=1).sum()


def linf_support_by_minimization(Y, lam, iters=120000):
    """Support of argmin 0.5||Y - theta||^2 + lam sum_i ||theta_i||_inf.

    Projected subgradient descent with the strongly-convex step rule, then a
    zero-snap polish: a row is reset to zero whenever that does not increase
    the objective (the iterate cannot reach an exact zero on its own).  Rows
    are declared non-zero when their norm exceeds 1e-6.
    """
    theta = Y.copy()
    best = theta.copy()
    best_obj = linf_objective(Y, theta, lam)
    p, k = Y.shape
    for t in range(1, iters + 1):
        grad = theta - Y
        absrow = np.abs(theta)
        mx = absrow.max(axis=1)
        for i in range(p):
            if mx[i] > 0:
                # distribute the subgradient over the argmax coordinates
                am = absrow[i] >= mx[i] * (1.0 - 1e-12)
                grad[i, am] += lam * np.sign(theta[i, am]) / am.sum()
        theta = theta - (2.0 / (t + 1.0)) * grad
        if t % 200 == 0:
            obj = linf_objective(Y, theta, lam)
            if obj < best_obj:
                best_obj = obj
                best = theta.copy()
    theta = best
    # zero-snap polish: compare the objective with each row zeroed out
    for i in range(p):
        cand = theta.copy()
        cand[i] = 0.0
        if linf_objective(Y, cand, lam) <= linf_objective(Y, theta, lam):
            theta = cand
    norms = np.sqrt((theta * theta).sum(axis=1))
    return tuple(np.flatnonzero(norms > 1e-6))


def _binomial_logpmf(k, p, j):
    return (math.lgamma(k + 1) - math.lgamma(j + 1) - math.lgamma(k - j + 1)
            + j * math.log(p) + (k - j) * math.log1p(-p))


def brute_binomial_cdf(k, p, m):
    """P[Bin(k, p) <= m] by direct log-space summation."""
    if m < 0:
        return 0.0
    total = 0.0
    for j in range(0, min(int(m), k) + 1):
        total += math.exp(_binomial_logpmf(k, p, j))
    return min(1.0, total)


def brute_binomial_sf(k, p, m):
    """P[Bin(k, p) >= m], summed from above so tiny tails stay accurate."""
    if m > k:
        return 0.0
    total = 0.0
    for j in range(max(0, int(m)), k + 1):
        total += math.exp(_binomial_logpmf(k, p, j))
    return min(1.0, total)
