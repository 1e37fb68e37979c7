"""Scalar special functions shared by the calibration and theory modules.

Everything here is plain-double numerics with stated tolerances: Gaussian
tails through libm's erfc, the regularized incomplete gamma via the classic
series / continued-fraction pair, and exact binomial probabilities through
log-gamma.  Quantiles are obtained by bisection; they are computed a handful
of times per sweep, so robustness beats speed.
"""

import math

_SQRT2 = math.sqrt(2.0)
_MAX_ITER = 600
_GAMMA_EPS = 1e-16


def normal_upper_tail(x):
    """P[N(0,1) > x], accurate to ~1e-15 relative error over the useful range."""
    return 0.5 * math.erfc(x / _SQRT2)


def normal_quantile(prob):
    """z such that P[N(0,1) <= z] = prob, by bisection to 1e-13."""
    if not 0.0 < prob < 1.0:
        raise ValueError(f"probability must lie in (0,1), got {prob}")
    lo, hi = -42.0, 42.0
    for _ in range(220):
        mid = 0.5 * (lo + hi)
        if 1.0 - normal_upper_tail(mid) < prob:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


def _gamma_series(a, x):
    # Lower regularized gamma P(a, x) by power series; valid for x < a + 1.
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cont_fraction(a, x):
    # Upper regularized gamma Q(a, x) by modified Lentz continued fraction;
    # valid for x >= a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_lower(a, x):
    """P(a, x) = gamma(a, x) / Gamma(a) for a > 0, x >= 0."""
    if a <= 0.0:
        raise ValueError(f"shape must be positive, got {a}")
    if x < 0.0:
        raise ValueError(f"argument must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cont_fraction(a, x)


def regularized_gamma_upper(a, x):
    """Q(a, x) = 1 - P(a, x), computed directly in the tail for accuracy."""
    if a <= 0.0:
        raise ValueError(f"shape must be positive, got {a}")
    if x < 0.0:
        raise ValueError(f"argument must be nonnegative, got {x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cont_fraction(a, x)


def chi_square_upper_tail(dof, t):
    """P[chi^2_dof > t]."""
    if dof <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {dof}")
    if t <= 0.0:
        return 1.0
    return regularized_gamma_upper(0.5 * dof, 0.5 * t)


def log_binomial_pmf(k, p, m):
    """log P[Bin(k, p) = m], stable for large k."""
    if p == 0.0:
        return 0.0 if m == 0 else -math.inf
    if p == 1.0:
        return 0.0 if m == k else -math.inf
    return (math.lgamma(k + 1) - math.lgamma(m + 1) - math.lgamma(k - m + 1)
            + m * math.log(p) + (k - m) * math.log1p(-p))


def binomial_cdf(k, p, m):
    """P[Bin(k, p) <= m] by direct pmf summation."""
    if m < 0:
        return 0.0
    if m >= k:
        return 1.0
    return min(1.0, sum(math.exp(log_binomial_pmf(k, p, j)) for j in range(int(m) + 1)))


def binomial_lower_quantile(k, p, tail_prob):
    """Largest m >= 1 with P[Bin(k, p) < m] <= tail_prob, or 1 if none exists.

    Used as an exact replacement for Chernoff-style lower-tail quantiles when
    the bound is vacuous; the floor of 1 keeps downstream scales finite.
    """
    m = 1
    cdf = math.exp(log_binomial_pmf(k, p, 0))
    while m < k and cdf + math.exp(log_binomial_pmf(k, p, m)) <= tail_prob:
        cdf += math.exp(log_binomial_pmf(k, p, m))
        m += 1
    return m
