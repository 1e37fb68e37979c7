"""Analytic penalty levels and signal scales for the three procedures.

Each lambda is chosen so the per-row type-I probability is at most
alpha' / (p - s); each mu is the signal level at which the matching theorem
guarantees recovery, evaluated in the form used by the simulation protocol
(the group-l2 scale drops the factor 2e that appears inside the logarithm of
the theorem statement; both variants are reported).
"""

import math
from dataclasses import dataclass, field

from . import special
from .model import effective_sigma
from .theory import theorem3_c

SQRT_2PI = math.sqrt(2.0 * math.pi)


class CalibrationInvalid(ValueError):
    """A calibration formula was evaluated outside its validity region."""


@dataclass
class CalibrationReport:
    """All analytic thresholds for one configuration.

    lambda_group_sq is in squared (variance-scale) units; the other two
    lambdas and the three mu scales are in observation units.  intermediate
    carries the named scalars the formulas are built from, plus the
    theorem-variant group scale for comparison.  lasso_case2 flags configs
    where the medium-task-count regime (mu >= lambda suffices) applies.
    """

    lambda_lasso: float
    lambda_group_sq: float
    lambda_linf: float
    mu_lasso: float
    mu_group: float
    mu_linf: float
    intermediate: dict = field(default_factory=dict)
    lasso_case2: bool = False

    def to_json_dict(self):
        out = {
            "lambda_lasso": self.lambda_lasso,
            "lambda_group_sq": self.lambda_group_sq,
            "lambda_linf": self.lambda_linf,
            "mu_lasso": self.mu_lasso,
            "mu_group": self.mu_group,
            "mu_linf": self.mu_linf,
            "intermediate": dict(self.intermediate),
            "lasso_case2": self.lasso_case2,
        }
        return out


def normal_upper_tail(x):
    """P[N(0,1) > x]; see mtsr.special."""
    return special.normal_upper_tail(x)


def chi_square_quantile(dof, alpha):
    """Smallest t with P[chi^2_dof > t] <= alpha.

    Bisection on the regularized incomplete gamma, absolute tolerance 1e-10.
    Exactness is preferred over speed here; quantiles are computed once per
    sweep cell.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if dof < 1:
        raise ValueError(f"dof must be a positive count, got {dof}")
    hi = max(float(dof), 1.0)
    while special.chi_square_upper_tail(dof, hi) > alpha:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("chi-square quantile bracket expansion failed")
    lo = 0.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if special.chi_square_upper_tail(dof, mid) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambda_lasso(config):
    """sigma * sqrt(2 ln(2 k (p-s) / (sqrt(2 pi) alpha')))."""
    sigma = effective_sigma(config)
    if config.p <= config.s:
        raise CalibrationInvalid("lambda_lasso requires p > s")
    arg = 2.0 * math.log(2.0 * config.k * (config.p - config.s) / (SQRT_2PI * config.alpha_prime))
    if arg < 1.0:
        raise CalibrationInvalid(
            f"lasso tail bound needs 2 ln(2k(p-s)/(sqrt(2 pi) alpha')) >= 1, got {arg:.6g}")
    return sigma * math.sqrt(arg)


def lambda_group_l2(config):
    """Chi-square quantile threshold t_{k, alpha'/(p-s)} * sigma^2, squared units."""
    if config.p <= config.s:
        raise CalibrationInvalid("lambda_group_l2 requires p > s")
    sigma = effective_sigma(config)
    t = chi_square_quantile(config.k, config.alpha_prime / (config.p - config.s))
    return t * sigma * sigma


def lambda_group_linf(config):
    """k * sigma * sqrt(2 ln(k (p-s) / alpha'))."""
    if config.p <= config.s:
        raise CalibrationInvalid("lambda_group_linf requires p > s")
    sigma = effective_sigma(config)
    ratio = config.k * (config.p - config.s) / config.alpha_prime
    if ratio <= 1.0:
        raise CalibrationInvalid(f"l1/linf threshold needs k(p-s)/alpha' > 1, got {ratio:.6g}")
    return config.k * sigma * math.sqrt(2.0 * math.log(ratio))


def theorem2_constants(config):
    """(C_kps, r): the lasso recovery exponent pieces.

    C_kps = ln(2(p-s) / (sqrt(2 pi) alpha')) / ln k and
    r = (sqrt(1 + C_kps) - sqrt(1 - beta))^2.
    """
    if config.k < 2:
        raise CalibrationInvalid("lasso signal scale needs k >= 2 so that ln k > 0")
    if config.p <= config.s:
        raise CalibrationInvalid("theorem2_constants requires p > s")
    c_kps = math.log(2.0 * (config.p - config.s) / (SQRT_2PI * config.alpha_prime)) / math.log(config.k)
    r = (math.sqrt(1.0 + c_kps) - math.sqrt(1.0 - config.beta)) ** 2
    return c_kps, r


def mu_lasso(config):
    """Signal scale sigma * sqrt(2 (r + 0.001) ln k), the simulation form."""
    _, r = theorem2_constants(config)
    return effective_sigma(config) * math.sqrt(2.0 * (r + 0.001) * math.log(config.k))


def _group_log_term(config, with_2e):
    num = (2.0 * config.s - config.delta_prime) * (config.p - config.s)
    if with_2e:
        num *= 2.0 * math.e
    return math.log(num / (config.alpha_prime * config.delta_prime))


def mu_group(config, with_2e=False):
    """Group-l2 signal scale; the default drops the 2e factor (simulation form)."""
    if config.s < 1:
        raise CalibrationInvalid("group signal scale needs s >= 1")
    c = theorem3_c(config)
    if c >= 1.0:
        raise CalibrationInvalid(
            f"group-l2 activation bound is vacuous: c = {c:.6g} >= 1")
    sigma = effective_sigma(config)
    k_term = float(config.k) ** (-0.5 + config.beta) / (1.0 - c)
    return sigma * math.sqrt(2.0 * (math.sqrt(5.0) + 4.0)) * math.sqrt(k_term) \
        * math.sqrt(_group_log_term(config, with_2e))


def linf_tau(config):
    """tau = sigma sqrt(2 k ln((2s - delta')/delta')) / lambda_linf."""
    if config.s < 1:
        raise CalibrationInvalid("l1/linf signal scale needs s >= 1")
    lam = lambda_group_linf(config)
    sigma = effective_sigma(config)
    return sigma * math.sqrt(2.0 * config.k * math.log(
        (2.0 * config.s - config.delta_prime) / config.delta_prime)) / lam


def mu_linf(config):
    """l1/linf signal scale ((1 + tau) / (1 - c)) k^(beta - 1) lambda."""
    c = theorem3_c(config)
    if c >= 1.0:
        raise CalibrationInvalid(
            f"l1/linf activation bound is vacuous: c = {c:.6g} >= 1")
    lam = lambda_group_linf(config)
    tau = linf_tau(config)
    return (1.0 + tau) / (1.0 - c) * float(config.k) ** (config.beta - 1.0) * lam


def lasso_case2_applies(config):
    """Medium-task-count regime flag: k^(1-beta)/2 >= ln(s/delta')."""
    if config.s < 1:
        return False
    return float(config.k) ** (1.0 - config.beta) / 2.0 >= math.log(config.s / config.delta_prime)


def calibrate(config):
    """Full CalibrationReport; raises CalibrationInvalid outside validity regions."""
    c_kps, r = theorem2_constants(config)
    c = theorem3_c(config)
    sigma = effective_sigma(config)
    t = chi_square_quantile(config.k, config.alpha_prime / (config.p - config.s))
    report = CalibrationReport(
        lambda_lasso=lambda_lasso(config),
        lambda_group_sq=t * sigma * sigma,
        lambda_linf=lambda_group_linf(config),
        mu_lasso=mu_lasso(config),
        mu_group=mu_group(config),
        mu_linf=mu_linf(config),
        intermediate={
            "r": r,
            "C_kps": c_kps,
            "c": c,
            "tau": linf_tau(config),
            "t_quantile": t,
            "mu_group_thm3": mu_group(config, with_2e=True),
        },
        lasso_case2=lasso_case2_applies(config),
    )
    return report
