"""Minimax lower bound and the tail/binomial bounds used as numeric oracles."""

import math
from dataclasses import dataclass
from typing import NamedTuple

from . import special
from .model import effective_sigma


@dataclass(frozen=True)
class LowerBoundReport:
    """Minimax signal threshold: below mu_min no procedure can recover the
    support with error probability below (1 - alpha) / 2."""

    mu_min: float
    u: float
    valid: bool
    alpha: float


def mu_lower_bound(config, alpha):
    """Evaluate the lower-bound formula.

    u = ln(1 + alpha^2 (p - s + 1) / 2) / (2 k^(1 - 2 beta)) and
    mu_min^2 = ln(1 + u + sqrt(2u + u^2)) sigma^2.  The report is flagged
    invalid (rather than raising) when alpha is outside (0, 1/2) or
    k^(-beta) u >= 1, the preconditions of the statement.
    """
    if config.p <= config.s:
        raise ValueError("lower bound requires p > s")
    k = float(config.k)
    u = math.log(1.0 + alpha * alpha * (config.p - config.s + 1) / 2.0) \
        / (2.0 * k ** (1.0 - 2.0 * config.beta))
    mu_sq = math.log(1.0 + u + math.sqrt(2.0 * u + u * u))
    sigma = effective_sigma(config)
    valid = (0.0 < alpha < 0.5) and (k ** (-config.beta) * u < 1.0)
    return LowerBoundReport(mu_min=sigma * math.sqrt(mu_sq), u=u, valid=valid, alpha=alpha)


def pi_k(mu, epsilon, sigma, lam):
    """Per-entry exceedance probability of the mixture row model.

    (1 - eps) P[|N(0, sigma^2)| > lam] + eps P[|N(mu, sigma^2)| > lam].
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if lam <= 0.0:
        return 1.0
    x = lam / sigma
    noise = 2.0 * special.normal_upper_tail(x)
    signal = special.normal_upper_tail((lam - mu) / sigma) + special.normal_upper_tail((lam + mu) / sigma)
    return (1.0 - epsilon) * noise + epsilon * signal


class BinomialZeroProb(NamedTuple):
    exact: float
    bound: float


def binomial_zero_prob(k, pi):
    """P[Bin(k, pi) = 0] exactly, alongside the exp(-k pi) bound."""
    if not 0.0 <= pi <= 1.0:
        raise ValueError(f"pi must lie in [0, 1], got {pi}")
    return BinomialZeroProb(exact=(1.0 - pi) ** k, bound=math.exp(-k * pi))


class ChernoffBounds(NamedTuple):
    lower: float
    upper: float


def chernoff_lower_tail(k, pi, t):
    """Chernoff bounds for Bin(k, pi): P[z <= k pi - t] and P[z >= k pi + t].

    lower = exp(-t^2 / (2 k pi)), upper = exp(-t^2 / (2 (k pi + t/3))).
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0.0:
        return ChernoffBounds(lower=1.0, upper=1.0)
    kpi = k * pi
    lower = 0.0 if kpi == 0.0 else math.exp(-t * t / (2.0 * kpi))
    upper = math.exp(-t * t / (2.0 * (kpi + t / 3.0)))
    return ChernoffBounds(lower=lower, upper=upper)


def theorem3_c(config):
    """c = sqrt(2 ln(2s / delta') / k^(1 - beta)), shared by both group bounds."""
    if config.s < 1:
        raise ValueError("c is defined for s >= 1")
    if not 0.0 < config.delta_prime < 1.0:
        raise ValueError(f"delta_prime must lie in (0, 1), got {config.delta_prime}")
    return math.sqrt(2.0 * math.log(2.0 * config.s / config.delta_prime)
                     / float(config.k) ** (1.0 - config.beta))
