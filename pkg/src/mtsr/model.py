"""Problem parameters and synthetic data generation.

The observation model: a p x k matrix whose first s rows (the support) have
entries drawn as N(xi * mu, sigma^2) with xi ~ Bernoulli(epsilon), and whose
remaining rows are pure N(0, sigma^2) noise, sigma = sigma0 / sqrt(n).
Generation is a pure function of (config, mu_value, seed): every entry is
keyed individually in a counter-based RNG, so output is independent of
scheduling and thread count.
"""

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernel

CONFIG_FIELDS = ("p", "k", "s", "n", "sigma0", "beta", "epsilon",
                 "alpha_prime", "delta_prime")


@dataclass(frozen=True)
class SupportSet:
    """Strictly increasing row indices in [0, p)."""

    indices: tuple
    p: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("support indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.p):
            raise ValueError(f"support indices must lie in [0, {self.p})")

    @classmethod
    def from_iterable(cls, indices, p):
        return cls(tuple(sorted(set(int(i) for i in indices))), p)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i):
        return i in self.indices


@dataclass(frozen=True)
class ProblemConfig:
    """Scalar parameters of one model instance.

    epsilon defaults to k^(-beta); passing it explicitly is allowed for
    ablations and then takes precedence over the beta-derived value.
    """

    p: int
    k: int
    s: int
    n: int
    sigma0: float
    beta: float
    epsilon: float = None
    alpha_prime: float = 0.01
    delta_prime: float = 0.01

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be a positive count, got {self.p}")
        if self.k < 1:
            raise ValueError(f"k must be a positive count, got {self.k}")
        if not 0 <= self.s <= self.p:
            raise ValueError(f"s must satisfy 0 <= s <= p, got s={self.s}, p={self.p}")
        if self.n < 1:
            raise ValueError(f"n must be a positive count, got {self.n}")
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", float(self.k) ** (-self.beta))
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        for name in ("alpha_prime", "delta_prime"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.alpha_prime + self.delta_prime >= 1.0:
            raise ValueError("total error budget alpha_prime + delta_prime must be < 1")

    @property
    def alpha(self):
        """Total error budget alpha' + delta'."""
        return self.alpha_prime + self.delta_prime

    def to_json_dict(self):
        return {name: getattr(self, name) for name in CONFIG_FIELDS}

    @classmethod
    def from_json_dict(cls, data):
        unknown = set(data) - set(CONFIG_FIELDS)
        if unknown:
            raise ValueError(f"unknown config key: {sorted(unknown)[0]!r}")
        missing = set(CONFIG_FIELDS) - {"epsilon"} - set(data)
        if missing:
            raise ValueError(f"missing config key: {sorted(missing)[0]!r}")
        return cls(**{k: data[k] for k in CONFIG_FIELDS if k in data})


def experiment_dimensions(p):
    """Derived cell dimensions: k = floor(p log2 p), s = floor(log2 p), n = floor(0.1 p).

    n is floored (and clamped to >= 1), which errs on the side of a larger
    noise level when 0.1 p is fractional.
    """
    if p < 2:
        raise ValueError(f"p must be at least 2, got {p}")
    log2p = math.log2(p)
    return int(p * log2p), int(log2p), max(1, int(0.1 * p))


def config_for_cell(p, beta, alpha_prime=0.01, delta_prime=0.01, sigma0=1.0):
    """ProblemConfig for one experiment cell at the standard derived sizes."""
    k, s, n = experiment_dimensions(p)
    return ProblemConfig(p=p, k=k, s=s, n=n, sigma0=sigma0, beta=beta,
                         alpha_prime=alpha_prime, delta_prime=delta_prime)


def effective_sigma(config):
    """Per-entry noise level sigma0 / sqrt(n)."""
    return config.sigma0 / math.sqrt(config.n)


@dataclass
class Instance:
    """One generated dataset: means M, activations xi, observations Y."""

    means: np.ndarray
    support: SupportSet
    activations: np.ndarray
    observations: np.ndarray
    seed: int

    def validate(self):
        p, k = self.observations.shape
        if self.means.shape != (p, k) or self.activations.shape != (p, k):
            raise ValueError("means, activations and observations must share shape")
        if len(self.support) and max(self.support) >= p:
            raise ValueError("support index out of range")
        outside = np.ones(p, dtype=bool)
        outside[list(self.support)] = False
        if self.means[outside].any() or self.activations[outside].any():
            raise ValueError("rows outside the support must be identically zero")
        return self


def generate_instance(config, mu_value, seed):
    """Generate an Instance; identical arguments give bit-identical output.

    The support is the first s row indices (recovery is scored by exact set
    equality, which is permutation invariant, so fixing the support loses no
    generality).
    """
    if mu_value < 0:
        raise ValueError(f"mu_value must be nonnegative, got {mu_value}")
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    p, k, s = config.p, config.k, config.s
    y = np.empty((p, k), dtype=np.float64)
    xi = np.empty((p, k), dtype=np.uint8)
    kernel.fill(seed, p, k, s, config.epsilon, effective_sigma(config), float(mu_value), y, xi)
    means = np.where(xi.astype(bool), float(mu_value), 0.0)
    return Instance(means=means, support=SupportSet(tuple(range(s)), p),
                    activations=xi, observations=y, seed=seed)


def row_activation_counts(instance):
    """Number of active entries per row; zero outside the support."""
    return [int(c) for c in instance.activations.sum(axis=1, dtype=np.int64)]
