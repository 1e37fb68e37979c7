"""Generation kernel: Philox correctness, backend equivalence, normal accuracy."""

import math
import os

import numpy as np
import pytest
from scipy.special import ndtri

from mtsr import _pykernel
from mtsr.backend import COMPILED, derive_seed, kernel

# Official Philox4x32-10 known-answer vectors (counter, key) -> output words.
PHILOX_KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2,
     (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("counter,key,expected", PHILOX_KAT)
def test_philox_known_answers_pure(counter, key, expected):
    assert _pykernel.philox4x32(*counter, *key) == expected


@pytest.mark.skipif(not COMPILED, reason="compiled kernel not built")
@pytest.mark.parametrize("counter,key,expected", PHILOX_KAT)
def test_philox_known_answers_compiled(counter, key, expected):
    from mtsr import _kernel
    assert _kernel.philox4x32(*counter, *key) == expected


def test_derive_seed_is_deterministic_and_spreads():
    seeds = {derive_seed(7, a, b) for a in range(20) for b in range(20)}
    assert len(seeds) == 400
    assert derive_seed(7, 3, 5) == derive_seed(7, 3, 5)
    assert derive_seed(7, 3, 5) != derive_seed(8, 3, 5)
    assert all(0 <= s < 2**64 for s in seeds)


def test_inverse_normal_cdf_accuracy():
    rng = np.random.default_rng(1)
    u = np.concatenate([rng.random(100000),
                        [1e-15, 1e-9, 0.02425, 0.0242500001, 0.5, 0.97575, 1 - 1e-12]])
    u = u[(u > 0) & (u < 1)]
    x = _pykernel.inverse_normal_cdf(u)
    ref = ndtri(u)
    assert np.max(np.abs(x - ref) / (1.0 + np.abs(ref))) < 2e-9


def test_unit_interval_mapping_is_open():
    bits = np.array([0, 2**64 - 1, 2**63, 12345], dtype=np.uint64)
    u = _pykernel._bits_to_unit(bits)
    assert np.all(u > 0.0) and np.all(u < 1.0)


def _fill_pair(mod, seed, p, k, s, eps, sigma, mu):
    y = np.empty((p, k))
    xi = np.empty((p, k), dtype=np.uint8)
    mod.fill(seed, p, k, s, eps, sigma, mu, y, xi)
    return y, xi


@pytest.mark.skipif(not COMPILED, reason="compiled kernel not built")
@pytest.mark.parametrize("seed,eps,sigma,mu", [
    (12345, 0.3, 0.5, 2.0),
    (2**63 + 17, 1.0, 0.2887, 0.0),
    (999, 0.006, 1.0, 7.5),
])
def test_backends_fill_bit_identical(seed, eps, sigma, mu):
    from mtsr import _kernel
    p, k, s = 48, 300, 5
    y1, xi1 = _fill_pair(_kernel, seed, p, k, s, eps, sigma, mu)
    y2, xi2 = _fill_pair(_pykernel, seed, p, k, s, eps, sigma, mu)
    assert np.array_equal(y1, y2)
    assert np.array_equal(xi1, xi2)


@pytest.mark.parametrize("mod_name", ["active", "pure"])
def test_row_stats_consistent_with_fill(mod_name):
    mod = kernel if mod_name == "active" else _pykernel
    seed, p, k, s, eps, sigma, mu = 4242, 40, 250, 6, 0.4, 0.7, 3.0
    y, _ = _fill_pair(mod, seed, p, k, s, eps, sigma, mu)
    mx = np.empty(p)
    sq = np.empty(p)
    sa = np.empty(p)
    mod.row_stats(seed, p, k, s, eps, sigma, mu, mx, sq, sa)
    assert np.array_equal(mx, np.abs(y).max(axis=1))
    assert np.allclose(sq, (y * y).sum(axis=1), rtol=1e-12, atol=0)
    assert np.allclose(sa, np.abs(y).sum(axis=1), rtol=1e-12, atol=0)


def test_noise_moments_match_standard_normal():
    p, k = 128, 1024
    y, _ = _fill_pair(kernel, 77, p, k, 0, 0.5, 1.0, 0.0)
    n = p * k
    assert abs(y.mean()) < 4.0 / math.sqrt(n)
    assert abs(y.var() - 1.0) < 4.0 * math.sqrt(2.0 / n)


def test_bernoulli_rate_matches_epsilon():
    eps = 0.37
    p, k = 200, 500
    _, xi = _fill_pair(kernel, 31337, p, k, p, eps, 1.0, 1.0)
    rate = xi.mean()
    se = math.sqrt(eps * (1 - eps) / (p * k))
    assert abs(rate - eps) < 4 * se


def test_backend_env_override_selects_pure():
    import subprocess
    import sys
    code = ("import mtsr.backend as b; "
            "assert b.COMPILED is False; "
            "assert b.kernel is b.pure_kernel")
    proc = subprocess.run([sys.executable, "-c", code],
                          env={**os.environ, "MTSR_BACKEND": "pure"},
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_backend_env_rejects_unknown_value():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-c", "import mtsr.backend"],
                          env={**os.environ, "MTSR_BACKEND": "quantum"},
                          capture_output=True, text=True)
    assert proc.returncode != 0
    assert "MTSR_BACKEND" in proc.stderr
