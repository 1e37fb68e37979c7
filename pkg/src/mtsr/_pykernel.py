"""Pure numpy fallback for the generation kernel.

This module is the reference semantics for instance generation.  The compiled
extension (``mtsr._kernel``) reimplements the same per-entry recipe in C and
must reproduce it bit for bit, which pins down a few choices here:

* randomness is the Philox4x32-10 counter-based generator, evaluated as a pure
  function of (key, counter) so output never depends on generation order or
  thread count;
* entry (i, j) of an instance uses key = (seed lo32, seed hi32) and counter
  (j, i, 0, 0); output words 0..1 feed the Gaussian draw, words 2..3 feed the
  Bernoulli activation draw;
* uniforms come from the top bits only (u = (bits >> 12) * 2^-52 + 2^-53),
  giving exact dyadic values in (0, 1);
* Gaussians are the Acklam rational approximation of the inverse normal CDF,
  arithmetic-only in the central region; the tail branch takes its log through
  scalar libm (math.log) because numpy's vectorized log is not guaranteed to
  match C's, while +, *, /, sqrt are exact IEEE operations in both.
"""

import math

import numpy as np

_M0 = 0xD2511F53
_M1 = 0xCD9E8D57
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = 0xFFFFFFFF

_U64 = np.uint64
_VM0 = _U64(_M0)
_VM1 = _U64(_M1)
_VW0 = _U64(_W0)
_VW1 = _U64(_W1)
_VMASK = _U64(_MASK32)
_SH32 = _U64(32)

# Acklam's inverse normal CDF coefficients (relative error < 1.2e-9).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425

COMPILED = False


def philox4x32(c0, c1, c2, c3, k0, k1):
    """One Philox4x32-10 block as plain integers; returns 4 uint32 words."""
    c0 &= _MASK32
    c1 &= _MASK32
    c2 &= _MASK32
    c3 &= _MASK32
    k0 &= _MASK32
    k1 &= _MASK32
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> 32) ^ c1 ^ k0), p1 & _MASK32, ((p0 >> 32) ^ c3 ^ k1), p0 & _MASK32
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


def derive_seed(master_seed, a, b):
    """Derive an independent 64-bit stream seed from (master_seed, a, b)."""
    x0, x1, _, _ = philox4x32(a & _MASK32, (a >> 32) & _MASK32,
                              b & _MASK32, (b >> 32) & _MASK32,
                              master_seed & _MASK32, (master_seed >> 32) & _MASK32)
    return x0 | (x1 << 32)


def _philox_blocks(seed, p, k):
    """Philox output words for all p*k entry counters, vectorized."""
    cols = np.arange(k, dtype=np.uint64)
    rows = np.arange(p, dtype=np.uint64)
    c0 = np.broadcast_to(cols[None, :], (p, k)).ravel()
    c1 = np.broadcast_to(rows[:, None], (p, k)).ravel()
    c2 = np.zeros(p * k, dtype=np.uint64)
    c3 = np.zeros(p * k, dtype=np.uint64)
    k0 = _U64(seed & _MASK32)
    k1 = _U64((seed >> 32) & _MASK32)
    for _ in range(10):
        p0 = _VM0 * c0
        p1 = _VM1 * c2
        c0, c1, c2, c3 = (p1 >> _SH32) ^ c1 ^ k0, p1 & _VMASK, (p0 >> _SH32) ^ c3 ^ k1, p0 & _VMASK
        k0 = (k0 + _VW0) & _VMASK
        k1 = (k1 + _VW1) & _VMASK
    return c0, c1, c2, c3


def _bits_to_unit(bits64):
    # 52 random bits plus a half-ulp offset: exact dyadic values in (0, 1).
    return (bits64 >> _U64(12)).astype(np.float64) * 2.0 ** -52 + 2.0 ** -53


def inverse_normal_cdf(u):
    """Acklam's inverse normal CDF, vectorized over a float64 array in (0, 1)."""
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    lo = u < _P_LOW
    hi = u > 1.0 - _P_LOW
    mid = ~(lo | hi)
    if mid.any():
        q = u[mid] - 0.5
        r = q * q
        out[mid] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
                   (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    for mask, tail, sign in ((lo, u, 1.0), (hi, 1.0 - u, -1.0)):
        if mask.any():
            t = tail[mask]
            logs = np.fromiter((math.log(x) for x in t.tolist()), dtype=np.float64, count=t.size)
            q = np.sqrt(-2.0 * logs)
            out[mask] = sign * ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) /
                                ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    return out


def fill(seed, p, k, s, eps, sigma, mu, out_y, out_xi):
    """Fill observation matrix out_y (p, k) and activation matrix out_xi (p, k).

    Rows < s are the support: each entry picks mean mu with probability eps,
    independently of the additive N(0, sigma^2) noise.  Rows >= s are pure
    noise and their activations stay zero.
    """
    x0, x1, x2, x3 = _philox_blocks(seed, p, k)
    noise_bits = x0 | (x1 << _SH32)
    bern_bits = x2 | (x3 << _SH32)
    z = inverse_normal_cdf(_bits_to_unit(noise_bits)).reshape(p, k)
    u_bern = ((bern_bits >> _U64(11)).astype(np.float64) * 2.0 ** -53).reshape(p, k)
    xi = u_bern < eps
    xi[s:, :] = False
    means = np.where(xi, mu, 0.0)
    np.copyto(out_y, means + sigma * z)
    np.copyto(out_xi, xi)


def row_stats(seed, p, k, s, eps, sigma, mu, out_maxabs, out_sumsq, out_sumabs):
    """Per-row max |Y|, sum Y^2 and sum |Y| of the instance keyed by seed."""
    y = np.empty((p, k), dtype=np.float64)
    xi = np.empty((p, k), dtype=np.uint8)
    fill(seed, p, k, s, eps, sigma, mu, y, xi)
    a = np.abs(y)
    np.copyto(out_maxabs, a.max(axis=1))
    np.copyto(out_sumsq, (y * y).sum(axis=1))
    np.copyto(out_sumabs, a.sum(axis=1))
