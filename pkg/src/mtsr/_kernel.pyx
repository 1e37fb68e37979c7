# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled generation kernel: Philox4x32-10 + Acklam inverse normal CDF.

Must stay bit-identical to mtsr._pykernel; see the notes there before touching
any arithmetic.  The build disables FMA contraction for the same reason.
"""

from libc.math cimport log, sqrt, fabs
from libc.stdint cimport uint8_t, uint32_t, uint64_t

import numpy as np

COMPILED = True

cdef uint32_t M0 = 0xD2511F53u
cdef uint32_t M1 = 0xCD9E8D57u
cdef uint32_t W0 = 0x9E3779B9u
cdef uint32_t W1 = 0xBB67AE85u

cdef double A0 = -3.969683028665376e+01
cdef double A1 = 2.209460984245205e+02
cdef double A2 = -2.759285104469687e+02
cdef double A3 = 1.383577518672690e+02
cdef double A4 = -3.066479806614716e+01
cdef double A5 = 2.506628277459239e+00
cdef double B0 = -5.447609879822406e+01
cdef double B1 = 1.615858368580409e+02
cdef double B2 = -1.556989798598866e+02
cdef double B3 = 6.680131188771972e+01
cdef double B4 = -1.328068155288572e+01
cdef double C0 = -7.784894002430293e-03
cdef double C1 = -3.223964580411365e-01
cdef double C2 = -2.400758277161838e+00
cdef double C3 = -2.549732539343734e+00
cdef double C4 = 4.374664141464968e+00
cdef double C5 = 2.938163982698783e+00
cdef double D0 = 7.784695709041462e-03
cdef double D1 = 3.224671290700398e-01
cdef double D2 = 2.445134137142996e+00
cdef double D3 = 3.754408661907416e+00
cdef double P_LOW = 0.02425


cdef inline void philox_block(uint32_t c0, uint32_t c1, uint32_t c2, uint32_t c3,
                              uint32_t k0, uint32_t k1, uint32_t* out) noexcept nogil:
    cdef int r
    cdef uint64_t p0, p1
    cdef uint32_t n0, n1, n2, n3
    for r in range(10):
        p0 = (<uint64_t>M0) * c0
        p1 = (<uint64_t>M1) * c2
        n0 = (<uint32_t>(p1 >> 32)) ^ c1 ^ k0
        n1 = <uint32_t>p1
        n2 = (<uint32_t>(p0 >> 32)) ^ c3 ^ k1
        n3 = <uint32_t>p0
        c0 = n0
        c1 = n1
        c2 = n2
        c3 = n3
        k0 = k0 + W0
        k1 = k1 + W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline double inv_norm_cdf(double u) noexcept nogil:
    cdef double q, r
    if u < P_LOW:
        q = sqrt(-2.0 * log(u))
        return (((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5) / \
               ((((D0 * q + D1) * q + D2) * q + D3) * q + 1.0)
    if u > 1.0 - P_LOW:
        q = sqrt(-2.0 * log(1.0 - u))
        return -((((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5) /
                 ((((D0 * q + D1) * q + D2) * q + D3) * q + 1.0))
    q = u - 0.5
    r = q * q
    return (((((A0 * r + A1) * r + A2) * r + A3) * r + A4) * r + A5) * q / \
           (((((B0 * r + B1) * r + B2) * r + B3) * r + B4) * r + 1.0)


cdef inline double entry_value(uint64_t seed, Py_ssize_t i, Py_ssize_t j,
                               Py_ssize_t s, double eps, double sigma, double mu,
                               uint8_t* xi_out) noexcept nogil:
    cdef uint32_t words[4]
    cdef uint64_t noise_bits, bern_bits
    cdef double u_noise, u_bern, mean
    philox_block(<uint32_t>j, <uint32_t>i, 0u, 0u,
                 <uint32_t>seed, <uint32_t>(seed >> 32), words)
    noise_bits = (<uint64_t>words[0]) | ((<uint64_t>words[1]) << 32)
    bern_bits = (<uint64_t>words[2]) | ((<uint64_t>words[3]) << 32)
    u_noise = (<double>(noise_bits >> 12)) * 2.0 ** -52 + 2.0 ** -53
    u_bern = (<double>(bern_bits >> 11)) * 2.0 ** -53
    mean = 0.0
    xi_out[0] = 0
    if i < s and u_bern < eps:
        mean = mu
        xi_out[0] = 1
    return mean + sigma * inv_norm_cdf(u_noise)


def philox4x32(c0, c1, c2, c3, k0, k1):
    """One Philox4x32-10 block; exposed for known-answer tests."""
    cdef uint32_t out[4]
    philox_block(<uint32_t>(c0 & 0xFFFFFFFF), <uint32_t>(c1 & 0xFFFFFFFF),
                 <uint32_t>(c2 & 0xFFFFFFFF), <uint32_t>(c3 & 0xFFFFFFFF),
                 <uint32_t>(k0 & 0xFFFFFFFF), <uint32_t>(k1 & 0xFFFFFFFF), out)
    return out[0], out[1], out[2], out[3]


def fill(seed, p, k, s, eps, sigma, mu, out_y, out_xi):
    """Fill observations (p, k) and activations (p, k) for one instance."""
    cdef double[:, ::1] y = out_y
    cdef uint8_t[:, ::1] xi = out_xi
    cdef uint64_t sd = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t pp = p, kk = k, ss = s
    cdef double eps_c = eps, sigma_c = sigma, mu_c = mu
    cdef Py_ssize_t i, j
    cdef uint8_t flag
    with nogil:
        for i in range(pp):
            for j in range(kk):
                y[i, j] = entry_value(sd, i, j, ss, eps_c, sigma_c, mu_c, &flag)
                xi[i, j] = flag


def row_stats(seed, p, k, s, eps, sigma, mu, out_maxabs, out_sumsq, out_sumabs):
    """Per-row max |Y|, sum Y^2, sum |Y| computed without materializing Y."""
    cdef double[::1] mx = out_maxabs
    cdef double[::1] sq = out_sumsq
    cdef double[::1] sa = out_sumabs
    cdef uint64_t sd = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t pp = p, kk = k, ss = s
    cdef double eps_c = eps, sigma_c = sigma, mu_c = mu
    cdef Py_ssize_t i, j
    cdef double v, av, m, q, a
    cdef uint8_t flag
    with nogil:
        for i in range(pp):
            m = 0.0
            q = 0.0
            a = 0.0
            for j in range(kk):
                v = entry_value(sd, i, j, ss, eps_c, sigma_c, mu_c, &flag)
                av = fabs(v)
                if av > m:
                    m = av
                q = q + v * v
                a = a + av
            mx[i] = m
            sq[i] = q
            sa[i] = a
