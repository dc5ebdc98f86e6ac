"""High-precision reference implementations used only by the tests.

Everything here is computed with mpmath at 40 significant digits and shares
no code with the library.
"""
from __future__ import annotations

import mpmath as mp

mp.mp.dps = 40


def ncdf(x) -> mp.mpf:
    return mp.ncdf(mp.mpf(x))


def npdf(x) -> mp.mpf:
    return mp.npdf(mp.mpf(x))


def nquantile(u) -> mp.mpf:
    u = mp.mpf(u)
    if u > mp.mpf(0.5):
        return -nquantile(1 - u)
    if u > mp.mpf(10) ** -15:
        return -mp.sqrt(2) * mp.erfinv(1 - 2 * u)
    # deep lower tail: Newton on the CDF itself, which keeps full relative precision
    x = -mp.sqrt(-2 * mp.log(u))
    for _ in range(100):
        step = (mp.ncdf(x) - u) / mp.npdf(x)
        x -= step
        if abs(step) < mp.mpf(10) ** -35 * abs(x):
            break
    return x


def bs_call(S, K, sigma, tau) -> mp.mpf:
    S, K, sigma, tau = map(mp.mpf, (S, K, sigma, tau))
    if tau == 0:
        return max(S - K, mp.mpf(0))
    s = sigma * mp.sqrt(tau)
    d1 = (mp.log(S / K) + s * s / 2) / s
    return S * mp.ncdf(d1) - K * mp.ncdf(d1 - s)


def bs_covered_call(S, K, sigma, tau) -> mp.mpf:
    return mp.mpf(S) - bs_call(S, K, sigma, tau)


def rmm_phi(r1, r2, K, s) -> mp.mpf:
    """RMM-01 trading function ``R2 - K N(Ninv(1 - R1) - s)``."""
    r1, r2, K, s = map(mp.mpf, (r1, r2, K, s))
    if s == 0:
        return r2 - K * (1 - r1)
    return r2 - K * mp.ncdf(nquantile(1 - r1) - s)


def bisect(f, lo, hi, iters: int = 120) -> mp.mpf:
    """Root of a monotone ``f`` on ``[lo, hi]`` by plain bisection."""
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    flo = f(lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= mp.mpf(10) ** (-30) * max(abs(hi), 1):
            break
    return (lo + hi) / 2


def rmm_swap_out(r1, r2, k, K, s, gamma, delta, tendered: int) -> mp.mpf:
    """Amount received for a valid trade, found by bisection on ``phi(R + g*delta - lam) = k``."""
    r1, r2, k, K, gamma, delta = map(mp.mpf, (r1, r2, k, K, gamma, delta))
    if tendered == 0:
        q1 = r1 + gamma * delta
        return bisect(lambda lam: rmm_phi(q1, r2 - lam, K, s) - k, 0, r2)
    q2 = r2 + gamma * delta
    return bisect(lambda lam: rmm_phi(r1 - lam, q2, K, s) - k, 0, r1 * (1 - mp.mpf(10) ** -25))
