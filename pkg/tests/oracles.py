"""Independent reference implementations used as test oracles.

These are deliberately naive (explicit loops, arbitrary precision) and share
no code with the package.
"""

import math

import mpmath
import numpy as np


def daubechies_scaling(N, dps=40):
    """Extremal-phase Daubechies scaling filter with ``N`` vanishing moments, normalized to sum 1.

    Spectral factorization: the roots of ``P(y) = sum_k C(N-1+k, k) y**k``
    are mapped to ``z`` with ``y = -(1 - z)**2 / (4 z)`` and the root inside
    the unit circle is kept.
    """
    with mpmath.workdps(dps):
        coeffs = [mpmath.binomial(N - 1 + k, k) for k in range(N)]
        ys = mpmath.polyroots(coeffs[::-1], maxsteps=200, extraprec=2 * dps) if N > 1 else []
        poly = [mpmath.mpf(1)]
        for y in ys:
            # z**2 - (2 - 4y) z + 1 = 0
            b = 2 - 4 * y
            disc = mpmath.sqrt(b * b - 4)
            z1, z2 = (b + disc) / 2, (b - disc) / 2
            z = z1 if abs(z1) < 1 else z2
            poly = _polymul(poly, [mpmath.mpf(1), -z])
        for _ in range(N):
            poly = _polymul(poly, [mpmath.mpf(1), mpmath.mpf(1)])
        poly = [mpmath.re(c) for c in poly]
        total = sum(poly)
        return np.array([float(c / total) for c in poly])


def _polymul(a, b):
    out = [mpmath.mpf(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def circular_filter_naive(y, v):
    T = len(y)
    return np.array([sum(v[l] * y[(t - l) % T] for l in range(len(v))) for t in range(T)])


def z_naive(v, y):
    """``z_t = sum_{i<j} v_i v_j y_{t-i} y_{t-j}`` with circular indexing."""
    T = len(y)
    L = len(v)
    out = np.zeros(T)
    for t in range(T):
        s = 0.0
        for i in range(L):
            for j in range(i + 1, L):
                s += v[i] * v[j] * y[(t - i) % T] * y[(t - j) % T]
        out[t] = s
    return out


def a_bruteforce(f1, f2):
    """``4 sum_s sum_{i<j} f1_i f1_j f2_{i-s} f2_{j-s}``; out-of-range indices contribute zero."""
    L1, L2 = len(f1), len(f2)

    def at(f, k):
        return f[k] if 0 <= k < len(f) else 0.0

    total = 0.0
    for s in range(-(max(L1, L2) - 1), max(L1, L2)):
        for i in range(L1):
            for j in range(i + 1, L1):
                total += f1[i] * f1[j] * at(f2, i - s) * at(f2, j - s)
    return 4.0 * total


def chi2_sf_mp(x, df):
    with mpmath.workdps(30):
        return float(mpmath.gammainc(mpmath.mpf(df) / 2, mpmath.mpf(x) / 2, mpmath.inf, regularized=True))


def normal_sf_mp(x):
    with mpmath.workdps(30):
        return float(mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)) / 2)


def acf_naive(y, K):
    T = len(y)
    mu = sum(y) / T
    c0 = sum((v - mu) ** 2 for v in y)
    return [sum((y[t] - mu) * (y[t - k] - mu) for t in range(k, T)) / c0 for k in range(1, K + 1)]


def nw_naive(x, B, center=True):
    T = len(x)
    if center:
        mu = sum(x) / T
        x = [v - mu for v in x]
    total = sum(v * v for v in x) / T
    for k in range(1, B + 1):
        w = 1.0 - k / (B + 1.0)
        total += 2.0 * w * sum(x[t] * x[t - k] for t in range(k, T)) / T
    return total


def aq_naive(y, q=2.4, d=None):
    """Automatic robust portmanteau, written from the definition with explicit loops."""
    T = len(y)
    d = d if d is not None else min(20, T // 4)
    mu = sum(y) / T
    x = [v - mu for v in y]
    rho2 = []
    for k in range(1, d + 1):
        prods = [x[t] * x[t - k] for t in range(k, T)]
        gamma = sum(prods) / (T - k)
        tau = sum(p * p for p in prods) / (T - k)
        rho2.append(gamma * gamma / tau)
    big = max(math.sqrt(T * r) for r in rho2) > math.sqrt(q * math.log(T))
    best, best_p, Q = -math.inf, 0, 0.0
    stats = []
    for p in range(1, d + 1):
        Q += T * rho2[p - 1]
        stats.append(Q)
        pen = 2.0 * p if big else p * math.log(T)
        if Q - pen > best:
            best, best_p = Q - pen, p
    return stats[best_p - 1], best_p
