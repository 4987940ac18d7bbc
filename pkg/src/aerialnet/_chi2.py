"""Chi-square tail kernels for the complex energy detector.

With noise power normalised to one, ``xi = sum |y_i|^2`` over ``n`` complex
samples is Gamma(n, 1) under noise only, so its tail is the regularised upper
incomplete gamma function at integer order::

    Q(n, x) = exp(-x) * sum_{k<n} x^k / k!

Under a deterministic signal with per-sample SNR ``s`` the statistic ``2 xi``
is noncentral chi-square with ``2n`` degrees of freedom and noncentrality
``2 n s``; its tail is the Poisson(``n s``) mixture of ``Q(n + i, x)``.
"""

import math

import numpy as np

from ._accel import njit, pick

_WEIGHT_FLOOR = 1e-20


@njit
def _gamma_sf_loop(n, x):
    if x <= 0.0:
        return 1.0
    lx = math.log(x)
    s = 0.0
    for k in range(n):
        s += math.exp(-x + k * lx - math.lgamma(k + 1.0))
    return min(s, 1.0)


@njit
def _ncx_sf_loop(n, x, a):
    if x <= 0.0:
        return 1.0
    q = _gamma_sf_loop(n, x)
    if a <= 0.0:
        return q
    lx = math.log(x)
    la = math.log(a)
    imax = int(a + 40.0 * math.sqrt(a) + 100.0)
    total = 0.0
    for i in range(imax):
        w = math.exp(-a + i * la - math.lgamma(i + 1.0))
        total += w * min(q, 1.0)
        k = n + i
        q += math.exp(-x + k * lx - math.lgamma(k + 1.0))
        if i > a and w < _WEIGHT_FLOOR:
            break
    return min(total, 1.0)


def _log_factorials(m):
    out = np.zeros(m + 1)
    np.cumsum(np.log(np.arange(1, m + 1, dtype=np.float64)), out=out[1:])
    return out


def _gamma_sf_np(n, x):
    if x <= 0.0:
        return 1.0
    k = np.arange(n, dtype=np.float64)
    terms = np.exp(-x + k * math.log(x) - _log_factorials(n - 1)[:n])
    return float(min(terms.sum(), 1.0))


def _ncx_sf_np(n, x, a):
    if x <= 0.0:
        return 1.0
    if a <= 0.0:
        return _gamma_sf_np(n, x)
    imax = int(a + 40.0 * math.sqrt(a) + 100.0)
    lf = _log_factorials(n + imax)
    k = np.arange(n + imax, dtype=np.float64)
    cum = np.cumsum(np.exp(-x + k * math.log(x) - lf[: n + imax]))
    q = np.minimum(cum[n - 1 : n - 1 + imax], 1.0)  # Q(n + i, x), i = 0..imax-1
    i = np.arange(imax, dtype=np.float64)
    w = np.exp(-a + i * math.log(a) - lf[:imax])
    return float(min(np.dot(w, q), 1.0))


gamma_sf_int = pick(_gamma_sf_loop, _gamma_sf_np)
ncx_sf = pick(_ncx_sf_loop, _ncx_sf_np)
