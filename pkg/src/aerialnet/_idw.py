"""Inverse-distance weighting (exponent 2) in the linear power domain."""

import math

import numpy as np

from ._accel import njit, pick


# Weights are (d_min / d)^2 rather than 1 / d^2: identical after normalisation,
# but immune to underflow of d^2 and overflow of 1 / d^2 at tiny separations.


@njit
def _idw_loop(qx, qy, rx, ry, rssi_dbm):
    n_q = qx.shape[0]
    n_r = rx.shape[0]
    lo = rssi_dbm.min()
    hi = rssi_dbm.max()
    mw = np.empty(n_r)
    for r in range(n_r):
        mw[r] = 10.0 ** (rssi_dbm[r] / 10.0)
    d = np.empty(n_r)
    out = np.empty(n_q)
    for q in range(n_q):
        n_hit = 0
        hit_sum = 0.0
        hit_idx = -1
        dmin = np.inf
        for r in range(n_r):
            d[r] = math.hypot(qx[q] - rx[r], qy[q] - ry[r])
            if d[r] == 0.0:
                n_hit += 1
                hit_sum += mw[r]
                hit_idx = r
            elif d[r] < dmin:
                dmin = d[r]
        if n_hit == 1:
            out[q] = rssi_dbm[hit_idx]
            continue
        if n_hit > 1:
            val = 10.0 * math.log10(hit_sum / n_hit)
        else:
            num = 0.0
            den = 0.0
            for r in range(n_r):
                ratio = dmin / d[r]
                w = ratio * ratio
                num += w * mw[r]
                den += w
            val = 10.0 * math.log10(num / den)
        out[q] = min(max(val, lo), hi)
    return out


def _idw_np(qx, qy, rx, ry, rssi_dbm, chunk=4096):
    lo, hi = rssi_dbm.min(), rssi_dbm.max()
    mw = 10.0 ** (rssi_dbm / 10.0)
    out = np.empty(qx.shape[0])
    for s in range(0, qx.shape[0], chunk):
        d = np.hypot(qx[s:s + chunk, None] - rx[None, :], qy[s:s + chunk, None] - ry[None, :])
        hit = d == 0.0
        n_hit = hit.sum(axis=1)
        dmin = np.where(hit, np.inf, d).min(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(hit, 0.0, (dmin / d) ** 2)
            val = 10.0 * np.log10((w @ mw) / w.sum(axis=1))
            hit_val = 10.0 * np.log10((hit * mw).sum(axis=1) / n_hit)
        exact = rssi_dbm[np.argmax(hit, axis=1)]
        val = np.where(n_hit == 1, exact,
                       np.clip(np.where(n_hit > 1, hit_val, val), lo, hi))
        out[s:s + chunk] = val
    return out


idw = pick(_idw_loop, _idw_np)
