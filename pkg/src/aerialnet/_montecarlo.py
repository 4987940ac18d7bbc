"""Monte Carlo kernels for hard-decision fusion and energy detection.

Rule codes: 0 = OR, 1 = AND.
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._accel import NUMBA_ENABLED, njit
from ._rng import trial_key, trial_keys_np, uniform, uniforms_np

RULE_OR = 0
RULE_AND = 1


@njit
def _fusion_counts_loop(key_h1, key_h0, trials, k_nodes, p_d, p_fa, rule):
    misses = 0
    false_alarms = 0
    for t in range(trials):
        tk1 = trial_key(key_h1, t)
        tk0 = trial_key(key_h0, t)
        any1 = False
        all1 = True
        any0 = False
        all0 = True
        for j in range(k_nodes):
            d1 = uniform(tk1, j) < p_d
            d0 = uniform(tk0, j) < p_fa
            any1 = any1 or d1
            all1 = all1 and d1
            any0 = any0 or d0
            all0 = all0 and d0
        if rule == 0:
            g1, g0 = any1, any0
        else:
            g1, g0 = all1, all0
        if not g1:
            misses += 1
        if g0:
            false_alarms += 1
    return misses, false_alarms


def _fusion_chunk_np(key_h1, key_h0, start, stop, k_nodes, p_d, p_fa, rule):
    d1 = uniforms_np(trial_keys_np(key_h1, start, stop), k_nodes) < p_d
    d0 = uniforms_np(trial_keys_np(key_h0, start, stop), k_nodes) < p_fa
    if rule == RULE_OR:
        g1, g0 = d1.any(axis=1), d0.any(axis=1)
    else:
        g1, g0 = d1.all(axis=1), d0.all(axis=1)
    return int(np.count_nonzero(~g1)), int(np.count_nonzero(g0))


def _chunks(trials, chunk):
    return [(s, min(s + chunk, trials)) for s in range(0, trials, chunk)]


def _sum_chunks(fn, spans, workers):
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: fn(*s), spans))
    else:
        parts = [fn(*s) for s in spans]
    return parts


def _fusion_counts_np(key_h1, key_h0, trials, k_nodes, p_d, p_fa, rule,
                      chunk_size=None, workers=1):
    chunk = chunk_size or max(1, 2_000_000 // max(k_nodes, 1))
    parts = _sum_chunks(
        lambda a, b: _fusion_chunk_np(key_h1, key_h0, a, b, k_nodes, p_d, p_fa, rule),
        _chunks(trials, chunk), workers)
    return sum(p[0] for p in parts), sum(p[1] for p in parts)


@njit
def _energy_hits_loop(key, trials, k_nodes, n_samples, amp, sigma, mu, rule):
    two_pi = 2.0 * math.pi
    hits = 0
    for t in range(trials):
        tk = trial_key(key, t)
        any_d = False
        all_d = True
        for j in range(k_nodes):
            xi = 0.0
            base = 2 * j * n_samples
            for i in range(n_samples):
                u1 = uniform(tk, base + 2 * i)
                u2 = uniform(tk, base + 2 * i + 1)
                r = sigma * math.sqrt(-math.log(1.0 - u1))
                ph = two_pi * u2
                re = amp + r * math.cos(ph)
                im = r * math.sin(ph)
                xi += re * re + im * im
            d = xi >= mu
            any_d = any_d or d
            all_d = all_d and d
        g = any_d if rule == 0 else all_d
        if g:
            hits += 1
    return hits


def _energy_chunk_np(key, start, stop, k_nodes, n_samples, amp, sigma, mu, rule):
    u = uniforms_np(trial_keys_np(key, start, stop), 2 * k_nodes * n_samples)
    u = u.reshape(stop - start, k_nodes, n_samples, 2)
    r = sigma * np.sqrt(-np.log(1.0 - u[..., 0]))
    ph = (2.0 * math.pi) * u[..., 1]
    re = amp + r * np.cos(ph)
    im = r * np.sin(ph)
    power = re * re + im * im
    # sequential accumulation keeps the sum order equal to the loop kernel
    xi = np.zeros(power.shape[:2])
    for i in range(n_samples):
        xi += power[..., i]
    d = xi >= mu
    g = d.any(axis=1) if rule == RULE_OR else d.all(axis=1)
    return int(np.count_nonzero(g))


def _energy_hits_np(key, trials, k_nodes, n_samples, amp, sigma, mu, rule,
                    chunk_size=None, workers=1):
    chunk = chunk_size or max(1, 1_000_000 // (2 * k_nodes * n_samples))
    parts = _sum_chunks(
        lambda a, b: _energy_chunk_np(key, a, b, k_nodes, n_samples, amp, sigma, mu, rule),
        _chunks(trials, chunk), workers)
    return sum(parts)


def fusion_counts(*args, chunk_size=None, workers=1):
    if NUMBA_ENABLED:
        m, f = _fusion_counts_loop(*args)
        return int(m), int(f)
    return _fusion_counts_np(*args, chunk_size=chunk_size, workers=workers)


def energy_hits(*args, chunk_size=None, workers=1):
    if NUMBA_ENABLED:
        return int(_energy_hits_loop(*args))
    return _energy_hits_np(*args, chunk_size=chunk_size, workers=workers)
