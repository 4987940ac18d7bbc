"""Time the numba loop kernels against their pure-numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Each kernel is called once before timing so numba compilation is excluded.
The best of ``--repeat`` runs is reported. With AERIALNET_DISABLE_NUMBA=1 the
loop kernels run as plain Python and the comparison is skipped.
"""

import argparse
import time

import numpy as np

from aerialnet import _chi2, _idw, _marching, _montecarlo, _rng
from aerialnet._accel import NUMBA_ENABLED


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(scale):
    trials = max(1, int(1_000_000 * scale))
    k1, k0 = _rng.stream_key(0, 1), _rng.stream_key(0, 0)
    yield ("fusion MC, K=8", f"{trials:,} trials",
           lambda: _montecarlo._fusion_counts_loop(k1, k0, trials, 8, 0.9, 0.1, 0),
           lambda: _montecarlo._fusion_counts_np(k1, k0, trials, 8, 0.9, 0.1, 0))

    e_trials = max(1, int(200_000 * scale))
    yield ("energy MC, N=10", f"{e_trials:,} trials",
           lambda: _montecarlo._energy_hits_loop(k1, e_trials, 1, 10, 1.0, 1.0, 14.2, 0),
           lambda: _montecarlo._energy_hits_np(k1, e_trials, 1, 10, 1.0, 1.0, 14.2, 0))

    n = max(3, int(801 * scale ** 0.5))
    ax = np.linspace(-8000, 8000, n)
    field = -20 * np.log10(np.hypot.outer(ax, ax) + 300.0)
    level = float(np.median(field))
    yield ("marching squares", f"{n}x{n} grid",
           lambda: _marching._segments_loop(field, level, _marching.SEGMENT_TABLE),
           lambda: _marching._segments_np(field, level, _marching.SEGMENT_TABLE))

    rng = np.random.default_rng(0)
    rx, ry = rng.uniform(0, 1000, (2, 32))
    rssi = rng.uniform(-120, -60, 32)
    q = max(1, int(250_000 * scale))
    qx, qy = rng.uniform(0, 1000, (2, q))
    yield ("IDW map", f"{q:,} cells, 32 reports",
           lambda: _idw._idw_loop(qx, qy, rx, ry, rssi),
           lambda: _idw._idw_np(qx, qy, rx, ry, rssi))

    evals = max(1, int(2000 * scale))
    xs = np.linspace(5.0, 60.0, evals)

    def ncx(impl):
        return lambda: [impl(10, x, 25.0) for x in xs]

    yield ("noncentral chi2 sf", f"{evals:,} evaluations",
           ncx(_chi2._ncx_sf_loop), ncx(_chi2._ncx_sf_np))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="problem size multiplier")
    args = ap.parse_args(argv)
    if not NUMBA_ENABLED:
        print("numba disabled or unavailable: only the numpy kernels are meaningful here")
    print(f"{'kernel':<20} {'size':<27} {'numba s':>10} {'numpy s':>10} {'speedup':>8}")
    for name, size, loop_fn, np_fn in cases(args.scale):
        t_np = best_of(np_fn, args.repeat)
        if NUMBA_ENABLED:
            t_loop = best_of(loop_fn, args.repeat)
            print(f"{name:<20} {size:<27} {t_loop:>10.4f} {t_np:>10.4f} {t_np / t_loop:>7.1f}x")
        else:
            print(f"{name:<20} {size:<27} {'-':>10} {t_np:>10.4f} {'-':>8}")


if __name__ == "__main__":
    main()
