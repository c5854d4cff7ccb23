"""Engine throughput: compiled core vs pure-Python fallback.

Runs the raw step kernels on identical inputs (same seeds, same fields) and
reports steps/second for two workloads: an unbounded constant environment
(pure hashing + jump) and a windowed two-kernel iid field (adds the state
lookup).  Usage:

    python3 benchmarks/bench_core.py [--steps N] [--repeat K]
"""

import argparse
import time

import numpy as np

from driftlab import Window, constant_spec, iid_spec, materialize
from driftlab import _fallback
from driftlab.kernels import TransitionKernel

try:
    from driftlab import _core
except ImportError:
    _core = None

FLAT = TransitionKernel(0.25, 0.25, 0.25, 0.25)
DRIFT = TransitionKernel(0.2, 0.2, 0.4, 0.2)
SIDEWAYS = TransitionKernel(0.35, 0.35, 0.15, 0.15)  # driftless: stays boxed


def _args_for(field, useed, cap):
    # run_walk(states, ox, oy, nx, ny, unbounded, cdf, useed, x0, y0, counts,
    #          gamma, target_y, cap, floor_y, record, skip_counter, u_fn)
    if field.unbounded:
        states, (ox, oy, nx, ny) = None, (0, 0, 1, 1)
    else:
        states, (ox, oy, nx, ny) = field.states, field.window
    return [states, ox, oy, nx, ny, field.unbounded, field.cdf_table, useed,
            0, 0, {}, {}, None, cap, None, False, False, None]


def _run(module, field, cap, repeat):
    best = float("inf")
    for r in range(repeat):
        args = _args_for(field, 1000 + r, cap)
        if module is _fallback:
            args[6] = [tuple(row) for row in args[6]]
        else:
            args[6] = np.ascontiguousarray(args[6], dtype=np.float64)
        t0 = time.perf_counter()
        status, n_steps, *_ = module.run_walk(*args)
        dt = time.perf_counter() - t0
        assert n_steps == cap, f"walk ended early (status {status})"
        best = min(best, dt)
    return cap / best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000,
                    help="steps per walk (default 200000)")
    ap.add_argument("--repeat", type=int, default=3,
                    help="trials per engine; best time wins (default 3)")
    opts = ap.parse_args()

    half = max(2000, 8 * int(opts.steps ** 0.5))
    workloads = [
        ("constant/unbounded", materialize(constant_spec(DRIFT, 7))),
        ("iid/windowed", materialize(iid_spec((FLAT, SIDEWAYS), (0.5, 0.5), 7),
                                     Window(-half, -half, 2 * half, 2 * half))),
    ]
    print(f"{opts.steps} steps per walk, best of {opts.repeat}\n")
    print(f"{'workload':<22}{'python steps/s':>16}{'compiled steps/s':>18}"
          f"{'speedup':>9}")
    for name, field in workloads:
        py = _run(_fallback, field, opts.steps, opts.repeat)
        if _core is None:
            print(f"{name:<22}{py:>16,.0f}{'n/a':>18}{'n/a':>9}")
            continue
        co = _run(_core, field, opts.steps, opts.repeat)
        print(f"{name:<22}{py:>16,.0f}{co:>18,.0f}{co / py:>8.1f}x")
    if _core is None:
        print("\ncompiled core not built; pure-Python numbers only")


if __name__ == "__main__":
    main()
