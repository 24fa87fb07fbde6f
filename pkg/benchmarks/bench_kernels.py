"""Time the LSTM kernels: pure numpy against numba.

    python benchmarks/bench_kernels.py --steps 100 --hidden 16 --repeat 20

Sequence length 100 with 16 hidden units matches one segment of the
dispersed preset. Run with PAAT_DISABLE_NUMBA=1 to see numpy alone.
"""

import argparse
import time

import numpy as np

from paat import kernels
from paat._accel import backend


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=100, help="sequence length")
    ap.add_argument("--hidden", type=int, default=16, help="hidden units per direction")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    u = args.hidden
    pre_x = rng.standard_normal((args.steps, 4 * u)) * 0.5
    w_h = rng.standard_normal((4 * u, u)) * 0.3
    d_hidden = rng.standard_normal((args.steps, u))

    print(f"backend: {backend()}  steps={args.steps} hidden={u} best of {args.repeat}")
    rows = [("numpy", kernels.lstm_forward_numpy, kernels.lstm_backward_numpy)]
    if kernels.lstm_forward_numba is not None:
        # first call compiles (or loads the cache); keep it out of the timing
        kernels.lstm_forward_numba(pre_x, w_h)
        g, c, _ = kernels.lstm_forward_numba(pre_x, w_h)
        kernels.lstm_backward_numba(d_hidden, g, c, w_h)
        rows.append(("numba", kernels.lstm_forward_numba, kernels.lstm_backward_numba))

    ref = None
    base = None
    for name, fwd, bwd in rows:
        gates, cells, hidden = fwd(pre_x, w_h)
        t_f = best_of(lambda: fwd(pre_x, w_h), args.repeat)
        t_b = best_of(lambda: bwd(d_hidden, gates, cells, w_h), args.repeat)
        if ref is None:
            ref, base = hidden, t_f + t_b
            note = ""
        else:
            diff = float(np.max(np.abs(hidden - ref)))
            note = f"  speedup {base / (t_f + t_b):.1f}x  max|dh| vs numpy {diff:.1e}"
        print(f"{name:>6}: forward {t_f * 1e3:8.3f} ms  backward {t_b * 1e3:8.3f} ms{note}")


if __name__ == "__main__":
    main()
