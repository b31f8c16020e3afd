"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--n 2000000] [--repeat 5]

Also times one full per-event check-round sweep under each backend by
re-running this script in a subprocess with SPMQC_DISABLE_NUMBA set.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from spmqc.channel import DEFAULT_CHANNEL, transmittance
from spmqc.protocol import kernels
from spmqc.protocol.events import _check_tables, sample_check_events


def _best(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(n, repeat):
    rng = np.random.default_rng(0)
    _, cum = _check_tables(transmittance(DEFAULT_CHANNEL, 20.0), DEFAULT_CHANNEL.p_d, None)
    rows = rng.integers(0, 36, n).astype(np.int64)
    u = rng.random(n)
    ideal = rng.integers(0, 2, n).astype(np.uint8)
    u2 = rng.random(n)
    bits = rng.integers(0, 2, 3 * (n // 3)).astype(np.uint8)
    cases = {
        "sample_categories": (
            lambda: kernels.sample_categories_numpy(rows, cum, u),
            kernels._sample_categories_nb and (lambda: kernels._sample_categories_nb(rows, cum, u)),
        ),
        "resolve_clicks": (
            lambda: kernels.resolve_clicks_numpy(ideal, u, u2, 0.9, 0.0131, 0.5),
            kernels._resolve_clicks_nb and (lambda: kernels._resolve_clicks_nb(ideal, u, u2, 0.9, 0.0131, 0.5)),
        ),
        "majority_vote": (
            lambda: kernels.majority_vote_numpy(bits, 3),
            kernels._majority_vote_nb and (lambda: kernels._majority_vote_nb(bits, 3)),
        ),
    }
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}   n={n}")
    for name, (np_fn, nb_fn) in cases.items():
        t_np = _best(np_fn, repeat) * 1e3
        if nb_fn:
            t_nb = _best(nb_fn, repeat) * 1e3
            print(f"{name:<20}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<20}{t_np:>12.2f}{'n/a':>12}")


def end_to_end(n, repeat):
    eta = transmittance(DEFAULT_CHANNEL, 20.0)

    def run():
        sample_check_events(n, ("X", "Y", "Z"), eta, DEFAULT_CHANNEL, np.random.default_rng(1))

    return _best(run, repeat)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end-only", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.end_to_end_only:
        print(f"{end_to_end(args.n, args.repeat):.6f}")
        return
    print(f"active backend: {kernels.BACKEND}")
    kernel_table(args.n, args.repeat)
    times = {}
    for backend, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, SPMQC_DISABLE_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, __file__, "--end-to-end-only", "--n", str(args.n), "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True, check=True,
        )
        times[backend] = float(out.stdout.strip())
    print(
        f"sample_check_events, {args.n} rounds: numba {times['numba'] * 1e3:.1f} ms, "
        f"numpy {times['numpy'] * 1e3:.1f} ms"
    )


if __name__ == "__main__":
    main()
