"""Benchmark the compiled eigenvalue kernel against the pure-numpy fallback.

Run from the repository root:

    python benchmarks/bench_backends.py [--samples N]

Imports both kernels directly, so the comparison runs in one process
regardless of which backend the package selected.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=200_000)
    args = ap.parse_args()

    from mimofb import _kernel_py

    try:
        from mimofb import _mckernel
    except ImportError:
        _mckernel = None
        print("compiled kernel not built (run `python setup.py build_ext --inplace`)")

    rng = np.random.default_rng(0)
    cases = [(1, 1), (2, 1), (2, 2), (2, 3), (2, 4), (3, 3), (4, 4)]
    print(f"{'tx x rx':>8} | {'pure':>12} | {'compiled':>12} | speedup")
    for tx, rx in cases:
        normals = rng.standard_normal((args.samples, 2 * tx * rx))
        t0 = time.perf_counter()
        ref = _kernel_py.eig_batch(normals, tx, rx)
        t_pure = time.perf_counter() - t0
        line = f"{tx}x{rx:>6} | {args.samples / t_pure:>10.3g}/s"
        if _mckernel is not None:
            t0 = time.perf_counter()
            out = _mckernel.eig_batch(normals, tx, rx)
            t_comp = time.perf_counter() - t0
            err = float(np.max(np.abs(out - ref) / (1.0 + np.abs(ref))))
            line += f" | {args.samples / t_comp:>10.3g}/s | {t_pure / t_comp:6.1f}x"
            line += f"  (max rel dev {err:.1e})"
        print(line)

    # End-to-end: one Monte Carlo sweep point through the selected backend.
    from mimofb import sim
    from mimofb.randmat import AntennaConfig

    config = sim.SweepConfig(cfg=AntennaConfig(2, 2), scheme="no-csit",
                             snr_db=(10.0,), trials=args.samples, seed=1,
                             rate_bits=2.0)
    t0 = time.perf_counter()
    sim.run_sweep(config)
    dt = time.perf_counter() - t0
    from mimofb import backend
    print(f"\nsweep point (2x2 no-csit, {args.samples} trials, "
          f"{backend.BACKEND} backend): {dt:.3f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
