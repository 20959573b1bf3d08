"""Timing comparison of the compiled and pure-python math kernels.

Run as a script; it times the three hot kernels on large arrays and one
full budget-constant solve under each available backend.

    python benchmarks/bench_backends.py [--size 2000000] [--repeats 5]
"""
import argparse
import importlib
import os
import sys
import time

import numpy as np


def _load_backend(name):
    os.environ["ARTIFACT_BACKEND"] = name
    for mod in [m for m in list(sys.modules) if m.startswith("artifact")]:
        del sys.modules[mod]
    try:
        return importlib.import_module("artifact.backend")
    except ImportError:
        return None


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench(size, repeats):
    rng = np.random.Generator(np.random.PCG64(7))
    y = np.exp(rng.uniform(-8.0, 8.0, size))
    u = rng.uniform(-30.0, 750.0, size)
    rhs = rng.uniform(-50.0, 50.0, size)

    rows = []
    for name in ("py", "cy"):
        backend = _load_backend(name)
        if backend is None:
            print(f"backend {name!r}: not available, skipped")
            continue
        import artifact

        timings = {
            "lambert_w0": _time(lambda: backend.lambert_w0_arr(y), repeats),
            "lambert_w_exp": _time(lambda: backend.lambert_w_exp_arr(u), repeats),
            "crra_log_z": _time(
                lambda: backend.crra_log_z_arr(rhs, 5.0, 2.0 / 9.0, 1.0 / 3.0), repeats
            ),
        }

        p = artifact.baseline_params()
        d = artifact.derive_constants(p)
        rule = artifact.gauss_hermite(artifact.DEFAULT_QUAD_ORDER)
        h = float(artifact.h_quantiles(d, (0.5,))[0])
        spec = artifact.crra(p.eta_U)
        timings["solve_kappa_hat"] = _time(
            lambda: artifact.solve_kappa_hat(h, spec, d, p, rule), repeats
        )
        rows.append((backend.BACKEND, timings))

    if not rows:
        return
    keys = list(rows[0][1])
    width = max(len(k) for k in keys)
    header = f"{'kernel':<{width}}" + "".join(f"  {name:>12}" for name, _ in rows)
    if len(rows) == 2:
        header += f"  {'speedup':>9}"
    print(header)
    for key in keys:
        line = f"{key:<{width}}"
        for _, timings in rows:
            line += f"  {timings[key] * 1e3:>10.2f}ms"
        if len(rows) == 2:
            line += f"  {rows[0][1][key] / rows[1][1][key]:>8.2f}x"
        print(line)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=2_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    bench(args.size, args.repeats)
