#!/usr/bin/env python3
"""Compare the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--grid 60] [--depth 384] [--repeat 3]

Times each kernel on a realistic workload (a planted-structure feature grid
of the given size) plus the end-to-end per-image pipeline under both
backends.  The two backends are bitwise-equal; this script only reports
speed.
"""

import argparse
import time

import numpy as np


def build_inputs(grid, depth, seed=0):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((depth, 4)))
    mask = np.zeros((grid, grid), dtype=int)
    s = grid // 4
    mask[s:2 * s, s:2 * s] = 1
    mask[2 * s:3 * s, 2 * s:3 * s] = 2
    dirs = np.stack([q[:, 0], 0.67 * q[:, 1] + 0.74 * q[:, 2], 0.67 * q[:, 1] + 0.74 * q[:, 3]])
    feats = dirs[mask.ravel()].T + 0.01 * rng.standard_normal((depth, grid * grid))
    feats /= np.linalg.norm(feats, axis=0, keepdims=True)
    k64 = feats.astype(np.float64)
    s_mat = k64.T @ k64
    s_mat = np.ascontiguousarray((s_mat + s_mat.T) / 2)
    raw = rng.standard_normal((grid, grid))
    fg = mask > 0
    return feats.astype(np.float32), s_mat, raw, fg


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_backend(impl, s_mat, raw, fg, repeat):
    rho = impl.topk_mean(s_mat, 10)
    rows = {
        "topk_mean(k=10)": lambda: impl.topk_mean(s_mat, 10),
        "tune_threshold": lambda: impl.tune_threshold(s_mat, rho, 1.0, 0.5, 0.15),
        "boundary_field(k=8)": lambda: impl.boundary_field(raw, 8),
        "label_components": lambda: impl.label_components(fg),
        "mirror_upper": lambda: impl.mirror_upper(s_mat.copy()),
    }
    return {name: best_of(fn, repeat) for name, fn in rows.items()}


def bench_pipeline(grid_size, depth, repeat, force_numpy):
    import importlib
    import os
    import subprocess
    import sys

    env = dict(os.environ)
    if force_numpy:
        env["CUTONCE_NO_EXT"] = "1"
    else:
        env.pop("CUTONCE_NO_EXT", None)
    code = (
        "import time, numpy as np\n"
        "import benchmarks.bench_kernels as bk\n"
        "from cutonce import FeatureGrid, process_grid\n"
        f"feats, _, _, _ = bk.build_inputs({grid_size}, {depth})\n"
        f"g = FeatureGrid('bench', feats.reshape({depth}, {grid_size}, {grid_size}),"
        f" 8, {grid_size * 8}, {grid_size * 8}, {grid_size * 8}, {grid_size * 8})\n"
        "process_grid(g)\n"
        "times = []\n"
        f"for _ in range({repeat}):\n"
        "    t0 = time.perf_counter(); process_grid(g); times.append(time.perf_counter() - t0)\n"
        "print(f'{min(times):.4f}')\n"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True
    )
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid", type=int, default=60, help="grid side length (nodes = grid^2)")
    ap.add_argument("--depth", type=int, default=384)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    from cutonce._kernels import _numpy as np_impl

    try:
        from cutonce._kernels import _core as c_impl
    except ImportError:
        c_impl = None

    _, s_mat, raw, fg = build_inputs(args.grid, args.depth)
    print(f"nodes={args.grid * args.grid}, depth={args.depth}, best of {args.repeat}\n")
    print(f"{'kernel':<22}{'numpy':>10}{'compiled':>10}{'speedup':>9}")
    np_rows = bench_backend(np_impl, s_mat, raw, fg, args.repeat)
    c_rows = bench_backend(c_impl, s_mat, raw, fg, args.repeat) if c_impl else {}
    for name, t_np in np_rows.items():
        if c_impl:
            t_c = c_rows[name]
            print(f"{name:<22}{t_np * 1e3:>8.1f}ms{t_c * 1e3:>8.1f}ms{t_np / t_c:>8.1f}x")
        else:
            print(f"{name:<22}{t_np * 1e3:>8.1f}ms{'n/a':>10}{'':>9}")

    print("\nend-to-end pipeline (includes the eigensolve):")
    t_np = bench_pipeline(args.grid, args.depth, args.repeat, force_numpy=True)
    print(f"{'numpy backend':<22}{t_np:>9.3f}s")
    if c_impl:
        t_c = bench_pipeline(args.grid, args.depth, args.repeat, force_numpy=False)
        print(f"{'compiled backend':<22}{t_c:>9.3f}s{t_np / t_c:>8.2f}x")


if __name__ == "__main__":
    main()
