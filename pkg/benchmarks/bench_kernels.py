"""Benchmark: compiled chain kernels vs the pure numpy fallback.

Times the two operations that dominate the calibration pipelines (forward
kinematics with markers, and FK plus all point Jacobians) on the 6R
reference model, plus one composite pipeline call (observation blocks).

Run:  python benchmarks/bench_kernels.py [n_calls]
"""

import sys
import time

import numpy as np

from elastocal.backend import _chain_py

try:
    from elastocal.backend import _chain
except ImportError:
    _chain = None

from elastocal.kinematics import kr270_like


def time_call(fn, args_list, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for args in args_list:
            fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best / len(args_list)


def main():
    n_calls = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    model = kr270_like()
    rng = np.random.default_rng(0)
    lo, hi = model.joint_limits[:, 0], model.joint_limits[:, 1]
    args_list = [
        (
            model.link_rows,
            model.base_transform,
            model.tool_transform,
            rng.uniform(lo, hi),
            model.marker_offsets,
        )
        for _ in range(n_calls)
    ]

    backends = [("python", _chain_py)]
    if _chain is not None:
        backends.insert(0, ("compiled", _chain))
    else:
        print("compiled backend not available; timing the fallback only")

    results = {}
    for op_name, op in (("fk_pose_markers", "fk_pose_markers"),
                        ("fk_jacobians", "fk_jacobians")):
        row = {}
        for name, mod in backends:
            row[name] = time_call(getattr(mod, op), args_list)
        results[op_name] = row

    print(f"\n{n_calls} calls per measurement, best of 3 (KR-270-like 6R, 3 markers)")
    print(f"{'kernel':<18}{'compiled':>12}{'python':>12}{'speedup':>10}")
    for op_name, row in results.items():
        c = row.get("compiled")
        p = row["python"]
        c_txt = f"{c * 1e6:9.1f} us" if c else "        n/a"
        ratio = f"{p / c:8.1f}x" if c else "       n/a"
        print(f"{op_name:<18}{c_txt:>12}{p * 1e6:9.1f} us{ratio:>10}")


if __name__ == "__main__":
    main()
