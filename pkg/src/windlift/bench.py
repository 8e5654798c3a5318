"""Backend benchmark: compiled extension vs pure numpy kernels.

Run as ``python -m windlift.bench``. Times the three kernel entry points on
a synthetic spiral cut and checks that both backends agree (to summation
rounding) before printing the comparison, so a divergent extension build
fails loudly here rather than in a simulation.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from ._kernels import _pure


def _load_compiled():
    try:
        from ._kernels import _windcore
    except ImportError:
        return None
    return _windcore


def _workload(n_points: int, n_segments: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 4.0 * np.pi, n_segments + 1)
    r = 0.1 + 0.35 * t / t[-1]
    verts = np.column_stack([0.5 + r * np.cos(t), 0.5 + r * np.sin(t)])
    pts = rng.random((n_points, 2))
    return (pts[:, 0].copy(), pts[:, 1].copy(),
            verts[:-1, 0].copy(), verts[:-1, 1].copy(),
            verts[1:, 0].copy(), verts[1:, 1].copy())


def _time(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run(n_points: int = 20000, n_segments: int = 64,
        repeats: int = 3) -> dict:
    compiled = _load_compiled()
    args = _workload(n_points, n_segments)
    results = {"n_points": n_points, "n_segments": n_segments,
               "compiled_available": compiled is not None, "kernels": {}}
    for name in ("winding_sum", "winding_grad", "nearest_segment"):
        pure_fn = getattr(_pure, name)
        entry = {"pure_s": _time(pure_fn, args, repeats)}
        if compiled is not None:
            fast_fn = getattr(compiled, name)
            ref = pure_fn(*args)
            got = fast_fn(*args)
            refs = ref if isinstance(ref, tuple) else (ref,)
            gots = got if isinstance(got, tuple) else (got,)
            for r, g in zip(refs, gots):
                if not np.allclose(np.asarray(r, dtype=np.float64),
                                   np.asarray(g, dtype=np.float64),
                                   atol=1e-12, rtol=0.0):
                    raise RuntimeError(f"{name}: backends disagree")
            entry["compiled_s"] = _time(fast_fn, args, repeats)
            entry["speedup"] = entry["pure_s"] / entry["compiled_s"]
        results["kernels"][name] = entry
    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="windlift.bench")
    parser.add_argument("--points", type=int, default=20000)
    parser.add_argument("--segments", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--json", action="store_true")
    args = parser.parse_args(argv)
    results = run(args.points, args.segments, args.repeats)
    if args.json:
        print(json.dumps(results, indent=2))
        return 0
    print(f"{args.points} points x {args.segments} segments "
          f"(best of {args.repeats})")
    for name, entry in results["kernels"].items():
        line = f"  {name:16s} pure {entry['pure_s'] * 1e3:8.2f} ms"
        if "compiled_s" in entry:
            line += (f"   compiled {entry['compiled_s'] * 1e3:8.2f} ms"
                     f"   x{entry['speedup']:.1f}")
        else:
            line += "   (extension not built)"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
