"""Time the max-count box search: compiled kernel vs pure-Python fallback vs brute force.

    python3 benchmarks/bench_kernels.py [--sizes 250 500 1000 2000] [--sides 2 10 50] [--span 1000]

Points are uniform integers in a span x span square; pass --span 0 for a
dense square of side about 4*sqrt(n), where the brute force has few
distinct anchors and the gap narrows.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from latticeslice.kernels import available_backends, max_count_box_arrays


def brute_force(xs: np.ndarray, ys: np.ndarray, side: float) -> tuple[int, float, float]:
    """Quadratic search over boxes anchored at (point x, point y)."""
    best = (-1, 0.0, 0.0)
    anchors = np.unique(ys)
    for x0 in np.unique(xs):
        sel = np.sort(ys[(xs >= x0) & (xs < x0 + side)])
        if len(sel) <= best[0]:
            continue
        counts = np.searchsorted(sel, anchors + side, "left") - np.searchsorted(sel, anchors, "left")
        i = int(np.argmax(counts))
        if counts[i] > best[0]:
            best = (int(counts[i]), float(x0), float(anchors[i]))
    return best


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000, 2000])
    ap.add_argument("--sides", type=float, nargs="+", default=[2, 10, 50])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--span", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    backends = available_backends()
    cols = ["n", "side", "brute_s"] + [f"{b}_s" for b in backends] + [f"{b}_speedup" for b in backends]
    print(" ".join(f"{c:>16}" for c in cols))
    for n in args.sizes:
        span = args.span or int(4 * np.sqrt(n)) + 10
        pts = rng.integers(0, span, size=(n, 2))
        xs, ys = pts[:, 0].astype(float), pts[:, 1].astype(float)
        for side in args.sides:
            ref = brute_force(xs, ys, side)
            t_brute = _time(lambda: brute_force(xs, ys, side), args.repeat)
            times = []
            for b in backends:
                got = max_count_box_arrays(xs, ys, side, b)
                if got != ref:
                    raise SystemExit(f"{b} disagrees with brute force at n={n}, side={side}: {got} vs {ref}")
                times.append(_time(lambda: max_count_box_arrays(xs, ys, side, b), args.repeat))
            row = [n, side, t_brute] + times + [t_brute / t for t in times]
            print(" ".join(f"{v:>16.6g}" for v in row))


if __name__ == "__main__":
    main()
