"""Independent reference implementations used by the tests.

Nothing here imports the package's construction or counting code; each
oracle is rebuilt from the defining formulas with plain loops and exact
rational clipping.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def brute_max_box(xs, ys, side):
    """Best half-open box anchored at (some point's x, some point's y).

    Ties go to the lexicographically smallest (x0, y0).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    y_anchors = np.unique(ys)
    best = (-1, 0.0, 0.0)
    for x0 in np.unique(xs):
        sel = np.sort(ys[(xs >= x0) & (xs < x0 + side)])
        if len(sel) <= best[0]:
            continue
        counts = np.searchsorted(sel, y_anchors + side, "left") - np.searchsorted(sel, y_anchors, "left")
        i = int(np.argmax(counts))
        if counts[i] > best[0]:
            best = (int(counts[i]), float(x0), float(y_anchors[i]))
    return best


def naive_max_box(pts, side):
    """Triple loop over anchor pairs and points (tiny inputs only)."""
    best = (-1, None, None)
    for x0 in sorted({p[0] for p in pts}):
        for y0 in sorted({p[1] for p in pts}):
            c = sum(1 for x, y in pts if x0 <= x < x0 + side and y0 <= y < y0 + side)
            if c > best[0]:
                best = (c, x0, y0)
    return best


def in_clip(x: int, y: int, tan_half: float, pad: float = 0.0) -> bool:
    """|x| <= y*tan(theta/2) + pad, decided in exact rationals."""
    return abs(Fraction(x)) <= Fraction(y) * Fraction(tan_half) + Fraction(pad)


def half_width(y: int, tan_half: float, pad: float = 0.0) -> int:
    """Largest integer x with x <= y*tan(theta/2) + pad (exact)."""
    return math.floor(Fraction(y) * Fraction(tan_half) + Fraction(pad))


def _rows(y0, y1, lo, hi, t, pad):
    out = []
    for y in range(y0, y1):
        f = half_width(y, t, pad)
        a, b = max(lo, -f), min(hi - 1, f)
        if b >= a:
            out.append(np.column_stack([np.arange(a, b + 1), np.full(b - a + 1, y)]))
    return out


def cone_level(h: int, n: int, w: int, theta: float, eps: float = 0.0):
    """Chunks and points of one cone level, straight from the chunk rules.

    alpha_j = -theta/2 + sum_{i<j} w/(h + i n); K = first k with the partial
    sum through chunk k-1 reaching theta; chunk j sits on rows
    [h + j n, h + (j+1) n) with left edge floor(y_j tan alpha_j) and columns
    widened by eps; the last chunk runs to the right boundary of the clip.
    Returns (K, chunks, points as an (N, 2) array).
    """
    acc = 0.0
    alphas = []
    while True:
        alphas.append(-theta / 2 + acc)
        acc += w / (h + (len(alphas) - 1) * n)
        if acc >= theta:
            break
    K = len(alphas)
    t = math.tan(theta / 2)
    right_edge = half_width(h + K * n - 1, t, eps)
    off_l = math.ceil(-Fraction(eps))
    off_r = math.ceil(w + Fraction(eps))
    chunks, blocks = [], []
    for j, a in enumerate(alphas):
        y0 = h + j * n
        x0 = math.floor(y0 * math.tan(a))
        lo, hi = x0 + off_l, x0 + off_r
        if j == K - 1:
            hi = max(hi, right_edge + 1)
        chunks.append((lo, hi, y0, y0 + n))
        blocks += _rows(y0, y0 + n, lo, hi, t, eps)
    return K, chunks, _stack(blocks)


def intro_band(b: int, s: int, theta: float):
    t = math.tan(theta / 2)
    return _stack(_rows(b, b + s, -(10**30), 10**30, t, 0.0))


def _stack(blocks):
    if not blocks:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(blocks).astype(np.int64)


def strip_level(h: int, n: int, w: int, k: int):
    pts = [(x, y) for j in range(k) for x in range(j * w, (j + 1) * w) for y in range(h + j * n, h + (j + 1) * n)]
    return np.array(pts, dtype=np.int64).reshape(-1, 2)


def tube_contains_exact(u: float, v: float, x, y) -> bool:
    """Width-1 tube membership with rational arithmetic on the float parameters."""
    c = Fraction(math.sqrt(1.0 + 1.0 / (u * u)))
    base = -Fraction(x) / Fraction(u)
    return base + Fraction(v) * c < Fraction(y) <= base + (Fraction(v) + 1) * c
