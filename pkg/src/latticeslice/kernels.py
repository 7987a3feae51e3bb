"""Hot loops, with the compiled extension used when it is importable.

Set ``LATTICESLICE_PURE=1`` to force the pure-Python fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _sweep_py

try:
    if os.environ.get("LATTICESLICE_PURE"):
        raise ImportError
    from . import _sweep as _sweep_c
except ImportError:
    _sweep_c = None

BACKEND = "compiled" if _sweep_c is not None else "python"

_IMPLS = {"python": _sweep_py.sweep}
if _sweep_c is not None:
    _IMPLS["compiled"] = _sweep_c.sweep


def available_backends() -> list[str]:
    return sorted(_IMPLS)


def max_count_box_arrays(xs, ys, side: float, backend: str | None = None) -> tuple[int, float, float]:
    """Most points in a half-open box [x0, x0+side) x [y0, y0+side).

    Returns (count, x0, y0) where x0 and y0 are point coordinates, chosen
    lexicographically smallest among the optimal anchored boxes.
    """
    impl = _IMPLS[backend or BACKEND]
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs, kind="stable")
    xs_s = np.ascontiguousarray(xs[order])
    ys_s = ys[order]
    x_anchor = np.unique(xs_s)
    y_anchor = np.unique(ys_s)
    hi_idx = np.searchsorted(y_anchor, ys_s, side="right") - 1
    lo_idx = np.searchsorted(y_anchor + side, ys_s, side="right")
    best, ax, ay = impl(
        xs_s,
        np.ascontiguousarray(lo_idx, dtype=np.int_),
        np.ascontiguousarray(hi_idx, dtype=np.int_),
        x_anchor,
        float(side),
        len(y_anchor),
    )
    return int(best), float(x_anchor[ax]), float(y_anchor[ay])
