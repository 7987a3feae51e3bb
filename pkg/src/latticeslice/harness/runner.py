"""Run an experiment config: build the set, compute traces and sweeps, write files."""

from __future__ import annotations

import io
import json
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from ..constructions import ChunkSet, materialize
from ..dimension import (
    DimensionTrace,
    counting_dim_trace,
    level_end_scales,
    limsup_estimate,
    mass_dim_trace,
    slice_dim_trace,
    sweep_slices,
    tube_mass_trace,
)
from ..errors import CapacityExceeded, LatticeSliceError
from .config import ExperimentConfig, build_set, build_tube
from .io import atomic_write, fmt, sweep_csv, sweep_json, trace_csv, trace_json


@contextmanager
def stage(name: str):
    """Prefix any package error raised inside with the stage that failed."""
    try:
        yield
    except LatticeSliceError as exc:
        if not getattr(exc, "stage", None):
            exc.stage = name
            exc.args = (f"[{name}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise


def compute_trace(cs: ChunkSet, entry: dict) -> DimensionTrace:
    kind = entry["type"]
    if kind == "mass":
        return mass_dim_trace(cs, entry.get("scales") or level_end_scales(cs))
    if kind == "counting":
        return counting_dim_trace(cs)
    tube = build_tube(entry["tube"])
    if kind == "slice":
        return slice_dim_trace(cs, tube)
    return tube_mass_trace(cs, tube, level_end_scales(cs))


def _out_dir(cfg: ExperimentConfig, out_dir) -> Path:
    return Path(out_dir if out_dir is not None else cfg.experiment.get("out_dir", "."))


def run_config(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    fmt_: str = "csv",
    only: str | None = None,
) -> list[Path]:
    """Write every configured trace and sweep; returns the written paths.

    ``only`` restricts the run to one trace type (``mass``, ``counting``,
    ``slice`` including tube mass) or to ``sweep``.  Outputs are pure
    functions of the config, so repeated runs give identical bytes.
    """
    out = _out_dir(cfg, out_dir)
    with stage("build"):
        cs = build_set(cfg.construction)
    tail = cfg.experiment.get("tail", 3)
    written = []
    summary = {}
    for entry in cfg.experiment.get("traces", []):
        group = "slice" if entry["type"] == "tube_mass" else entry["type"]
        if only is not None and only != group:
            continue
        with stage(f"trace {entry['name']}"):
            trace = compute_trace(cs, entry)
            est = limsup_estimate(trace, min(tail, len(trace.records))) if trace.records else None
        path = out / f"{entry['name']}.{fmt_}"
        atomic_write(path, trace_csv(trace) if fmt_ == "csv" else trace_json(trace))
        written.append(path)
        if est is not None:
            summary[entry["name"]] = {"estimate": fmt(est.estimate), "trend": est.trend, "error": fmt(est.error)}
    for entry in cfg.experiment.get("sweeps", []):
        if only is not None and only != "sweep":
            continue
        (a0, a1), (b0, b1) = entry["region"]
        with stage(f"sweep {entry['name']}"):
            table = sweep_slices(cs, ((a0, a1), (b0, b1)), tuple(entry["grid"]), entry.get("param_kind", "line"))
        path = out / f"{entry['name']}.{fmt_}"
        atomic_write(path, sweep_csv(table) if fmt_ == "csv" else sweep_json(table))
        written.append(path)
        summary[entry["name"]] = {"good_fraction": fmt(float(table.verdicts.mean()))}
    if summary:
        path = out / "summary.json"
        atomic_write(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written


def generate(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> list[Path]:
    """Write the set description (JSON) and, when it fits, its points (CSV)."""
    out = _out_dir(cfg, out_dir)
    with stage("build"):
        cs = build_set(cfg.construction)
    written = []
    path = out / "set.json"
    atomic_write(path, json.dumps(cs.to_json(), indent=2, sort_keys=True) + "\n")
    written.append(path)
    exact = [lv.m for lv in cs.levels if lv.exact]
    ps = None
    # longest prefix of exact levels that fits the materialization cap
    for k in range(len(exact), 0, -1):
        try:
            ps = materialize(cs, exact[:k])
            break
        except CapacityExceeded:
            continue
    if ps is None:
        return written
    path = out / "points.csv"
    buf = io.StringIO()
    np.savetxt(buf, ps.points, fmt="%d", delimiter=",", header="x,y", comments="")
    atomic_write(path, buf.getvalue())
    written.append(path)
    return written
