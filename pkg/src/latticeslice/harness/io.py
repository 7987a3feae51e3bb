"""Trace and sweep serialization, atomic file writes and plot-data emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from ..dimension import DimensionTrace, SweepTable
from ..errors import EmptyInput, ParseError
from ..scalars import format_scalar, parse_scalar

TRACE_HEADER = ["level", "scale_repr", "count_lo", "count_hi", "ratio_lo", "ratio_hi", "mode"]
SWEEP_HEADER = ["u", "v", "param_kind", "verdict", "min_level_count", "levels_checked"]
PLOT_HEADER = ["series", "level", "x", "y"]


def fmt(x: float) -> str:
    return f"{x:.12g}"


def atomic_write(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def trace_rows(trace: DimensionTrace) -> list[list[str]]:
    return [
        [
            "" if r.level is None else str(r.level),
            format_scalar(r.scale),
            format_scalar(r.count_lo),
            format_scalar(r.count_hi),
            fmt(r.ratio_lo.value),
            fmt(r.ratio_hi.value),
            r.mode,
        ]
        for r in trace.records
    ]


def trace_csv(trace: DimensionTrace) -> str:
    return _csv_text(TRACE_HEADER, trace_rows(trace))


def trace_json(trace: DimensionTrace) -> str:
    recs = [dict(zip(TRACE_HEADER, row)) for row in trace_rows(trace)]
    for rec, r in zip(recs, trace.records):
        rec["ratio_lo_error"] = fmt(r.ratio_lo.error_bound)
        rec["ratio_hi_error"] = fmt(r.ratio_hi.error_bound)
    return json.dumps({"kind": trace.kind, "records": recs}, indent=2, sort_keys=True) + "\n"


def sweep_rows(table: SweepTable) -> list[list[str]]:
    return [
        [fmt(r.a), fmt(r.b), r.kind, "true" if r.verdict else "false", str(r.min_level_count), str(r.levels_checked)]
        for r in table.rows
    ]


def sweep_csv(table: SweepTable) -> str:
    return _csv_text(SWEEP_HEADER, sweep_rows(table))


def sweep_json(table: SweepTable) -> str:
    rows = [dict(zip(SWEEP_HEADER, row)) for row in sweep_rows(table)]
    for rec, r in zip(rows, table.rows):
        rec["counts"] = [list(c) for c in r.counts]
    obj = {
        "param_kind": table.kind,
        "region": [list(table.region[0]), list(table.region[1])],
        "grid": list(table.grid),
        "rows": rows,
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def read_trace_csv(path: str | Path) -> list[dict]:
    """Parse a trace CSV, reporting the first bad line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(path, 0, str(exc)) from None
    lines = text.splitlines()
    if not lines:
        raise ParseError(path, 1, "empty file")
    header = next(csv.reader([lines[0]]))
    if header != TRACE_HEADER:
        raise ParseError(path, 1, f"expected header {','.join(TRACE_HEADER)}")
    out = []
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if len(row) != len(TRACE_HEADER):
            raise ParseError(path, lineno, f"expected {len(TRACE_HEADER)} fields, got {len(row)}")
        rec = dict(zip(TRACE_HEADER, row))
        try:
            rec["level"] = int(rec["level"]) if rec["level"] else None
            rec["scale"] = parse_scalar(rec["scale_repr"])
            rec["ratio_lo"] = float(rec["ratio_lo"])
            rec["ratio_hi"] = float(rec["ratio_hi"])
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        out.append(rec)
    return out


def emit_plot_data(paths: Sequence[str | Path]) -> str:
    """Merge trace CSVs into long format ``series,level,x,y`` with x = ln(scale).

    Each file becomes one series named after its stem; a file holding any
    interval record becomes two series, ``<stem>.lo`` and ``<stem>.hi``.
    """
    if not paths:
        raise EmptyInput("no trace files given")
    rows = []
    for p in paths:
        recs = read_trace_csv(p)
        stem = Path(p).stem
        interval = any(r["ratio_lo"] != r["ratio_hi"] or r["count_lo"] != r["count_hi"] for r in recs)
        series = [(f"{stem}.lo", "ratio_lo"), (f"{stem}.hi", "ratio_hi")] if interval else [(stem, "ratio_hi")]
        for name, key in series:
            for i, r in enumerate(recs):
                x = r["scale"].ln()
                level = r["level"] if r["level"] is not None else i
                rows.append([name, str(level), "inf" if math.isinf(x) else fmt(x), fmt(r[key])])
    return _csv_text(PLOT_HEADER, rows)
