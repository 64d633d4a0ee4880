"""CSV, JSON and gnuplot serialisation of curve traces."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import TextIO

import numpy as np

from .manifold import Manifold
from .transport import CurveTrace


def _fmt(v: float) -> str:
    return "%.17g" % v


def trace_header(dim: int, tangents: bool = True) -> list[str]:
    cols = ["tau"] + [f"x{i + 1}" for i in range(dim)]
    if tangents:
        cols += [f"u{i + 1}" for i in range(dim)]
    return cols


def _rows(trace: CurveTrace, tangents: bool):
    for k in range(len(trace)):
        row = [trace.taus[k], *trace.points[k]]
        if tangents:
            row.extend(trace.tangents[k])
        yield [_fmt(float(v)) for v in row]


def write_trace_csv(trace: CurveTrace, out: TextIO, tangents: bool = True) -> None:
    """Header ``tau,x1..xN[,u1..uN]`` then one row per sample, 17 significant digits."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(trace_header(trace.points.shape[1], tangents))
    writer.writerows(_rows(trace, tangents))


def write_trace_gnuplot(trace: CurveTrace, out: TextIO, tangents: bool = True) -> None:
    """Whitespace-separated columns under a ``#`` comment header."""
    out.write("# " + " ".join(trace_header(trace.points.shape[1], tangents)) + "\n")
    for row in _rows(trace, tangents):
        out.write(" ".join(row) + "\n")


def trace_to_json(trace: CurveTrace) -> dict:
    return {
        "step": trace.step,
        "tau": trace.taus.tolist(),
        "points": trace.points.tolist(),
        "tangents": trace.tangents.tolist(),
    }


def emit_plot_data(trace: CurveTrace, style: str, path: str | Path | None = None) -> str:
    """Render ``trace`` as csv or gnuplot text; also writes it to ``path`` when given."""
    if len(trace) == 0:
        raise ValueError("cannot emit an empty trace")
    buf = io.StringIO()
    if style == "csv":
        write_trace_csv(trace, buf)
    elif style == "gnuplot":
        write_trace_gnuplot(trace, buf)
    else:
        raise ValueError(f"unknown plot style {style!r}; expected csv or gnuplot")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_trace_csv(source: str | Path | TextIO, manifold: Manifold, step: float | None = None) -> CurveTrace:
    """Parse a trace CSV. Without tangent columns, tangents are estimated by differences."""
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return read_trace_csv(fh, manifold, step)
    rows = list(csv.reader(source))
    if not rows:
        raise ValueError("trace file is empty")
    header = [h.strip() for h in rows[0]]
    n = manifold.ambient_dim
    with_tangents = header == trace_header(n, True)
    if not with_tangents and header != trace_header(n, False):
        raise ValueError(f"trace header must be {','.join(trace_header(n))} (tangent columns optional)")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise ValueError(f"bad number in trace file: {exc}") from None
    if data.ndim != 2 or len(data) == 0 or data.shape[1] != len(header):
        raise ValueError("trace rows must match the header width")
    taus, pts = data[:, 0], data[:, 1 : n + 1]
    if with_tangents:
        tans = data[:, n + 1 :]
    else:
        if len(pts) > 2:
            tans = np.gradient(pts, taus, axis=0, edge_order=2)
        elif len(pts) == 2:
            tans = np.gradient(pts, taus, axis=0)
        else:
            tans = np.zeros_like(pts)
        norms = np.linalg.norm(tans, axis=1, keepdims=True)
        tans = np.divide(tans, norms, out=np.zeros_like(tans), where=norms > 0)
    if step is None:
        diffs = np.diff(taus)
        step = float(np.median(diffs[diffs > 0])) if np.any(diffs > 0) else 0.0
    return CurveTrace(manifold, taus, pts, tans, step)
