"""Command-line front end: ``shapeflow <command> --manifold spec.json ...``.

Exit status is 0 on success, 1 for usage or input errors and 2 for numeric
failures, which are reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .curvature import total_curvature
from .errors import ShapeFlowError
from .ga import Rotor, grade_components
from .manifold import Manifold, ManifoldSpecError, manifold_from_json, shape_tensor
from .shapemin import ShapeMinProblem, shape_min_trace, sigma_functional, verify_minimality
from .traceio import read_trace_csv, trace_to_json, write_trace_csv, write_trace_gnuplot
from .transport import CurveTrace, geodesic_trace, holonomy, named_loop, transport_rotors

DEFAULT_STEP = 1e-3
DEFAULT_SEED = 0


class UsageError(Exception):
    """Bad command-line input; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _vector(text: str) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError("vector components must be finite")
    return np.array(values)


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError("must be a positive number")
    return value


def _nonnegative(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError("must be a non-negative number")
    return value


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show defaults only for options that have one."""

    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    parser = _Parser(prog="shapeflow", description="Shape-tensor geometry of embedded manifolds.", formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False, formatter_class=fmt)
    common.add_argument("--manifold", required=True, type=Path, help="manifold JSON description")
    common.add_argument("--out", type=Path, default=None, help="output file (stdout when omitted)")
    common.add_argument("--step", type=_positive, default=DEFAULT_STEP, help="integration / sampling step")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed")
    common.add_argument(
        "--format", choices=("csv", "json", "gnuplot"), default=None,
        help="output format (traces default to csv, results to json)",
    )

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_text, description=help_text, formatter_class=fmt)

    p = add("shape", "shape tensor S(a) at a point")
    p.add_argument("--x0", type=_vector, required=True, help="point, e.g. 1,0,0")
    p.add_argument("--a", type=_vector, required=True, help="direction")

    p = add("curvature", "total curvature S(a) x S(b) and its intrinsic/extrinsic split")
    p.add_argument("--x0", type=_vector, required=True, help="point")
    p.add_argument("--a", type=_vector, required=True, help="first tangent direction")
    p.add_argument("--b", type=_vector, required=True, help="second tangent direction")

    p = add("transport", "parallel-transport a vector along a geodesic or a named loop")
    p.add_argument("--x0", type=_vector, help="start point (with --u0 and --length)")
    p.add_argument("--u0", type=_vector, help="start direction")
    p.add_argument("--length", type=_nonnegative, help="arc length")
    p.add_argument("--loop", help="named sphere loop instead of a geodesic: octant, equator, latitude:<deg>")
    p.add_argument("--vector", type=_vector, required=True, help="vector to transport")

    p = add("geodesic", "trace a geodesic from (x0, u0)")
    p.add_argument("--x0", type=_vector, required=True, help="start point")
    p.add_argument("--u0", type=_vector, required=True, help="unit tangent direction")
    p.add_argument("--length", type=_nonnegative, required=True, help="arc length")

    p = add("shapemin", "trace a shape-minimizing curve from (x0, u0)")
    p.add_argument("--x0", type=_vector, required=True, help="start point")
    p.add_argument("--u0", type=_vector, required=True, help="unit tangent direction")
    p.add_argument("--length", type=_nonnegative, required=True, help="arc length")

    p = add("holonomy", "holonomy rotor of a closed loop")
    p.add_argument("--loop", help="named sphere loop: octant, equator, latitude:<deg>")
    p.add_argument("--trace", type=Path, help="closed trace CSV instead of a named loop")

    p = add("verify", "perturbation test of Sigma around a geodesic or a given trace")
    p.add_argument("--x0", type=_vector, help="start point of a geodesic (with --u0 and --length)")
    p.add_argument("--u0", type=_vector, help="start direction")
    p.add_argument("--length", type=_nonnegative, help="arc length")
    p.add_argument("--trace", type=Path, help="trace CSV instead of a geodesic")
    p.add_argument("--perturbations", type=int, default=20, help="number of random perturbations")
    p.add_argument("--amplitude", type=_positive, default=1e-2, help="perturbation size epsilon")
    return parser


# -- helpers -----------------------------------------------------------------------------


def _load_manifold(path: Path) -> Manifold:
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read manifold file {path}: {exc.strerror}") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"manifold file {path} is not valid JSON: {exc}") from None
    try:
        return manifold_from_json(spec)
    except ManifoldSpecError as exc:
        raise UsageError(f"invalid manifold description: {exc}") from None


def _check_dim(m: Manifold, name: str, v: np.ndarray | None) -> np.ndarray:
    if v is None:
        raise UsageError(f"--{name} is required")
    if v.shape != (m.ambient_dim,):
        raise UsageError(f"--{name} must have {m.ambient_dim} components, got {v.size}")
    return v


def _on_manifold(m: Manifold, x: np.ndarray) -> np.ndarray:
    p = m.project(x)
    if np.linalg.norm(p - x) > 1e-6 * (1.0 + np.linalg.norm(x)):
        raise UsageError(f"--x0 is not on the manifold (distance {np.linalg.norm(p - x):.3g})")
    return p


def _unit_tangent_arg(m: Manifold, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    t = m.tangent_projector(x) @ u
    if np.linalg.norm(t) < 1e-12:
        raise UsageError("--u0 has no tangential component")
    return t / np.linalg.norm(t)


def _rotor_json(r: Rotor) -> dict[str, float]:
    return {k: float(v) for k, v in r.value.to_dict().items()}


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _render_trace(trace: CurveTrace, fmt: str | None, extra: dict | None = None) -> str:
    fmt = fmt or "csv"
    buf = io.StringIO()
    if fmt == "csv":
        write_trace_csv(trace, buf)
    elif fmt == "gnuplot":
        write_trace_gnuplot(trace, buf)
    else:
        payload = trace_to_json(trace)
        payload.update(extra or {})
        return _dump_json(payload)
    return buf.getvalue()


def _render_result(result: dict, fmt: str | None) -> str:
    if fmt not in (None, "json"):
        raise UsageError(f"this command writes JSON results; --format {fmt} is not supported")
    return _dump_json(result)


def _start(m: Manifold, args) -> tuple[np.ndarray, np.ndarray, float]:
    x0 = _on_manifold(m, _check_dim(m, "x0", args.x0))
    u0 = _unit_tangent_arg(m, x0, _check_dim(m, "u0", args.u0))
    if args.length is None:
        raise UsageError("--length is required")
    return x0, u0, args.length


def _named_loop(m: Manifold, name: str, step: float) -> CurveTrace:
    try:
        return named_loop(m, name, step)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- commands ----------------------------------------------------------------------------


def _cmd_shape(m: Manifold, args) -> str:
    x = _on_manifold(m, _check_dim(m, "x0", args.x0))
    a = _check_dim(m, "a", args.a)
    s, noise = shape_tensor(m, x, a, return_noise=True)
    return _render_result({"point": x.tolist(), "a": a.tolist(), "bivector": grade_components(s, 2), "noise": noise}, args.format)


def _cmd_curvature(m: Manifold, args) -> str:
    x = _on_manifold(m, _check_dim(m, "x0", args.x0))
    cv = total_curvature(m, x, _check_dim(m, "a", args.a), _check_dim(m, "b", args.b))
    out = {"point": cv.base_point.tolist(), "a": cv.a.tolist(), "b": cv.b.tolist()}
    for key in ("total", "intrinsic", "extrinsic"):
        out[key] = grade_components(getattr(cv, key), 2)
    return _render_result(out, args.format)


def _cmd_transport(m: Manifold, args) -> str:
    if args.loop is not None:
        trace = _named_loop(m, args.loop, args.step)
    else:
        x0, u0, length = _start(m, args)
        trace = geodesic_trace(m, x0, u0, length, args.step)
    v = _check_dim(m, "vector", args.vector)
    rotors = transport_rotors(trace)
    moved = rotors[-1].apply_vector(v)
    if args.format in ("csv", "gnuplot"):
        return _render_trace(trace.with_rotors(rotors), args.format)
    return _dump_json({
        "start": trace.points[0].tolist(),
        "end": trace.points[-1].tolist(),
        "vector": v.tolist(),
        "transported": moved.tolist(),
        "rotor": _rotor_json(rotors[-1]),
    })


def _cmd_geodesic(m: Manifold, args) -> str:
    x0, u0, length = _start(m, args)
    return _render_trace(geodesic_trace(m, x0, u0, length, args.step), args.format)


def _cmd_shapemin(m: Manifold, args) -> str:
    x0, u0, length = _start(m, args)
    trace = shape_min_trace(ShapeMinProblem(m, x0, u0, length, args.step))
    return _render_trace(trace, args.format, {"sigma": sigma_functional(trace)})


def _read_trace(m: Manifold, path: Path) -> CurveTrace:
    try:
        return read_trace_csv(path, m)
    except OSError as exc:
        raise UsageError(f"cannot read trace file {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"invalid trace file {path}: {exc}") from None


def _cmd_holonomy(m: Manifold, args) -> str:
    if (args.loop is None) == (args.trace is None):
        raise UsageError("give exactly one of --loop and --trace")
    loop = _named_loop(m, args.loop, args.step) if args.loop else _read_trace(m, args.trace)
    try:
        rotor = holonomy(m, loop)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return _render_result({"rotation_angle": rotor.angle, "rotor": _rotor_json(rotor)}, args.format)


def _cmd_verify(m: Manifold, args) -> str:
    if args.trace is not None:
        trace = _read_trace(m, args.trace)
    else:
        x0, u0, length = _start(m, args)
        trace = geodesic_trace(m, x0, u0, length, args.step)
    if args.perturbations < 1:
        raise UsageError("--perturbations must be at least 1")
    try:
        report = verify_minimality(m, trace, args.perturbations, args.amplitude, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return _render_result(report, args.format)


_COMMANDS = {
    "shape": _cmd_shape,
    "curvature": _cmd_curvature,
    "transport": _cmd_transport,
    "geodesic": _cmd_geodesic,
    "shapemin": _cmd_shapemin,
    "holonomy": _cmd_holonomy,
    "verify": _cmd_verify,
}


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
        m = _load_manifold(args.manifold)
        text = _COMMANDS[args.command](m, args)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return 1
    except ShapeFlowError as exc:
        stderr.write(json.dumps(exc.to_json()) + "\n")
        return 2
    except ValueError as exc:
        stderr.write(f"invalid argument: {exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.out is not None:
        try:
            args.out.write_text(text)
        except OSError as exc:
            stderr.write(f"cannot write {args.out}: {exc.strerror}\n")
            return 1
    else:
        stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
