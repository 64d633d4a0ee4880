"""
Parallel transport by shape-tensor rotors, covariant derivatives, geodesics
and holonomy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ShapeFlowError
from .ga import Multivector, Rotor, commutator, geometric_product, inner_product, magnitude, reverse, rotor_exp
from .manifold import Manifold, ParametricChart, Sphere, along, shape_tensor

log = logging.getLogger(__name__)

ROTOR_DRIFT_WARN = 1e-6
LOOP_CLOSURE_TOL = 1e-8


@dataclass(frozen=True)
class CurveTrace:
    """Arc-length samples (tau, x, u) of a curve on a manifold.

    Repeated positions with zero tau increment mark corners of piecewise
    curves; integrators skip them.
    """

    manifold: Manifold
    taus: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    step: float
    rotors: tuple[Rotor, ...] | None = None

    def __post_init__(self) -> None:
        taus = np.asarray(self.taus, dtype=float)
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        tan = np.atleast_2d(np.asarray(self.tangents, dtype=float))
        if not (len(taus) == len(pts) == len(tan)):
            raise ValueError("taus, points and tangents must have the same length")
        if self.rotors is not None and len(self.rotors) != len(taus):
            raise ValueError("need one rotor per sample")
        for arr in (taus, pts, tan):
            arr.flags.writeable = False
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "tangents", tan)

    def __len__(self) -> int:
        return len(self.taus)

    @property
    def length(self) -> float:
        return float(self.taus[-1] - self.taus[0]) if len(self) else 0.0

    def with_rotors(self, rotors) -> "CurveTrace":
        return replace(self, rotors=tuple(rotors))

    def reversed(self) -> "CurveTrace":
        taus = self.taus[-1] - self.taus[::-1]
        return CurveTrace(self.manifold, taus, self.points[::-1], -self.tangents[::-1], self.step)

    def concatenate(self, other: "CurveTrace") -> "CurveTrace":
        """Join two traces; the corner keeps both samples at the same tau."""
        taus = np.concatenate([self.taus, other.taus - other.taus[0] + self.taus[-1]])
        return CurveTrace(
            self.manifold,
            taus,
            np.vstack([self.points, other.points]),
            np.vstack([self.tangents, other.tangents]),
            max(self.step, other.step),
        )


@dataclass(frozen=True)
class MultivectorField:
    """A multivector-valued function of ambient points."""

    evaluator: Callable[[np.ndarray], Multivector]
    descriptor: str = ""

    def __call__(self, x) -> Multivector:
        return self.evaluator(np.asarray(x, dtype=float))


def _unit_tangent(m: Manifold, x, u) -> np.ndarray:
    v = m.tangent_projector(x) @ np.asarray(u, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("direction has no tangential component")
    return v / nrm


def transport_step(m: Manifold, x, a, A: Multivector, eps: float) -> Multivector:
    """Transport A from x to x + eps a: exp(-eps S(a)/2) A exp(eps S(a)/2)."""
    s = shape_tensor(m, x, a)
    return rotor_exp(s * (-0.5 * eps)).apply(A)


def _hermite_midpoint(m: Manifold, x0, u0, x1, u1, h):
    mid = 0.5 * (x0 + x1) + h * (u0 - u1) / 8.0
    vel = 1.5 * (x1 - x0) / h - 0.25 * (u0 + u1)
    xm = m.project(mid)
    return xm, _unit_tangent(m, xm, vel)


def transport_rotors(trace: CurveTrace) -> list[Rotor]:
    """Rotors R(tau_i) solving u . dR = -S(u) R / 2 with R(tau_0) = 1 (RK4).

    Midpoint stages use the cubic Hermite interpolant of the samples,
    re-attached to the manifold.
    """
    m = trace.manifold
    dim = m.ambient_dim
    r = Multivector.scalar(dim, 1.0)
    rotors = [Rotor(r)]
    if len(trace) < 2:
        return rotors
    worst = 0.0
    s0 = shape_tensor(m, trace.points[0], trace.tangents[0])
    for i in range(len(trace) - 1):
        x0, u0 = trace.points[i], trace.tangents[i]
        x1, u1 = trace.points[i + 1], trace.tangents[i + 1]
        h = float(trace.taus[i + 1] - trace.taus[i])
        s1 = shape_tensor(m, x1, u1)
        if h > 1e-14:
            xm, um = _hermite_midpoint(m, x0, u0, x1, u1, h)
            sm = shape_tensor(m, xm, um)
            k1 = geometric_product(s0, r) * -0.5
            k2 = geometric_product(sm, r + k1 * (0.5 * h)) * -0.5
            k3 = geometric_product(sm, r + k2 * (0.5 * h)) * -0.5
            k4 = geometric_product(s1, r + k3 * h) * -0.5
            r = r + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0)
            worst = max(worst, magnitude(geometric_product(reverse(r), r) - 1.0))
            r = Rotor(r).value
        rotors.append(Rotor(r))
        s0 = s1
    if worst > ROTOR_DRIFT_WARN:
        log.warning("rotor normalisation drift %.3g exceeds %.1g", worst, ROTOR_DRIFT_WARN)
    return rotors


def transport_along(trace: CurveTrace, A: Multivector) -> tuple[Multivector, Rotor]:
    """Parallel-transport A from the first to the last sample of ``trace``."""
    rotor = transport_rotors(trace)[-1]
    return rotor.apply(A), rotor


def covariant_derivative(m: Manifold, field: Callable, x, a) -> Multivector:
    """a . D A = a . dA - A x S(a)."""
    x = np.asarray(x, dtype=float)
    a = m.tangent_projector(x) @ np.asarray(a, dtype=float)
    value = field(x)
    if not isinstance(value, Multivector):
        value = Multivector.scalar(m.ambient_dim, float(value))
        deriv = Multivector.scalar(m.ambient_dim, float(along(m, field, x, a)))
    else:
        deriv = along(m, field, x, a)
    return deriv - commutator(value, shape_tensor(m, x, a))


def geodesic_rhs(m: Manifold, x, u) -> tuple[np.ndarray, np.ndarray]:
    """(dx/dtau, du/dtau) = (u, u . S(u)) evaluated after re-attaching x to the manifold."""
    xp = m.project(x)
    s = shape_tensor(m, xp, u)
    acc = inner_product(Multivector.vector(u), s).vector_part()
    return np.asarray(u, dtype=float), acc


def _uniform_steps(length: float, step: float) -> tuple[int, float]:
    if not step > 0:
        raise ValueError("step must be positive")
    if length < 0:
        raise ValueError("length must be non-negative")
    n = max(1, math.ceil(length / step - 1e-9))
    return n, length / n


def integrate_rk4(m: Manifold, rhs, x0, u0, length: float, step: float, tau0: float = 0.0) -> CurveTrace:
    """Fixed-step RK4 for a second-order system on the manifold.

    After each step x is projected back and u is made tangent and unit. The
    step is shrunk so that an integer number of steps covers ``length``.
    """
    n, h = _uniform_steps(length, step)
    x = m.project(x0)
    u = _unit_tangent(m, x, u0)
    taus = [tau0]
    pts = [x]
    tans = [u]
    for i in range(n):
        try:
            k1x, k1u = rhs(m, x, u)
            k2x, k2u = rhs(m, x + 0.5 * h * k1x, u + 0.5 * h * k1u)
            k3x, k3u = rhs(m, x + 0.5 * h * k2x, u + 0.5 * h * k2u)
            k4x, k4u = rhs(m, x + h * k3x, u + h * k3u)
            x = m.project(x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x))
            u = _unit_tangent(m, x, u + (h / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u))
        except ShapeFlowError as err:
            if err.tau is None:
                err.tau = tau0 + i * h
            raise
        taus.append(tau0 + (i + 1) * h)
        pts.append(x)
        tans.append(u)
    return CurveTrace(m, np.array(taus), np.array(pts), np.array(tans), h)


def geodesic_trace(m: Manifold, x0, u0, length: float, step: float) -> CurveTrace:
    """Trace the geodesic u . du = u . S(u) from (x0, u0) over arc length ``length``."""
    return integrate_rk4(m, geodesic_rhs, x0, u0, length, step)


def holonomy(m: Manifold, loop: CurveTrace) -> Rotor:
    """Rotor accumulated by parallel transport around a closed loop."""
    if len(loop) < 2:
        raise ValueError("loop needs at least two samples")
    gap = float(np.linalg.norm(loop.points[-1] - loop.points[0]))
    if gap > LOOP_CLOSURE_TOL:
        raise ValueError(f"loop is not closed (end points differ by {gap:.3g})")
    if loop.manifold is not m:
        loop = replace(loop, manifold=m)
    return transport_rotors(loop)[-1]


def rotation_angle(rotor: Rotor) -> float:
    """Angle of a single-plane rotation, 2 acos <R>_0, in [0, 2 pi]."""
    return rotor.angle


# -- curve builders -------------------------------------------------------------------


def chart_curve_trace(chart: ParametricChart, u_start: float, u_end: float, step: float) -> CurveTrace:
    """Arc-length samples of the image of [u_start, u_end] under a 1-parameter chart."""
    if chart.dim != 1:
        raise ValueError("chart_curve_trace needs a one-dimensional chart")
    fine = np.linspace(u_start, u_end, 4001)
    speed = np.array([np.linalg.norm(chart.jacobian([v])[:, 0]) for v in fine])
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(fine))])
    n, h = _uniform_steps(arc[-1], step)
    targets = np.linspace(0.0, arc[-1], n + 1)
    params = np.interp(targets, arc, fine)
    pts = np.array([chart.point([v]) for v in params])
    tans = np.array([chart.jacobian([v])[:, 0] for v in params])
    tans = tans / np.linalg.norm(tans, axis=1, keepdims=True)
    return CurveTrace(chart, targets, pts, tans, h)


def _sphere_embed(m: Sphere, v) -> np.ndarray:
    out = np.zeros(m.ambient_dim)
    out[: len(v)] = v
    return out


def latitude_loop(m: Sphere, latitude_deg: float, step: float) -> CurveTrace:
    """Closed circle of constant latitude in the (e1, e2, e3) subspace."""
    if m.ambient_dim < 3:
        raise ValueError("latitude loops need a sphere in at least three dimensions")
    lat = math.radians(latitude_deg)
    rho = m.radius * math.cos(lat)
    z = m.radius * math.sin(lat)
    if rho <= 0:
        raise ValueError("latitude loop degenerates at the poles")
    n, h = _uniform_steps(2 * math.pi * rho, step)
    s = np.arange(n + 1) * h
    ang = s / rho
    ang[-1] = 2 * math.pi
    pts = np.array([_sphere_embed(m, [rho * math.cos(t), rho * math.sin(t), z]) for t in ang])
    pts[-1] = pts[0]
    tans = np.array([_sphere_embed(m, [-math.sin(t), math.cos(t), 0.0]) for t in ang])
    tans[-1] = tans[0]
    return CurveTrace(m, s, pts, tans, h)


def octant_loop(m: Sphere, step: float) -> CurveTrace:
    """Geodesic triangle e1 -> e2 -> e3 -> e1 (scaled to the radius)."""
    if m.ambient_dim < 3:
        raise ValueError("octant loop needs a sphere in at least three dimensions")
    r = m.radius
    e = [_sphere_embed(m, v) for v in np.eye(3)]
    quarter = 0.5 * math.pi * r
    legs = [
        geodesic_trace(m, r * e[0], e[1], quarter, step),
        geodesic_trace(m, r * e[1], e[2], quarter, step),
        geodesic_trace(m, r * e[2], e[0], quarter, step),
    ]
    loop = legs[0].concatenate(legs[1]).concatenate(legs[2])
    pts = np.array(loop.points)
    pts[-1] = pts[0]
    return replace(loop, points=pts)


def named_loop(m: Manifold, name: str, step: float) -> CurveTrace:
    """Built-in loops on spheres: ``octant``, ``equator`` or ``latitude:<deg>``."""
    if not isinstance(m, Sphere):
        raise ValueError("named loops are only defined on spheres")
    if name == "octant":
        return octant_loop(m, step)
    if name == "equator":
        return latitude_loop(m, 0.0, step)
    if name.startswith("latitude:"):
        try:
            deg = float(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad latitude in loop name {name!r}") from None
        if not -90.0 < deg < 90.0:
            raise ValueError("latitude must lie strictly between -90 and 90 degrees")
        return latitude_loop(m, deg, step)
    raise ValueError(f"unknown loop {name!r}; expected octant, equator or latitude:<deg>")
