"""
The shape-length functional, its Euler-Lagrange residual, an initial-value
integrator for shape-minimizing curves, and closed-form sphere/ellipsoid curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline

from .errors import DegenerateShapeError, SpanConditionError
from .ga import (
    LinearMap,
    Multivector,
    inner_product,
    magnitude,
    outermorphism,
    rotor_exp,
    scalar_product,
    symmetric_inv_sqrt,
    symmetric_sqrt,
)
from .manifold import Manifold, _gram_schmidt, shape_tensor, tangent_frame
from .transport import CurveTrace, _uniform_steps, _unit_tangent, integrate_rk4

MIN_SHAPE_MAGNITUDE = 1e-8
SPAN_RESIDUAL_LIMIT = 1e-3
# step for the x-derivative of S(u); the shape tensor is itself a difference quotient
OUTER_FD_STEP = 1e-4


@dataclass(frozen=True)
class ShapeMinProblem:
    manifold: Manifold
    x0: np.ndarray
    u0: np.ndarray
    length: float
    step: float
    min_shape_magnitude: float = MIN_SHAPE_MAGNITUDE

    def __post_init__(self) -> None:
        m = self.manifold
        x0 = np.asarray(self.x0, dtype=float)
        u0 = np.asarray(self.u0, dtype=float)
        if np.linalg.norm(m.project(x0) - x0) > 1e-9 * (1.0 + np.linalg.norm(x0)):
            raise ValueError("x0 is not on the manifold")
        if abs(np.linalg.norm(u0) - 1.0) > 1e-8 or np.linalg.norm(u0 - m.tangent_projector(x0) @ u0) > 1e-8:
            raise ValueError("u0 must be a unit tangent vector")
        if not self.step > 0 or not self.length >= 0:
            raise ValueError("need step > 0 and length >= 0")
        s = magnitude(shape_tensor(m, x0, u0))
        if s <= self.min_shape_magnitude:
            raise DegenerateShapeError(f"|S(u0)| = {s:.3g} is below the threshold", tau=0.0)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "u0", u0)


def sigma_functional(trace: CurveTrace) -> float:
    """Trapezoidal integral of |S(u)| over arc length."""
    m = trace.manifold
    vals = np.array([magnitude(shape_tensor(m, x, u)) for x, u in zip(trace.points, trace.tangents)])
    if len(vals) < 2:
        return 0.0
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(trace.taus)))


def _unit_shape(m: Manifold, x, u, threshold: float, tau=None) -> Multivector:
    s = shape_tensor(m, x, u)
    mag = magnitude(s)
    if mag <= threshold:
        raise DegenerateShapeError(f"|S(u)| = {mag:.3g} is below the threshold", tau=tau)
    return s * (1.0 / mag)


def euler_lagrange_residual(m: Manifold, trace: CurveTrace, i: int, threshold: float = MIN_SHAPE_MAGNITUDE) -> np.ndarray:
    """Components <~S(a_j) u.d(S(u)/|S(u)|)>_0 on an orthonormal tangent basis a_j."""
    if not 0 < i < len(trace) - 1:
        raise ValueError("residual needs an interior sample")
    dt = float(trace.taus[i + 1] - trace.taus[i - 1])
    if dt <= 0:
        raise ValueError("residual is undefined at a corner")
    tau = float(trace.taus[i])
    _unit_shape(m, trace.points[i], trace.tangents[i], threshold, tau)
    sp = _unit_shape(m, trace.points[i + 1], trace.tangents[i + 1], threshold, tau)
    sm = _unit_shape(m, trace.points[i - 1], trace.tangents[i - 1], threshold, tau)
    deriv = (sp - sm) * (1.0 / dt)
    basis = tangent_frame(m, trace.points[i]).tangent
    return np.array([scalar_product(shape_tensor(m, trace.points[i], a).reverse(), deriv) for a in basis])


def _shape_rate_in_x(m: Manifold, x, u) -> Multivector:
    """(u.d_x S)(u): derivative of S(u) along u with the argument held fixed."""
    h = OUTER_FD_STEP * (1.0 + float(np.linalg.norm(x)))
    xp, xm = m.neighbors(x, u, h)
    return (shape_tensor(m, xp, u) - shape_tensor(m, xm, u)) * (1.0 / (2.0 * h))


def _shape_min_rhs(p: ShapeMinProblem, residuals: list):
    m = p.manifold

    def rhs(_m, x, u):
        x = m.project(x)
        u = _unit_tangent(m, x, u)
        s = shape_tensor(m, x, u)
        mag = magnitude(s)
        if mag <= p.min_shape_magnitude:
            raise DegenerateShapeError(f"|S(u)| = {mag:.3g} is below the threshold")
        s_hat = s * (1.0 / mag)

        def perp(b: Multivector) -> np.ndarray:
            return (b - s_hat * scalar_product(s_hat.reverse(), b)).coeffs

        frame = tangent_frame(m, x).tangent
        others, _ = _gram_schmidt([t - np.dot(t, u) * u for t in frame], basis=[u], tol=1e-10)
        acc_normal = inner_product(Multivector.vector(u), s).vector_part()
        rhs_vec = -perp(_shape_rate_in_x(m, x, u))
        if others:
            cols = np.array([perp(shape_tensor(m, x, t)) for t in others]).T
            coef, *_ = np.linalg.lstsq(cols, rhs_vec, rcond=None)
            w = np.array(others).T @ coef
            miss = float(np.linalg.norm(cols @ coef - rhs_vec))
        else:
            w = np.zeros_like(u)
            miss = float(np.linalg.norm(rhs_vec))
        residuals.append(miss)
        if miss > SPAN_RESIDUAL_LIMIT * mag:
            raise SpanConditionError(
                f"shape bivectors do not span the required space (least-squares residual {miss:.3g})"
            )
        return u, w + acc_normal

    return rhs


def shape_min_trace(p: ShapeMinProblem, return_residuals: bool = False):
    """Integrate u.d(S(u)/|S(u)|) = 0 in arc length from (x0, u0).

    The tangential acceleration w (w.u = 0) is the least-squares solution of
    d/dtau S_hat = 0; the transverse acceleration is u . S(u).
    """
    residuals: list[float] = []
    trace = integrate_rk4(p.manifold, _shape_min_rhs(p, residuals), p.x0, p.u0, p.length, p.step)
    if return_residuals:
        return trace, np.array(residuals)
    return trace


# -- closed forms ------------------------------------------------------------------------


def sphere_geodesic_closed_form(r: float, x0, u0, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """x(tau) = exp(-tau S0/2) x0 exp(tau S0/2) and u(tau) = x(tau) . S0, S0 = x0 u0 / r^2."""
    x0 = np.asarray(x0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    if not r > 0 or abs(np.linalg.norm(x0) - r) > 1e-10 * r:
        raise ValueError("x0 must lie on the sphere of radius r")
    if abs(np.dot(x0, u0)) > 1e-10 * r or abs(np.linalg.norm(u0) - 1.0) > 1e-10:
        raise ValueError("u0 must be a unit tangent vector at x0")
    s0 = (Multivector.vector(x0) * Multivector.vector(u0)) * (1.0 / r**2)
    x = rotor_exp(s0 * (-0.5 * tau)).apply_vector(x0)
    u = inner_product(Multivector.vector(x), s0).vector_part()
    return x, u


@dataclass(frozen=True)
class _EllipsoidCurve:
    sqrt_a: LinearMap
    inv_sqrt_a: LinearMap
    y0: np.ndarray
    plane: np.ndarray  # orthonormal rows spanning the rotation plane of C = A^1/2(B0)
    rate: float  # rotation angle per unit tau


def _ellipsoid_curve(a: LinearMap, x0, u0) -> _EllipsoidCurve:
    x0 = np.asarray(x0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    if not (a.symmetric and a.positive_definite):
        raise ValueError("A must be symmetric positive definite")
    ax = a.matrix @ x0
    if abs(np.dot(x0, ax) - 1.0) > 1e-10:
        raise ValueError("x0 must satisfy x0 . A(x0) = 1")
    if abs(np.dot(u0, ax)) > 1e-10 * np.linalg.norm(ax) or abs(np.linalg.norm(u0) - 1.0) > 1e-10:
        raise ValueError("u0 must be a unit tangent vector at x0")
    sq = symmetric_sqrt(a)
    isq = symmetric_inv_sqrt(a)
    b0 = Multivector.vector(x0) ^ Multivector.vector(u0)
    b0 = b0 * (1.0 / magnitude(outermorphism(a, b0)))
    # C = A^1/2(B0) = (A^1/2 x0) ^ (A^1/2 u0) / |A(B0)|, so it rotates in that plane
    p, q = sq(x0), sq(u0)
    plane, _ = _gram_schmidt([p, q], tol=1e-14)
    if len(plane) != 2:
        raise ValueError("x0 and u0 must be independent")
    rate = magnitude(outermorphism(sq, b0))
    return _EllipsoidCurve(sq, isq, sq(x0), np.array(plane), rate)


def ellipsoid_closed_form(a: LinearMap, x0, u0, tau: float) -> np.ndarray:
    """x(tau) = A^-1/2(R A^1/2(x0) ~R) with R = exp(-tau A^1/2(B0)/2), B0 = x0^u0/|A(x0^u0)|.

    tau is the curve's own parameter, not arc length.
    """
    curve = _ellipsoid_curve(a, x0, u0)
    b0 = Multivector.vector(x0) ^ Multivector.vector(u0)
    b0 = b0 * (1.0 / magnitude(outermorphism(a, b0)))
    c = outermorphism(curve.sqrt_a, b0)
    return curve.inv_sqrt_a(rotor_exp(c * (-0.5 * tau)).apply_vector(curve.y0))


def _ellipsoid_points(curve: _EllipsoidCurve, taus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Points and d/dtau for an array of parameters, as a planar rotation of y0."""
    e1, e2 = curve.plane
    c1, c2 = float(np.dot(curve.y0, e1)), float(np.dot(curve.y0, e2))
    rest = curve.y0 - c1 * e1 - c2 * e2
    ang = curve.rate * np.asarray(taus, dtype=float)
    cos, sin = np.cos(ang)[:, None], np.sin(ang)[:, None]
    y = rest + (c1 * cos - c2 * sin) * e1 + (c1 * sin + c2 * cos) * e2
    dy = curve.rate * ((-c1 * sin - c2 * cos) * e1 + (c1 * cos - c2 * sin) * e2)
    m = curve.inv_sqrt_a.matrix
    return y @ m.T, dy @ m.T


def ellipsoid_closed_form_trace(a: LinearMap, x0, u0, tau_max: float, step: float, manifold: Manifold | None = None) -> CurveTrace:
    """The closed-form curve over tau in [0, tau_max], resampled to arc length."""
    from .manifold import Quadric

    curve = _ellipsoid_curve(a, x0, u0)
    fine = np.linspace(0.0, tau_max, 20001)
    _, dx = _ellipsoid_points(curve, fine)
    speed = np.linalg.norm(dx, axis=1)
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(fine))])
    n, h = _uniform_steps(float(arc[-1]), step)
    s = np.linspace(0.0, arc[-1], n + 1)
    params = np.interp(s, arc, fine)
    pts, vel = _ellipsoid_points(curve, params)
    tans = vel / np.linalg.norm(vel, axis=1, keepdims=True)
    m = manifold if manifold is not None else Quadric(a)
    return CurveTrace(m, s, pts, tans, h)


def ellipsoid_plane_check(a: LinearMap, x0, u0, point) -> tuple[float, float]:
    """(|x.A(x) - 1|, |x ^ B0|) for a candidate point of the closed-form curve."""
    x = np.asarray(point, dtype=float)
    b0 = Multivector.vector(x0) ^ Multivector.vector(u0)
    b0 = b0 * (1.0 / magnitude(outermorphism(a, b0)))
    return abs(float(np.dot(x, a.matrix @ x)) - 1.0), magnitude(Multivector.vector(x) ^ b0)


# -- stationarity report -----------------------------------------------------------------


_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])


def _derivative4(points: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite-difference derivative of uniformly spaced samples."""
    d = np.empty_like(points)
    d[2:-2] = points[:-4] - 8 * points[1:-3] + 8 * points[3:-1] - points[4:]
    d[0] = _EDGE0 @ points[:5]
    d[1] = _EDGE1 @ points[:5]
    d[-1] = -(_EDGE0 @ points[::-1][:5])
    d[-2] = -(_EDGE1 @ points[::-1][:5])
    return d / (12 * h)


def _sigma_param(m: Manifold, points: np.ndarray, h: float) -> float:
    """Sigma of a uniformly parametrised sample: Simpson integral of |S(dx/ds)| ds."""
    vel = _derivative4(points, h)
    vals = np.array([magnitude(shape_tensor(m, x, v)) for x, v in zip(points, vel)])
    return float(simpson(vals, dx=h))


def verify_minimality(
    m: Manifold,
    trace: CurveTrace,
    num_perturbations: int = 20,
    amplitude: float = 1e-2,
    seed: int = 0,
    epsilons: tuple[float, ...] = (1e-2, 1e-3, 1e-4),
    max_samples: int = 401,
) -> dict:
    """Compare Sigma of the curve with endpoint-fixing perturbations of it.

    Each perturbation is x + eps sin(k pi s / L) P(c), re-attached to the
    manifold, for a random integer k and random ambient vector c. Sigma is
    evaluated in the original parameter, so it does not depend on how the
    perturbed curve is parametrised.
    """
    if len(trace) < 2 or np.any(np.diff(trace.taus) <= 0):
        raise ValueError("minimality check needs a smooth trace with increasing tau")
    n = min(max_samples - 1, len(trace) - 1)
    n = max(6, n - n % 2)
    taus = np.linspace(trace.taus[0], trace.taus[-1], n + 1)
    h = float(taus[1] - taus[0])
    spline = CubicHermiteSpline(trace.taus, trace.points, trace.tangents)
    base = np.array([m.project(x) for x in spline(taus)])
    base[0], base[-1] = trace.points[0], trace.points[-1]
    length = float(taus[-1] - taus[0])
    sigma_base = _sigma_param(m, base, h)

    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(num_perturbations):
        k = int(rng.integers(1, 4))
        c = rng.standard_normal(m.ambient_dim)
        bump = np.sin(k * math.pi * (taus - taus[0]) / length)
        vecs = np.array([m.tangent_projector(x) @ c for x in base])
        vecs /= max(np.max(np.linalg.norm(vecs, axis=1)), 1e-300)
        fields.append(bump[:, None] * vecs)

    def perturbed(field, eps):
        pts = np.array([m.project(x + eps * f) for x, f in zip(base, field)])
        pts[0], pts[-1] = base[0], base[-1]
        return _sigma_param(m, pts, h)

    deltas = [perturbed(f, amplitude) - sigma_base for f in fields]
    sweep = []
    for eps in epsilons:
        delta = perturbed(fields[0], eps) - sigma_base if fields else 0.0
        sweep.append({"epsilon": eps, "delta": delta, "ratio": delta / eps})
    return {
        "sigma_base": sigma_base,
        "deltas": deltas,
        "summary": {
            "min": float(np.min(deltas)) if deltas else 0.0,
            "median": float(np.median(deltas)) if deltas else 0.0,
            "max": float(np.max(deltas)) if deltas else 0.0,
        },
        "epsilon_sweep": sweep,
    }
