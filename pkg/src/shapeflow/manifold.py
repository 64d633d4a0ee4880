"""
Embedded manifolds, their pseudoscalar field, and the shape tensor.

Hypersurfaces (sphere, quadric, implicit level set) are extended off the
surface by the normalised gradient of their defining function, so every
field built from the unit normal can be differentiated in ambient space.
Parametric charts are differentiated in parameter space.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateChartError, DegeneratePointError, ProjectionError
from .expr import ScalarFieldExpr, parse_scalar_field
from .ga import (
    LinearMap,
    Multivector,
    bivector_from_vectors,
    blade_inverse,
    geometric_product,
    grade,
    magnitude,
    outer_product,
    scalar_product,
)

FD_EPS = np.finfo(float).eps ** (1.0 / 3.0)
MAX_PROJECTION_ITERATIONS = 50


def fd_step(x) -> float:
    """Central-difference step eps^(1/3) (1 + |x|)."""
    return FD_EPS * (1.0 + float(np.linalg.norm(x)))


def _gram_schmidt(vectors: Sequence[np.ndarray], basis: list[np.ndarray] | None = None, tol: float = 1e-6):
    """Orthonormalise ``vectors`` against ``basis``; returns (accepted, indices used)."""
    out = list(basis or [])
    used = []
    for i, v in enumerate(vectors):
        w = np.array(v, dtype=float)
        for b in out:
            w = w - np.dot(w, b) * b
        nrm = np.linalg.norm(w)
        if nrm > tol:
            out.append(w / nrm)
            used.append(i)
    return out[len(basis or []):], used


def _pivoted_seed_order(vectors: np.ndarray, count: int) -> list[int]:
    """Greedy choice of ``count`` rows that stay best conditioned under Gram-Schmidt."""
    chosen: list[int] = []
    basis: list[np.ndarray] = []
    for _ in range(count):
        best, best_norm, best_vec = -1, -1.0, None
        for i, v in enumerate(vectors):
            if i in chosen:
                continue
            w = v.copy()
            for b in basis:
                w = w - np.dot(w, b) * b
            nrm = np.linalg.norm(w)
            if nrm > best_norm + 1e-12:
                best, best_norm, best_vec = i, nrm, w
        if best_norm < 1e-6:
            raise DegeneratePointError("could not build a local frame: seeds degenerate")
        chosen.append(best)
        basis.append(best_vec / best_norm)
    return chosen


class Manifold(ABC):
    """An oriented n-dimensional manifold embedded in R^N."""

    dim: int
    ambient_dim: int
    orientation: int

    @abstractmethod
    def pseudoscalar_at(self, x) -> Multivector:
        ...

    @abstractmethod
    def project(self, x) -> np.ndarray:
        ...

    @abstractmethod
    def tangent_projector(self, x) -> np.ndarray:
        """N x N matrix of the orthogonal projection onto the tangent space at x."""

    @abstractmethod
    def neighbors(self, x, direction, h: float) -> tuple[np.ndarray, np.ndarray]:
        """Points on the manifold displaced by about +h and -h along unit ``direction``."""

    @abstractmethod
    def frame_field(self, x0) -> "FrameField":
        """A smooth orthonormal adapted frame field valid near ``x0``."""

    @abstractmethod
    def to_json(self) -> dict:
        ...

    def is_hypersurface(self) -> bool:
        return self.dim == self.ambient_dim - 1


# -- hypersurfaces ----------------------------------------------------------------


class Hypersurface(Manifold):
    """Level set phi(x) = level with unit normal orientation * grad phi / |grad phi|."""

    level: float

    @abstractmethod
    def phi_grad(self, x) -> tuple[float, np.ndarray]:
        ...

    @abstractmethod
    def phi_hessian(self, x) -> tuple[float, np.ndarray, np.ndarray]:
        ...

    def normal(self, x) -> np.ndarray:
        _, g = self.phi_grad(x)
        nrm = np.linalg.norm(g)
        if nrm < 1e-10:
            raise DegeneratePointError(f"gradient vanishes at {np.asarray(x).tolist()}")
        return self.orientation * g / nrm

    def pseudoscalar_at(self, x) -> Multivector:
        n = self.normal(x)
        return geometric_product(Multivector.pseudoscalar(self.ambient_dim), Multivector.vector(n))

    def tangent_projector(self, x) -> np.ndarray:
        n = self.normal(x)
        return np.eye(self.ambient_dim) - np.outer(n, n)

    def residual(self, x) -> float:
        return self.phi_grad(x)[0] - self.level

    def project(self, x) -> np.ndarray:
        x = np.array(x, dtype=float)
        tol = 1e-12 * (1.0 + abs(self.level))
        r = math.inf
        for _ in range(MAX_PROJECTION_ITERATIONS + 1):
            val, g = self.phi_grad(x)
            r = val - self.level
            if abs(r) <= tol:
                return x
            gg = float(np.dot(g, g))
            if gg < 1e-20:
                raise DegeneratePointError(f"gradient vanishes at {x.tolist()}")
            x = x - r * g / gg
        raise ProjectionError(f"projection did not converge in {MAX_PROJECTION_ITERATIONS} iterations", residual=abs(r))

    def neighbors(self, x, direction, h: float):
        x = np.asarray(x, dtype=float)
        return self.project(x + h * direction), self.project(x - h * direction)

    def frame_field(self, x0) -> "FrameField":
        p = self.tangent_projector(x0)
        order = _pivoted_seed_order(p.T, self.dim)
        return FrameField(self, tuple(order), ())


@dataclass(frozen=True)
class Sphere(Hypersurface):
    radius: float
    ambient_dim: int = 3
    orientation: int = 1

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 2 <= self.ambient_dim:
            raise ValueError("sphere needs ambient_dim >= 2")

    @property
    def dim(self) -> int:
        return self.ambient_dim - 1

    @property
    def level(self) -> float:
        return self.radius**2

    def phi_grad(self, x):
        x = np.asarray(x, dtype=float)
        return float(np.dot(x, x)), 2.0 * x

    def phi_hessian(self, x):
        v, g = self.phi_grad(x)
        return v, g, 2.0 * np.eye(self.ambient_dim)

    def to_json(self) -> dict:
        return {"kind": "sphere", "radius": self.radius, "ambient_dim": self.ambient_dim, "orientation": self.orientation}


@dataclass(frozen=True)
class Quadric(Hypersurface):
    """Level set x . A(x) = level of a symmetric positive-definite map A."""

    A: LinearMap
    level: float = 1.0
    orientation: int = 1

    def __post_init__(self) -> None:
        if not (self.A.symmetric and self.A.positive_definite):
            raise ValueError("quadric matrix must be symmetric positive definite")
        if not self.level > 0:
            raise ValueError("quadric level must be positive")

    @property
    def ambient_dim(self) -> int:
        return self.A.dim

    @property
    def dim(self) -> int:
        return self.A.dim - 1

    def phi_grad(self, x):
        x = np.asarray(x, dtype=float)
        ax = self.A.matrix @ x
        return float(np.dot(x, ax)), 2.0 * ax

    def phi_hessian(self, x):
        v, g = self.phi_grad(x)
        return v, g, 2.0 * self.A.matrix

    def to_json(self) -> dict:
        return {"kind": "quadric", "matrix": self.A.matrix.tolist(), "level": self.level, "orientation": self.orientation}


@dataclass(frozen=True)
class ImplicitHypersurface(Hypersurface):
    phi: ScalarFieldExpr
    level: float = 0.0
    orientation: int = 1

    @property
    def ambient_dim(self) -> int:
        return self.phi.num_vars

    @property
    def dim(self) -> int:
        return self.phi.num_vars - 1

    def phi_grad(self, x):
        return self.phi.gradient(x)

    def phi_hessian(self, x):
        return self.phi.hessian(x)

    def to_json(self) -> dict:
        return {
            "kind": "implicit",
            "ambient_dim": self.ambient_dim,
            "expr": self.phi.source,
            "level": self.level,
            "orientation": self.orientation,
        }


# -- parametric charts ----------------------------------------------------------------


@dataclass(frozen=True)
class ParametricChart(Manifold):
    """Image of a box in R^n under ``maps`` (one expression per ambient coordinate)."""

    maps: tuple[ScalarFieldExpr, ...]
    dim: int
    domain: tuple[tuple[float, float], ...]
    orientation: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.dim < len(self.maps):
            raise ValueError("parametric chart needs 1 <= dim < ambient_dim")
        if len(self.domain) != self.dim:
            raise ValueError("domain needs one interval per parameter")
        for lo, hi in self.domain:
            if not hi > lo:
                raise ValueError("domain intervals must have hi > lo")

    @classmethod
    def from_strings(cls, maps: Sequence[str], dim: int, domain, orientation: int = 1) -> "ParametricChart":
        exprs = tuple(parse_scalar_field(m, dim) for m in maps)
        return cls(exprs, dim, tuple((float(lo), float(hi)) for lo, hi in domain), orientation)

    @property
    def ambient_dim(self) -> int:
        return len(self.maps)

    def point(self, u) -> np.ndarray:
        return np.array([f(u) for f in self.maps])

    def jacobian(self, u) -> np.ndarray:
        """N x n matrix of coordinate tangent vectors (columns)."""
        return np.array([f.gradient(u)[1] for f in self.maps])

    def point_and_jacobian(self, u):
        vals = [f.gradient(u) for f in self.maps]
        return np.array([v for v, _ in vals]), np.array([g for _, g in vals])

    def _seed(self, x) -> np.ndarray:
        per_axis = {1: 257, 2: 33}.get(self.dim, 9)
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in self.domain]
        grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(self.dim, -1)
        pts = np.array([f.evaluate_many(grid) for f in self.maps])
        d2 = np.sum((pts - np.asarray(x, dtype=float)[:, None]) ** 2, axis=0)
        return grid[:, int(np.argmin(d2))]

    def pullback(self, x, guess=None) -> np.ndarray:
        """Parameters of the chart point closest to ``x`` (Gauss-Newton, halving on increase)."""
        x = np.asarray(x, dtype=float)
        u = self._seed(x) if guess is None else np.array(guess, dtype=float)
        p, jac = self.point_and_jacobian(u)
        r = p - x
        cost = float(np.dot(r, r))
        for _ in range(MAX_PROJECTION_ITERATIONS):
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]
            t = 1.0
            while True:
                u_new = u + t * step
                p_new, jac_new = self.point_and_jacobian(u_new)
                r_new = p_new - x
                cost_new = float(np.dot(r_new, r_new))
                if cost_new <= cost or t < 1e-6:
                    break
                t *= 0.5
            moved = float(np.linalg.norm(t * step))
            u, r, jac, cost = u_new, r_new, jac_new, cost_new
            if moved <= 1e-13 * (1.0 + np.linalg.norm(u)) or cost == 0.0:
                return u
        if moved <= 1e-10 * (1.0 + np.linalg.norm(u)):
            return u
        raise ProjectionError("chart pull-back did not converge", residual=math.sqrt(cost))

    def project(self, x) -> np.ndarray:
        return self.point(self.pullback(x))

    def _pseudoscalar_params(self, u) -> Multivector:
        jac = self.jacobian(u)
        blade = Multivector.scalar(self.ambient_dim, 1.0)
        for j in range(self.dim):
            blade = outer_product(blade, Multivector.vector(jac[:, j]))
        mag = magnitude(blade)
        if mag < 1e-10:
            raise DegenerateChartError(f"coordinate tangents are linearly dependent at u={np.asarray(u).tolist()}")
        return blade * (self.orientation / mag)

    def pseudoscalar_at(self, x) -> Multivector:
        return self._pseudoscalar_params(self.pullback(x))

    def tangent_projector(self, x) -> np.ndarray:
        jac = self.jacobian(self.pullback(x))
        q, _ = np.linalg.qr(jac)
        return q @ q.T

    def param_direction(self, u, direction) -> np.ndarray:
        return np.linalg.lstsq(self.jacobian(u), np.asarray(direction, dtype=float), rcond=None)[0]

    def neighbors(self, x, direction, h: float):
        u = self.pullback(x)
        du = self.param_direction(u, direction)
        return self.point(u + h * du), self.point(u - h * du)

    def frame_field(self, x0) -> "FrameField":
        p = self.tangent_projector(x0)
        q = np.eye(self.ambient_dim) - p
        order = _pivoted_seed_order(q.T, self.ambient_dim - self.dim)
        return FrameField(self, (), tuple(order))

    def to_json(self) -> dict:
        return {
            "kind": "parametric",
            "dim": self.dim,
            "ambient_dim": self.ambient_dim,
            "maps": [m.source for m in self.maps],
            "domain": [list(d) for d in self.domain],
            "orientation": self.orientation,
        }


# -- frames ------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameData:
    """Tangent and transverse frames at a point plus their reciprocal frames (rows)."""

    point: np.ndarray
    tangent: np.ndarray
    transverse: np.ndarray
    reciprocal_tangent: np.ndarray
    reciprocal_transverse: np.ndarray

    @property
    def metric(self) -> np.ndarray:
        return self.tangent @ self.tangent.T


@dataclass(frozen=True)
class FrameField:
    """Orthonormal adapted frame field with seed choices frozen at construction.

    Hypersurfaces Gram-Schmidt the tangential projections of fixed ambient
    basis vectors; charts Gram-Schmidt their coordinate tangents and complete
    the transverse part from fixed ambient seeds.
    """

    manifold: Manifold
    tangent_seeds: tuple[int, ...]
    transverse_seeds: tuple[int, ...]

    def __call__(self, x) -> tuple[np.ndarray, np.ndarray]:
        m = self.manifold
        eye = np.eye(m.ambient_dim)
        if isinstance(m, Hypersurface):
            p = m.tangent_projector(x)
            tangent, used = _gram_schmidt([p @ eye[i] for i in self.tangent_seeds], tol=1e-12)
            transverse = [m.normal(x)]
        else:
            u = m.pullback(x)
            jac = m.jacobian(u)
            tangent, used = _gram_schmidt(list(jac.T), tol=1e-12)
            q = np.eye(m.ambient_dim) - m.tangent_projector(x)
            transverse, _ = _gram_schmidt([q @ eye[i] for i in self.transverse_seeds], tol=1e-12)
        if len(tangent) != m.dim or len(transverse) != m.ambient_dim - m.dim:
            raise DegeneratePointError("local frame degenerates at this point")
        return np.array(tangent), np.array(transverse)


def tangent_frame(m: Manifold, x) -> FrameData:
    t, w = m.frame_field(x)(x)
    return FrameData(np.asarray(x, dtype=float), t, w, t.copy(), w.copy())


def coordinate_frame(m: ParametricChart, x) -> FrameData:
    """Coordinate tangents d x / d u_j with reciprocal frame from the inverse metric."""
    u = m.pullback(x)
    t = m.jacobian(u).T
    g = t @ t.T
    recip = np.linalg.solve(g, t)
    _, w = m.frame_field(x)(x)
    return FrameData(np.asarray(x, dtype=float), t, w, recip, w.copy())


def coordinate_field(m: ParametricChart, j: int) -> Callable[[np.ndarray], np.ndarray]:
    """The coordinate vector field d/du_j as a function of ambient points."""
    return lambda x: m.jacobian(m.pullback(x))[:, j]


# -- differentiation along the manifold ---------------------------------------------------


def along(m: Manifold, func: Callable, x, a):
    """Central-difference derivative a . d func at x, sampling on the manifold."""
    a = np.asarray(a, dtype=float)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return func(x) * 0.0
    h = fd_step(x)
    xp, xm = m.neighbors(x, a / norm, h)
    return (func(xp) - func(xm)) * (norm / (2.0 * h))


def lie_bracket(m: Manifold, f: Callable, g: Callable, x) -> np.ndarray:
    """[f, g] = f . d g - g . d f, projected onto the tangent space."""
    x = np.asarray(x, dtype=float)
    fg = along(m, g, x, f(x))
    gf = along(m, f, x, g(x))
    return m.tangent_projector(x) @ (fg - gf)


def tangent_part(m: Manifold, x, a) -> np.ndarray:
    return m.tangent_projector(x) @ np.asarray(a, dtype=float)


def shape_tensor(m: Manifold, x, a, return_noise: bool = False):
    """S(a) = I^-1 (a . d I), keeping the grade-2 part.

    ``a`` is first projected onto the tangent space. With ``return_noise`` the
    magnitude of the discarded non-bivector part is returned too.
    """
    x = np.asarray(x, dtype=float)
    a = tangent_part(m, x, a)
    norm = float(np.linalg.norm(a))
    zero = Multivector(m.ambient_dim)
    if norm == 0.0:
        return (zero, 0.0) if return_noise else zero
    direction = a / norm
    h = fd_step(x)
    if isinstance(m, ParametricChart):
        u = m.pullback(x)
        du = m.param_direction(u, direction)
        i0 = m._pseudoscalar_params(u)
        ip = m._pseudoscalar_params(u + h * du)
        im = m._pseudoscalar_params(u - h * du)
    elif isinstance(m, Hypersurface):
        # I = I_N n, so I^-1 (a . dI) = n (a . dn) exactly
        n = m.normal(x)
        dn = (m.normal(x + h * direction) - m.normal(x - h * direction)) * (norm / (2.0 * h))
        s = bivector_from_vectors(n, dn)
        if return_noise:
            return s, abs(float(np.dot(n, dn)))
        return s
    else:
        i0 = m.pseudoscalar_at(x)
        ip = m.pseudoscalar_at(x + h * direction)
        im = m.pseudoscalar_at(x - h * direction)
    full = geometric_product(blade_inverse(i0), (ip - im) * (norm / (2.0 * h)))
    s = grade(full, 2)
    if return_noise:
        return s, magnitude(full - s)
    return s


def shape_tensor_frame(m: Manifold, x, a) -> Multivector:
    """S(a) = sum_k e_k ^ P_perp(a . d e_k) for a local orthonormal tangent frame."""
    x = np.asarray(x, dtype=float)
    a = tangent_part(m, x, a)
    frame = m.frame_field(x)
    tangent, _ = frame(x)
    d_tangent = along(m, lambda y: frame(y)[0], x, a)
    q = np.eye(m.ambient_dim) - m.tangent_projector(x)
    out = Multivector(m.ambient_dim)
    for e, de in zip(tangent, d_tangent):
        out = out + outer_product(Multivector.vector(e), Multivector.vector(q @ de))
    return out


@dataclass(frozen=True)
class ShapeOperator:
    """The linear map a -> S(a) at a point, stored on an orthonormal tangent basis."""

    base_point: np.ndarray
    tangent_basis: np.ndarray
    values: tuple[Multivector, ...] = field(repr=False)

    def __call__(self, a) -> Multivector:
        a = np.asarray(a, dtype=float)
        out = Multivector(self.values[0].dim)
        for e, s in zip(self.tangent_basis, self.values):
            out = out + s * float(np.dot(a, e))
        return out


def shape_operator_at(m: Manifold, x) -> ShapeOperator:
    frame = tangent_frame(m, x)
    values = tuple(shape_tensor(m, x, e) for e in frame.tangent)
    return ShapeOperator(np.asarray(x, dtype=float), frame.tangent, values)


def shape_metric(op: ShapeOperator, a, b) -> float:
    """<~S(a) S(b)>_0, the shape-induced (possibly degenerate) metric."""
    sa = op(a)
    sb = op(b)
    return scalar_product(sa.reverse(), sb)


def shape_magnitude(op: ShapeOperator, a) -> float:
    return magnitude(op(a))


# -- JSON ----------------------------------------------------------------------------


class ManifoldSpecError(ValueError):
    """Malformed manifold description; the message names the offending field."""


def _require(spec: dict, key: str):
    if key not in spec:
        raise ManifoldSpecError(f"missing field {key!r}")
    return spec[key]


def _number(spec: dict, key: str, positive: bool = False) -> float:
    v = _require(spec, key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ManifoldSpecError(f"field {key!r} must be a finite number")
    if positive and not v > 0:
        raise ManifoldSpecError(f"field {key!r} must be positive")
    return float(v)


def _integer(spec: dict, key: str, lo: int = 1) -> int:
    v = _require(spec, key)
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ManifoldSpecError(f"field {key!r} must be an integer >= {lo}")
    if v > 12:
        raise ManifoldSpecError(f"field {key!r} must be <= 12")
    return v


def manifold_from_json(spec: dict) -> Manifold:
    """Build a manifold from its JSON description (see README for the schema)."""
    if not isinstance(spec, dict):
        raise ManifoldSpecError("manifold description must be a JSON object")
    kind = _require(spec, "kind")
    orientation = spec.get("orientation", 1)
    if orientation not in (1, -1) or isinstance(orientation, bool):
        raise ManifoldSpecError("field 'orientation' must be 1 or -1")
    try:
        if kind == "sphere":
            return Sphere(_number(spec, "radius", positive=True), _integer(spec, "ambient_dim", 2), orientation)
        if kind == "quadric":
            raw = _require(spec, "matrix")
            try:
                mat = np.array(raw, dtype=float)
            except (TypeError, ValueError):
                raise ManifoldSpecError("field 'matrix' must be a square numeric array") from None
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or not 2 <= mat.shape[0] <= 12:
                raise ManifoldSpecError("field 'matrix' must be a square numeric array of size 2..12")
            try:
                a = LinearMap(mat, symmetric=True, positive_definite=True)
            except ValueError as exc:
                raise ManifoldSpecError(f"field 'matrix': {exc}") from None
            return Quadric(a, _number(spec, "level", positive=True), orientation)
        if kind == "implicit":
            n = _integer(spec, "ambient_dim", 2)
            text = _require(spec, "expr")
            if not isinstance(text, str):
                raise ManifoldSpecError("field 'expr' must be a string")
            try:
                phi = parse_scalar_field(text, n)
            except ValueError as exc:
                raise ManifoldSpecError(f"field 'expr': {exc}") from None
            return ImplicitHypersurface(phi, _number(spec, "level"), orientation)
        if kind == "parametric":
            n = _integer(spec, "dim", 1)
            big_n = _integer(spec, "ambient_dim", 2)
            if n >= big_n:
                raise ManifoldSpecError("field 'dim' must be smaller than 'ambient_dim'")
            maps = _require(spec, "maps")
            if not isinstance(maps, list) or len(maps) != big_n or not all(isinstance(s, str) for s in maps):
                raise ManifoldSpecError(f"field 'maps' must be a list of {big_n} expression strings")
            domain = _require(spec, "domain")
            if (
                not isinstance(domain, list)
                or len(domain) != n
                or not all(isinstance(d, list) and len(d) == 2 and all(isinstance(v, (int, float)) for v in d) and d[1] > d[0] for d in domain)
            ):
                raise ManifoldSpecError(f"field 'domain' must be a list of {n} [lo, hi] intervals with hi > lo")
            try:
                exprs = tuple(parse_scalar_field(s, n) for s in maps)
            except ValueError as exc:
                raise ManifoldSpecError(f"field 'maps': {exc}") from None
            return ParametricChart(exprs, n, tuple((float(lo), float(hi)) for lo, hi in domain), orientation)
    except ManifoldSpecError:
        raise
    except ValueError as exc:
        raise ManifoldSpecError(str(exc)) from None
    raise ManifoldSpecError(f"field 'kind' must be one of sphere, quadric, implicit, parametric (got {kind!r})")


def pseudoscalar_at(m: Manifold, x) -> Multivector:
    return m.pseudoscalar_at(np.asarray(x, dtype=float))


def project_to_manifold(m: Manifold, x) -> np.ndarray:
    return m.project(np.asarray(x, dtype=float))
