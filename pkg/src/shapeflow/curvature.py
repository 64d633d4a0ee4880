"""Total curvature, its intrinsic/extrinsic split, and the frame (connection) picture."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ga import (
    Multivector,
    bivector_from_vectors,
    commutator,
    grade_components,
    project_tangent,
    project_transverse,
    scalar_product,
)
from .manifold import (
    FrameData,
    Manifold,
    ParametricChart,
    along,
    lie_bracket,
    shape_tensor,
)
from .transport import covariant_derivative

VectorField = Callable[[np.ndarray], np.ndarray]


def _bivector_json(b: Multivector) -> dict[str, float]:
    return grade_components(b, 2)


@dataclass(frozen=True)
class CurvatureValue:
    """Omega(a^b) with its tangent (intrinsic) and transverse (extrinsic) parts."""

    base_point: np.ndarray
    a: np.ndarray
    b: np.ndarray
    total: Multivector
    intrinsic: Multivector
    extrinsic: Multivector

    def to_json(self) -> dict:
        return {
            "point": self.base_point.tolist(),
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "total": _bivector_json(self.total),
            "intrinsic": _bivector_json(self.intrinsic),
            "extrinsic": _bivector_json(self.extrinsic),
        }


def split_bivector(m: Manifold, x, bivector: Multivector) -> tuple[Multivector, Multivector]:
    """(P(B), P_perp(B)) relative to the tangent space at x."""
    pseudo = m.pseudoscalar_at(x)
    return project_tangent(bivector, pseudo), project_transverse(bivector, pseudo)


def total_curvature(m: Manifold, x, a, b) -> CurvatureValue:
    """Omega(a^b) = S(a) x S(b), split into tangent and transverse parts."""
    x = np.asarray(x, dtype=float)
    p = m.tangent_projector(x)
    a = p @ np.asarray(a, dtype=float)
    b = p @ np.asarray(b, dtype=float)
    total = commutator(shape_tensor(m, x, a), shape_tensor(m, x, b))
    intrinsic, extrinsic = split_bivector(m, x, total)
    return CurvatureValue(x, a, b, total, intrinsic, extrinsic)


def curvature_from_commutator(m: Manifold, x, fa: VectorField, fb: VectorField, test: Callable) -> Multivector:
    """(a.D b.D - b.D a.D) A - [a,b].D A, an estimate of A x Omega(a^b).

    All derivatives are nested central differences along the manifold.
    """
    x = np.asarray(x, dtype=float)

    def d_along(field: VectorField) -> Callable:
        return lambda y: covariant_derivative(m, test, y, field(y))

    ab = covariant_derivative(m, d_along(fb), x, fa(x))
    ba = covariant_derivative(m, d_along(fa), x, fb(x))
    bracket = lie_bracket(m, fa, fb, x)
    return ab - ba - covariant_derivative(m, test, x, bracket)


# -- frames and connection coefficients -----------------------------------------------


def _frame_function(m: Manifold, x, kind: str) -> Callable[[np.ndarray], FrameData]:
    """Frame field y -> FrameData with seed choices frozen at x."""
    field = m.frame_field(x)
    if kind == "orthonormal":

        def frame(y):
            t, w = field(y)
            return FrameData(np.asarray(y, dtype=float), t, w, t, w)

        return frame
    if kind == "coordinate":
        if not isinstance(m, ParametricChart):
            raise ValueError("coordinate frames need a parametric chart")

        def frame(y):
            t = m.jacobian(m.pullback(y)).T
            _, w = field(y)
            return FrameData(np.asarray(y, dtype=float), t, w, np.linalg.solve(t @ t.T, t), w)

        return frame
    raise ValueError(f"unknown frame kind {kind!r}")


@dataclass(frozen=True)
class ConnectionData:
    """Connection coefficients and bivectors of a frame in direction a.

    gamma[j, k] = (a.d e_j).e^k and pi[b, c] = (a.d e_b).e^c.
    """

    frame: FrameData
    direction: np.ndarray
    gamma: np.ndarray
    pi: np.ndarray
    omega_bivector: Multivector
    a_bivector: Multivector


def _connection(m: Manifold, frame_fn: Callable, x, a) -> ConnectionData:
    x = np.asarray(x, dtype=float)
    a = m.tangent_projector(x) @ np.asarray(a, dtype=float)
    fr = frame_fn(x)
    d_t = along(m, lambda y: frame_fn(y).tangent, x, a)
    d_w = along(m, lambda y: frame_fn(y).transverse, x, a)
    gamma = d_t @ fr.reciprocal_tangent.T
    pi = d_w @ fr.reciprocal_transverse.T
    p = m.tangent_projector(x)
    q = np.eye(m.ambient_dim) - p
    omega = Multivector(m.ambient_dim)
    for e_up, de in zip(fr.reciprocal_tangent, d_t):
        omega = omega + bivector_from_vectors(e_up, p @ de)
    a_biv = Multivector(m.ambient_dim)
    for e_up, de in zip(fr.reciprocal_transverse, d_w):
        a_biv = a_biv + bivector_from_vectors(e_up, q @ de)
    return ConnectionData(fr, a, gamma, pi, omega * 0.5, a_biv * 0.5)


def connection_data(m: Manifold, x, a, frame: str = "orthonormal") -> ConnectionData:
    """Gamma, Pi, omega(a) and A(a) for the orthonormal or coordinate frame at x."""
    return _connection(m, _frame_function(m, x, frame), x, a)


def _pair_basis(rows: np.ndarray, recip: np.ndarray) -> list[tuple[Multivector, Multivector]]:
    """(e_J, e^J) with e_J = e_j1 ^ e_j2 and e^J = e^j2 ^ e^j1 for j1 < j2."""
    out = []
    for j1 in range(len(rows)):
        for j2 in range(j1 + 1, len(rows)):
            out.append((bivector_from_vectors(rows[j1], rows[j2]), bivector_from_vectors(recip[j2], recip[j1])))
    return out


def curvature_from_connection(
    m: Manifold, x, fa: VectorField, fb: VectorField, frame: str = "orthonormal", form: str = "covariant"
) -> tuple[Multivector, Multivector]:
    """Intrinsic R(a^b) and extrinsic F(a^b) from the connection bivectors.

    ``form="covariant"`` evaluates a.D w(b) - b.D w(a) + w(a) x w(b) - w([a,b]);
    ``form="component"`` differentiates the frame components w(b)^J instead and
    adds w(b) x w(a) - w([a,b]). The frame must have constant inner products.
    """
    x = np.asarray(x, dtype=float)
    frame_fn = _frame_function(m, x, frame)

    def conn(y, v) -> ConnectionData:
        return _connection(m, frame_fn, y, v)

    ca = conn(x, fa(x))
    cb = conn(x, fb(x))
    cab = conn(x, lie_bracket(m, fa, fb, x))
    if form == "covariant":
        results = []
        for key in ("omega_bivector", "a_bivector"):
            def w_b(y, key=key):
                return getattr(conn(y, fb(y)), key)

            def w_a(y, key=key):
                return getattr(conn(y, fa(y)), key)

            da = covariant_derivative(m, w_b, x, ca.direction)
            db = covariant_derivative(m, w_a, x, cb.direction)
            wa, wb = getattr(ca, key), getattr(cb, key)
            results.append(da - db + commutator(wa, wb) - getattr(cab, key))
        return results[0], results[1]
    if form == "component":
        fr = ca.frame
        results = []
        for key, rows, recip, sel in (
            ("omega_bivector", fr.tangent, fr.reciprocal_tangent, lambda f: (f.tangent, f.reciprocal_tangent)),
            ("a_bivector", fr.transverse, fr.reciprocal_transverse, lambda f: (f.transverse, f.reciprocal_transverse)),
        ):
            basis = _pair_basis(rows, recip)
            out = commutator(getattr(cb, key), getattr(ca, key)) - getattr(cab, key)
            if not basis:
                results.append(out)
                continue

            def comps(y, field, key=key, sel=sel):
                c = conn(y, field(y))
                t, r = sel(c.frame)
                value = getattr(c, key)
                return np.array([scalar_product(value, up) for _, up in _pair_basis(t, r)])

            d_b = along(m, lambda y: comps(y, fb), x, ca.direction)
            d_a = along(m, lambda y: comps(y, fa), x, cb.direction)
            for coeff, (e_low, _) in zip(d_b - d_a, basis):
                out = out + e_low * float(coeff)
            results.append(out)
        return results[0], results[1]
    raise ValueError(f"unknown form {form!r}")


def frame_vector_field(m: Manifold, x0, index: int, frame: str = "orthonormal") -> VectorField:
    """Tangent frame vector e_index as a vector field near x0."""
    frame_fn = _frame_function(m, x0, frame)
    return lambda y: frame_fn(y).tangent[index]
