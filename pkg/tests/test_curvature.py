import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapeflow.curvature import (
    connection_data,
    curvature_from_commutator,
    curvature_from_connection,
    frame_vector_field,
    split_bivector,
    total_curvature,
)
from shapeflow.ga import (
    LinearMap,
    Multivector,
    bivector_from_vectors,
    commutator,
    inner_product,
    magnitude,
    outermorphism,
    project_tangent,
    project_transverse,
    scalar_product,
)
from shapeflow.manifold import Quadric, Sphere, pseudoscalar_at, shape_tensor, tangent_frame
from shapeflow.transport import MultivectorField

from conftest import ELLIPSOID_DIAG, random_tangent, sphere_r4_chart

E = np.eye(3)
A_ELL = LinearMap.diag(*ELLIPSOID_DIAG)
seeds = st.integers(0, 2**32 - 1)


def vec(v):
    return Multivector.vector(np.asarray(v, dtype=float))


def ellipsoid_oracle(x, a, b):
    """-P(A(a^b)) / |A x|^2 using the outermorphism of A."""
    ax = A_ELL.matrix @ x
    n = vec(ax / np.linalg.norm(ax))
    ab = outermorphism(A_ELL, bivector_from_vectors(a, b))
    tangent_part = ab - (n ^ inner_product(n, ab))
    return tangent_part * (-1.0 / (ax @ ax))


def projected_field(m, c):
    c = np.asarray(c, dtype=float)
    return lambda y: m.tangent_projector(y) @ c


def christoffel_oracle(chart, u, h=1e-4):
    """Levi-Civita symbols gamma[i, j, k] = Gamma^k_ij from the induced metric."""

    def metric(v):
        j = chart.jacobian(v)
        return j.T @ j

    n = chart.dim
    dg = np.zeros((n, n, n))  # dg[l, i, j] = d_l g_ij
    for l in range(n):
        step = np.zeros(n)
        step[l] = h
        dg[l] = (metric(u + step) - metric(u - step)) / (2 * h)
    ginv = np.linalg.inv(metric(u))
    out = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            lower = np.array([0.5 * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j]) for l in range(n)])
            out[i, j] = ginv @ lower
    return out


class TestTotalCurvature:
    def test_sphere_example(self, unit_sphere):
        cv = total_curvature(unit_sphere, E[0], E[1], E[2])
        assert cv.total.allclose(-bivector_from_vectors(E[1], E[2]), atol=1e-8)
        assert magnitude(cv.extrinsic) <= 1e-8
        assert cv.intrinsic.allclose(cv.total, atol=1e-8)

    def test_plane(self, plane):
        cv = total_curvature(plane, [0.1, 0.2, 0.0], E[0], E[1])
        assert magnitude(cv.total) == 0.0

    def test_ellipsoid_example(self, ellipsoid):
        cv = total_curvature(ellipsoid, E[0], E[1], E[2])
        oracle = ellipsoid_oracle(E[0], E[1], E[2])
        assert oracle.allclose(-bivector_from_vectors(E[1], E[2]) * (1 / 36), atol=1e-14)
        assert magnitude(cv.total - oracle) <= 1e-6

    @settings(max_examples=20)
    @given(seeds)
    def test_ellipsoid_generic(self, seed):
        rng = np.random.default_rng(seed)
        m = Quadric(A_ELL)
        x = m.project(rng.standard_normal(3))
        a, b = random_tangent(rng, m, x), random_tangent(rng, m, x)
        assert magnitude(total_curvature(m, x, a, b).total - ellipsoid_oracle(x, a, b)) <= 1e-6

    @pytest.mark.parametrize("r", [1.0, 2.0])
    def test_sphere_radius(self, r, rng):
        m = Sphere(r)
        x = m.project(rng.standard_normal(3))
        a, b = random_tangent(rng, m, x), random_tangent(rng, m, x)
        expected = bivector_from_vectors(a, b) * (-1 / r**2)
        assert total_curvature(m, x, a, b).total.allclose(expected, atol=1e-6)

    def test_json_keys(self, unit_sphere):
        data = total_curvature(unit_sphere, E[0], E[1], E[2]).to_json()
        assert set(data) == {"point", "a", "b", "total", "intrinsic", "extrinsic"}
        assert set(data["total"]) == {"e12", "e13", "e23"}
        assert data["total"]["e23"] == pytest.approx(-1.0, abs=1e-8)


MANIFOLDS = {
    "sphere": lambda: Sphere(1.0),
    "ellipsoid": lambda: Quadric(A_ELL),
    "sphere_r4": sphere_r4_chart,
    "sphere4d": lambda: Sphere(1.0, 4),
}


def _point(m, rng):
    if hasattr(m, "domain"):
        return m.point([rng.uniform(0.5, 2.5), rng.uniform(-2.5, 2.5)])
    return m.project(rng.standard_normal(m.ambient_dim))


class TestInvariants:
    @pytest.mark.parametrize("name", list(MANIFOLDS))
    def test_orthogonal_to_shape(self, name, rng):
        m = MANIFOLDS[name]()
        for _ in range(3):
            x = _point(m, rng)
            a, b, c = (random_tangent(rng, m, x) for _ in range(3))
            omega = total_curvature(m, x, a, b).total
            s = shape_tensor(m, x, c)
            assert abs(scalar_product(s.reverse(), omega)) <= 1e-6 * magnitude(s) * magnitude(omega) + 1e-12

    @pytest.mark.parametrize("name", list(MANIFOLDS))
    def test_bilinear_antisymmetric(self, name, rng):
        m = MANIFOLDS[name]()
        x = _point(m, rng)
        a, b, c = (random_tangent(rng, m, x) for _ in range(3))
        ab = total_curvature(m, x, a, b)
        ba = total_curvature(m, x, b, a)
        for part in ("total", "intrinsic", "extrinsic"):
            assert magnitude(getattr(ab, part) + getattr(ba, part)) <= 1e-8
        lhs = total_curvature(m, x, 2.0 * a - 0.5 * c, b).total
        rhs = ab.total * 2.0 - total_curvature(m, x, c, b).total * 0.5
        assert magnitude(lhs - rhs) <= 1e-8

    @pytest.mark.parametrize("name", list(MANIFOLDS))
    def test_split_has_no_mixed_part(self, name, rng):
        m = MANIFOLDS[name]()
        x = _point(m, rng)
        a, b = random_tangent(rng, m, x), random_tangent(rng, m, x)
        cv = total_curvature(m, x, a, b)
        i = pseudoscalar_at(m, x)
        assert magnitude(cv.intrinsic + cv.extrinsic - cv.total) <= 1e-6
        assert magnitude(project_transverse(cv.intrinsic, i)) <= 1e-8
        assert magnitude(project_tangent(cv.extrinsic, i)) <= 1e-8

    @pytest.mark.parametrize("name", list(MANIFOLDS))
    def test_frame_expansion(self, name, rng):
        m = MANIFOLDS[name]()
        x = _point(m, rng)
        a, b = random_tangent(rng, m, x), random_tangent(rng, m, x)
        frame = tangent_frame(m, x).tangent
        shapes = [shape_tensor(m, x, e) for e in frame]
        ab = bivector_from_vectors(a, b)
        total = Multivector(m.ambient_dim)
        for j, ej in enumerate(frame):
            for k, ek in enumerate(frame):
                coeff = inner_product(ab, bivector_from_vectors(ej, ek)).scalar_part
                total = total + commutator(shapes[k], shapes[j]) * (0.5 * coeff)
        assert magnitude(total - total_curvature(m, x, a, b).total) <= 1e-6


class TestCommutatorPath:
    def test_plane(self, plane):
        x = np.array([0.2, -0.1, 0.0])
        test = MultivectorField(lambda y: vec([math.sin(y[0]), y[1] ** 2, 1.0]))
        out = curvature_from_commutator(plane, x, projected_field(plane, E[0]), projected_field(plane, E[1]), test)
        assert magnitude(out) <= 1e-4

    def test_scalar_test_field(self, unit_sphere):
        x = unit_sphere.project([0.3, 0.4, 0.8])
        out = curvature_from_commutator(
            unit_sphere, x, projected_field(unit_sphere, E[0]), projected_field(unit_sphere, E[1]), lambda y: 2.0
        )
        assert magnitude(out) <= 1e-4

    @pytest.mark.parametrize("name", ["sphere", "ellipsoid"])
    def test_matches_total(self, name, rng):
        m = MANIFOLDS[name]()
        x = _point(m, rng)
        fa, fb = projected_field(m, rng.standard_normal(3)), projected_field(m, rng.standard_normal(3))
        ct = rng.standard_normal(3)
        test = MultivectorField(lambda y: vec(m.tangent_projector(y) @ ct))
        estimate = curvature_from_commutator(m, x, fa, fb, test)
        omega = total_curvature(m, x, fa(x), fb(x)).total
        assert magnitude(estimate - commutator(test(x), omega)) <= 2e-3


class TestConnection:
    def test_plane_constant_frame(self, plane):
        cd = connection_data(plane, [0.3, 0.1, 0.0], E[0])
        assert np.allclose(cd.gamma, 0.0, atol=1e-12)
        assert np.allclose(cd.pi, 0.0, atol=1e-12)
        assert magnitude(cd.omega_bivector) <= 1e-12

    @pytest.mark.parametrize("name", list(MANIFOLDS))
    def test_orthonormal_frame_structure(self, name, rng):
        m = MANIFOLDS[name]()
        x = _point(m, rng)
        cd = connection_data(m, x, random_tangent(rng, m, x))
        assert np.allclose(cd.gamma, -cd.gamma.T, atol=1e-6)
        assert np.allclose(cd.pi, -cd.pi.T, atol=1e-6)
        i = pseudoscalar_at(m, x)
        assert cd.omega_bivector.grades(1e-12) in ([], [2])
        assert magnitude(project_transverse(cd.omega_bivector, i)) <= 1e-8
        assert magnitude(project_tangent(cd.a_bivector, i)) <= 1e-8

    def test_polar_frame_on_chart(self):
        m = sphere_r4_chart()
        x = m.point([1.0, 0.7])
        cd = connection_data(m, x, m.jacobian([1.0, 0.7])[:, 1])
        assert np.allclose(cd.gamma, -cd.gamma.T, atol=1e-6)

    def test_christoffel_symbols(self, rng):
        m = sphere_r4_chart()
        for _ in range(3):
            u = np.array([rng.uniform(0.4, 2.7), rng.uniform(-3.0, 3.0)])
            x = m.point(u)
            oracle = christoffel_oracle(m, u)
            # closed form for the round metric diag(1, sin^2)
            assert oracle[1, 1, 0] == pytest.approx(-math.sin(u[0]) * math.cos(u[0]), abs=1e-7)
            got = np.array([connection_data(m, x, m.jacobian(u)[:, i], frame="coordinate").gamma for i in range(2)])
            assert np.allclose(got, oracle, atol=1e-5)
            assert np.allclose(got, got.transpose(1, 0, 2), atol=1e-4)

    def test_coordinate_frame_needs_chart(self, unit_sphere):
        with pytest.raises(ValueError):
            connection_data(unit_sphere, E[0], E[1], frame="coordinate")


class TestConnectionCurvature:
    def test_plane(self, plane):
        x = np.array([0.1, 0.2, 0.0])
        r, f = curvature_from_connection(plane, x, projected_field(plane, E[0]), projected_field(plane, E[1]))
        assert magnitude(r) <= 1e-6 and magnitude(f) <= 1e-6

    @pytest.mark.parametrize("form", ["covariant", "component"])
    def test_sphere_orthonormal_fields(self, unit_sphere, form):
        x = unit_sphere.project([0.3, -0.6, 0.5])
        fa = frame_vector_field(unit_sphere, x, 0)
        fb = frame_vector_field(unit_sphere, x, 1)
        r, f = curvature_from_connection(unit_sphere, x, fa, fb, form=form)
        assert magnitude(r + bivector_from_vectors(fa(x), fb(x))) <= 5e-4
        assert magnitude(f) <= 5e-4

    @pytest.mark.parametrize("form", ["covariant", "component"])
    def test_codimension_two_flat_normal(self, form):
        m = sphere_r4_chart()
        x = m.point([1.1, 0.4])
        fa = frame_vector_field(m, x, 0)
        fb = frame_vector_field(m, x, 1)
        r, f = curvature_from_connection(m, x, fa, fb, form=form)
        cv = total_curvature(m, x, fa(x), fb(x))
        assert magnitude(f) <= 5e-4
        assert magnitude(r - cv.intrinsic) <= 5e-4

    @pytest.mark.parametrize("name", ["sphere", "ellipsoid"])
    def test_cross_path_agreement(self, name, rng):
        m = MANIFOLDS[name]()
        x = _point(m, rng)
        fa, fb = projected_field(m, rng.standard_normal(3)), projected_field(m, rng.standard_normal(3))
        cv = total_curvature(m, x, fa(x), fb(x))
        r_cov, f_cov = curvature_from_connection(m, x, fa, fb, form="covariant")
        r_cmp, f_cmp = curvature_from_connection(m, x, fa, fb, form="component")
        assert magnitude(r_cov - r_cmp) <= 1e-4
        assert magnitude(f_cov - f_cmp) <= 1e-4
        assert magnitude(r_cov - cv.intrinsic) <= 2e-3
        assert magnitude(f_cov - cv.extrinsic) <= 2e-3
        ct = rng.standard_normal(3)
        test = MultivectorField(lambda y: vec(m.tangent_projector(y) @ ct))
        estimate = curvature_from_commutator(m, x, fa, fb, test)
        assert magnitude(estimate - commutator(test(x), r_cov + f_cov)) <= 2e-3


def test_split_bivector_sphere(unit_sphere):
    b = bivector_from_vectors(E[0], E[1]) + bivector_from_vectors(E[1], E[2])
    tangent, transverse = split_bivector(unit_sphere, E[0], b)
    assert tangent.allclose(bivector_from_vectors(E[1], E[2]))
    assert magnitude(transverse) <= 1e-14
