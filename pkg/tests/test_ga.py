import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shapeflow.errors import SingularError
from shapeflow.ga import (
    LinearMap,
    Multivector,
    Rotor,
    basis_vector,
    blade_inverse,
    commutator,
    geometric_product,
    grade,
    grade_components,
    inner_product,
    jacobi_eigh,
    magnitude,
    outer_product,
    outermorphism,
    project_tangent,
    project_transverse,
    reverse,
    rotor_exp,
    scalar_product,
    symmetric_inv_sqrt,
    symmetric_sqrt,
)

from conftest import random_multivector, rel_err


def e(dim, *idx):
    return Multivector.blade(dim, *idx)


seeds = st.integers(0, 2**32 - 1)
dims = st.sampled_from([2, 3, 4, 5])


class TestProducts:
    def test_basis_squares(self):
        assert geometric_product(e(3, 1), e(3, 1)).allclose(Multivector.scalar(3, 1.0))

    def test_orthogonal_vectors(self):
        assert geometric_product(e(3, 1), e(3, 2)).allclose(e(3, 1, 2))

    def test_bivector_product(self):
        assert geometric_product(e(3, 1, 2), e(3, 2, 3)).allclose(e(3, 1, 3))

    def test_sign_of_reordering(self):
        # e2 e1 = -e12, e3 e1 e2 = e12 e3 = e123
        assert geometric_product(e(3, 2), e(3, 1)).allclose(-e(3, 1, 2))
        assert (e(3, 3) * e(3, 1) * e(3, 2)).allclose(e(3, 1, 2, 3))

    def test_inner_outer_examples(self):
        assert inner_product(e(3, 1), e(3, 1, 2)).allclose(e(3, 2))
        assert inner_product(e(3, 3), e(3, 1, 2)).allclose(Multivector(3))
        assert outer_product(e(3, 1), e(3, 1, 2)).allclose(Multivector(3))

    def test_commutator_examples(self):
        assert commutator(e(3, 1), e(3, 2)).allclose(e(3, 1, 2))
        assert commutator(e(3, 1), e(3, 1, 2)).allclose(e(3, 2))
        assert commutator(e(3, 1, 2), e(3, 1, 3)).allclose(-e(3, 2, 3))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            geometric_product(e(2, 1), e(3, 1))

    def test_large_dimension_sparse_table_path(self):
        # N > 8 takes the sparse product path; check against the dense rule on blades
        a, b = e(10, 1, 5, 9), e(10, 5, 10)
        assert geometric_product(a, b).allclose(-e(10, 1, 9, 10))
        assert geometric_product(e(12, 12), e(12, 12)).allclose(Multivector.scalar(12, 1.0))

    @given(seeds, dims)
    def test_vector_inner_outer_split(self, seed, dim):
        rng = np.random.default_rng(seed)
        a = random_multivector(rng, dim, {1})
        b = random_multivector(rng, dim, {1})
        assert rel_err(inner_product(a, b), inner_product(b, a)) < 1e-12
        assert rel_err(outer_product(a, b), -outer_product(b, a)) < 1e-12
        assert rel_err(geometric_product(a, b), inner_product(a, b) + outer_product(a, b)) < 1e-12

    @given(seeds, dims, st.integers(0, 5))
    def test_vector_blade_extension_rules(self, seed, dim, r):
        r = min(r, dim)
        rng = np.random.default_rng(seed)
        a = random_multivector(rng, dim, {1})
        ar = random_multivector(rng, dim, {r})
        sign = (-1) ** r
        dot = (a * ar - sign * (ar * a)) * 0.5
        wedge = (a * ar + sign * (ar * a)) * 0.5
        assert np.allclose(inner_product(a, ar).coeffs, dot.coeffs, atol=1e-12) or r == 0
        assert np.allclose(outer_product(a, ar).coeffs, wedge.coeffs, atol=1e-12)
        assert np.allclose(outer_product(a, ar).coeffs, sign * outer_product(ar, a).coeffs, atol=1e-12)


class TestGradesAndMagnitude:
    def test_reverse_sign_by_grade(self):
        for r, sign in [(0, 1), (1, 1), (2, -1), (3, -1), (4, 1)]:
            blade = e(4, *range(1, r + 1)) if r else Multivector.scalar(4, 1.0)
            assert reverse(blade).allclose(sign * blade)

    def test_magnitudes(self):
        assert magnitude(e(3, 1, 2)) == pytest.approx(1.0)
        assert magnitude(3.0 * e(3, 1)) == pytest.approx(3.0)
        assert magnitude(1.0 + e(3, 1, 2)) == pytest.approx(math.sqrt(2.0))

    def test_grade_extraction(self, rng):
        a = random_multivector(rng, 4)
        total = sum((grade(a, r) for r in range(5)), Multivector(4))
        assert total.allclose(a, atol=1e-15)
        assert grade(a, 2).grades() == [2]
        with pytest.raises(ValueError):
            grade(a, 5)

    def test_grade_components_include_zeros(self):
        comps = grade_components(e(3, 1, 3), 2)
        assert comps == {"e12": 0.0, "e13": 1.0, "e23": 0.0}

    @given(seeds, dims, st.integers(0, 5))
    def test_magnitude_first_order_expansion(self, seed, dim, r):
        r = min(r, dim)
        rng = np.random.default_rng(seed)
        a = random_multivector(rng, dim, {r})
        b = random_multivector(rng, dim, {r})
        eps = 1e-6
        lhs = magnitude(a + eps * b) - magnitude(a) - eps * scalar_product(reverse(a), b) / magnitude(a)
        assert abs(lhs) <= 1e-10 * max(1.0, magnitude(b) ** 2 / magnitude(a))

    def test_magnitude_zero_iff_zero(self):
        assert magnitude(Multivector(3)) == 0.0


class TestInverse:
    def test_examples(self):
        assert blade_inverse(e(3, 1, 2)).allclose(-e(3, 1, 2))
        assert blade_inverse(2.0 * e(3, 1)).allclose(0.5 * e(3, 1))

    def test_singular(self):
        with pytest.raises(SingularError):
            blade_inverse(Multivector(3))

    def test_non_blade_rejected(self):
        with pytest.raises(ValueError):
            blade_inverse(e(4, 1, 2) + e(4, 3, 4))
        with pytest.raises(ValueError):
            blade_inverse(1.0 + e(3, 1))

    @given(seeds, st.integers(1, 4))
    def test_random_blades(self, seed, r):
        rng = np.random.default_rng(seed)
        blade = Multivector.scalar(5, 1.0)
        for _ in range(r):
            blade = outer_product(blade, Multivector.vector(rng.standard_normal(5)))
        prod = geometric_product(blade, blade_inverse(blade))
        assert prod.allclose(Multivector.scalar(5, 1.0), atol=1e-10)


class TestRotors:
    def test_exp_zero(self):
        assert rotor_exp(Multivector(3)).value.allclose(Multivector.scalar(3, 1.0))

    def test_quarter_turn(self):
        r = rotor_exp(-math.pi / 4 * e(3, 1, 2))
        assert np.allclose(r.apply_vector([1, 0, 0]), [0, 1, 0], atol=1e-14)

    def test_commuting_planes(self):
        b = (e(4, 1, 2) + e(4, 3, 4)) * (-math.pi / 4)
        r = rotor_exp(b)
        assert np.allclose(r.apply_vector([1, 0, 0, 0]), [0, 1, 0, 0], atol=1e-14)
        split = rotor_exp(e(4, 1, 2) * (-math.pi / 4)) * rotor_exp(e(4, 3, 4) * (-math.pi / 4))
        assert r.value.allclose(split.value, atol=1e-14)

    def test_series_oracle(self, rng):
        b = random_multivector(rng, 4, {2}) * 0.7
        term = Multivector.scalar(4, 1.0)
        total = term
        for k in range(1, 40):
            term = term * b * (1.0 / k)
            total = total + term
        assert rotor_exp(b).value.allclose(total, atol=1e-12)

    def test_simple_bivector_closed_form(self):
        theta = 1.3
        b = e(3, 2, 3) * theta
        expected = math.cos(theta) + e(3, 2, 3) * math.sin(theta)
        assert rotor_exp(b).value.allclose(expected, atol=1e-14)

    def test_rejects_non_bivector(self):
        with pytest.raises(ValueError):
            rotor_exp(e(3, 1))
        with pytest.raises(ValueError):
            Rotor(e(3, 1) + 1.0)

    @given(seeds, dims)
    def test_normalised_and_length_preserving(self, seed, dim):
        rng = np.random.default_rng(seed)
        r = rotor_exp(random_multivector(rng, dim, {2}) * 2.0)
        assert scalar_product(reverse(r.value), r.value) == pytest.approx(1.0, abs=1e-12)
        v = rng.standard_normal(dim)
        assert np.linalg.norm(r.apply_vector(v)) == pytest.approx(np.linalg.norm(v), rel=1e-12)

    @given(seeds, dims)
    def test_rotor_preserves_products(self, seed, dim):
        rng = np.random.default_rng(seed)
        r = rotor_exp(random_multivector(rng, dim, {2}))
        a, b = random_multivector(rng, dim), random_multivector(rng, dim)
        assert rel_err(r.apply(a * b), r.apply(a) * r.apply(b)) < 1e-10

    @given(seeds, dims)
    def test_infinitesimal_rotation(self, seed, dim):
        rng = np.random.default_rng(seed)
        a = random_multivector(rng, dim)
        b = random_multivector(rng, dim, {2})
        errs = []
        for eps in (1e-2, 1e-3):
            moved = rotor_exp(b * (-eps / 2)).apply(a)
            errs.append(magnitude(moved - a - eps * commutator(a, b)))
        # second-order remainder: shrinks 100x when eps shrinks 10x
        assert errs[1] <= errs[0] / 50 + 1e-14

    def test_bivector_ode_solution(self, rng):
        b0 = random_multivector(rng, 3, {2})
        x0 = rng.standard_normal(3)

        def x(tau):
            return rotor_exp(b0 * (-tau / 2)).apply_vector(x0)

        h, tau = 1e-5, 0.8
        dx = (x(tau + h) - x(tau - h)) / (2 * h)
        expected = inner_product(Multivector.vector(x(tau)), b0).vector_part()
        assert np.allclose(dx, expected, atol=1e-6)


class TestAlgebraLaws:
    @given(seeds, dims)
    def test_associativity(self, seed, dim):
        rng = np.random.default_rng(seed)
        a, b, c = (random_multivector(rng, dim) for _ in range(3))
        assert rel_err((a * b) * c, a * (b * c)) < 1e-10

    @given(seeds, dims)
    def test_commutator_leibniz(self, seed, dim):
        rng = np.random.default_rng(seed)
        a, b, c = (random_multivector(rng, dim) for _ in range(3))
        assert rel_err(commutator(a * b, c), a * commutator(b, c) + commutator(a, c) * b) < 1e-10

    @given(seeds, dims)
    def test_jacobi(self, seed, dim):
        rng = np.random.default_rng(seed)
        a, b, c = (random_multivector(rng, dim) for _ in range(3))
        lhs = commutator(a, commutator(b, c))
        rhs = commutator(commutator(a, b), c) - commutator(commutator(a, c), b)
        assert rel_err(lhs, rhs) < 1e-10

    @given(seeds, dims)
    def test_bivector_closure(self, seed, dim):
        rng = np.random.default_rng(seed)
        b1, b2 = random_multivector(rng, dim, {2}), random_multivector(rng, dim, {2})
        assert set(commutator(b1, b2).grades(1e-12)) <= {2}

    @given(seeds, dims, st.integers(0, 5))
    def test_commutator_with_bivector_keeps_grade(self, seed, dim, r):
        r = min(r, dim)
        rng = np.random.default_rng(seed)
        a = random_multivector(rng, dim, {r})
        b = random_multivector(rng, dim, {2})
        assert set(commutator(a, b).grades(1e-12)) <= {r}


class TestProjectionAndMaps:
    def test_vector_projection(self):
        i = e(3, 1, 2)
        v = e(3, 1) + e(3, 3)
        assert project_tangent(v, i).allclose(e(3, 1))
        assert project_transverse(v, i).allclose(e(3, 3))

    def test_mixed_bivector_dropped(self):
        i = e(3, 1, 2)
        assert project_tangent(e(3, 1, 3), i).allclose(Multivector(3))
        assert project_transverse(e(3, 1, 3), i).allclose(Multivector(3))
        assert project_tangent(e(3, 1, 2), i).allclose(e(3, 1, 2))

    def test_bivector_classification_oracle(self, rng):
        # rotated adapted frame: classify each basis bivector by hand
        r = rotor_exp(random_multivector(rng, 4, {2}))
        f = [r.apply_vector(np.eye(4)[k]) for k in range(4)]
        i = outer_product(Multivector.vector(f[0]), Multivector.vector(f[1]))
        coeffs = rng.standard_normal(6)
        pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        blades = [outer_product(Multivector.vector(f[p]), Multivector.vector(f[q])) for p, q in pairs]
        bv = sum((c * b for c, b in zip(coeffs, blades)), Multivector(4))
        assert project_tangent(bv, i).allclose(coeffs[0] * blades[0], atol=1e-12)
        assert project_transverse(bv, i).allclose(coeffs[5] * blades[5], atol=1e-12)

    @given(seeds)
    def test_projection_is_idempotent_split(self, seed):
        rng = np.random.default_rng(seed)
        i = outer_product(Multivector.vector(rng.standard_normal(4)), Multivector.vector(rng.standard_normal(4)))
        i = i * (1.0 / magnitude(i))
        v = random_multivector(rng, 4, {1})
        p = project_tangent(v, i)
        assert (p + project_transverse(v, i)).allclose(v, atol=1e-12)
        assert project_tangent(p, i).allclose(p, atol=1e-12)

    def test_outermorphism_examples(self):
        assert outermorphism(LinearMap.identity(2), e(2, 1, 2)).allclose(e(2, 1, 2))
        assert outermorphism(LinearMap.diag(2, 3), e(2, 1, 2)).allclose(6 * e(2, 1, 2))
        assert outermorphism(LinearMap.diag(1, 0.25, 1 / 9), e(3, 1, 2)).allclose(0.25 * e(3, 1, 2))

    @given(seeds)
    def test_outermorphism_is_factorwise(self, seed):
        rng = np.random.default_rng(seed)
        f = rng.standard_normal((4, 4))
        vs = [rng.standard_normal(4) for _ in range(3)]
        blade = Multivector.vector(vs[0]) ^ Multivector.vector(vs[1]) ^ Multivector.vector(vs[2])
        image = Multivector.vector(f @ vs[0]) ^ Multivector.vector(f @ vs[1]) ^ Multivector.vector(f @ vs[2])
        assert rel_err(outermorphism(f, blade), image) < 1e-12
        assert np.allclose(outermorphism(f, Multivector.vector(vs[0])).vector_part(), f @ vs[0])

    def test_linear_map_validation(self):
        with pytest.raises(ValueError):
            LinearMap(np.array([[1.0, 2.0], [0.0, 1.0]]), symmetric=True)
        with pytest.raises(ValueError):
            LinearMap(np.array([[1.0, 0.0], [0.0, -1.0]]), symmetric=True, positive_definite=True)

    def test_sqrt_examples(self):
        assert np.allclose(symmetric_sqrt(LinearMap.diag(4, 9)).matrix, np.diag([2, 3]))
        assert np.allclose(symmetric_sqrt(LinearMap.identity(3)).matrix, np.eye(3))
        f = LinearMap(np.array([[2.0, 1.0], [1.0, 2.0]]), symmetric=True, positive_definite=True)
        g = symmetric_sqrt(f).matrix
        assert np.max(np.abs(g @ g - f.matrix)) < 1e-10
        assert np.allclose(g, g.T)
        h = symmetric_inv_sqrt(f).matrix
        assert np.max(np.abs(h @ f.matrix @ h - np.eye(2))) < 1e-10

    def test_sqrt_rejects_bad_input(self):
        with pytest.raises(ValueError):
            symmetric_sqrt(LinearMap(np.array([[1.0, 2.0], [2.0, 1.0]])))

    @given(seeds, st.integers(2, 8))
    def test_jacobi_matches_numpy(self, seed, n):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, n))
        a = a + a.T
        w, v = jacobi_eigh(a)
        assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-11)
        assert np.allclose(v @ np.diag(w) @ v.T, a, atol=1e-11)
        assert np.allclose(v.T @ v, np.eye(n), atol=1e-12)


def test_basis_vector_matches_blade():
    assert basis_vector(4, 3).allclose(e(4, 3))
