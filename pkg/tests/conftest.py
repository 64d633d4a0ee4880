import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from shapeflow.ga import LinearMap, Multivector
from shapeflow.manifold import ImplicitHypersurface, ParametricChart, Quadric, Sphere
from shapeflow.expr import parse_scalar_field

settings.register_profile(
    "shapeflow", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("shapeflow")

ELLIPSOID_DIAG = (1.0, 0.25, 1.0 / 9.0)


def random_multivector(rng: np.random.Generator, dim: int, grades=None) -> Multivector:
    coeffs = rng.standard_normal(1 << dim)
    if grades is not None:
        keep = np.array([bin(m).count("1") in grades for m in range(1 << dim)])
        coeffs = np.where(keep, coeffs, 0.0)
    return Multivector(dim, coeffs)


def rel_err(a: Multivector, b: Multivector) -> float:
    scale = max(np.linalg.norm(a.coeffs), np.linalg.norm(b.coeffs), 1e-300)
    return float(np.linalg.norm(a.coeffs - b.coeffs) / scale)


def random_sphere_point(rng, radius=1.0, dim=3):
    v = rng.standard_normal(dim)
    return radius * v / np.linalg.norm(v)


def random_tangent(rng, m, x):
    t = m.tangent_projector(x) @ rng.standard_normal(m.ambient_dim)
    return t / np.linalg.norm(t)


def helix_chart() -> ParametricChart:
    """Unit-speed helix (cos(s/sqrt2), sin(s/sqrt2), s/sqrt2)."""
    return ParametricChart.from_strings(
        ["cos(x1/sqrt(2))", "sin(x1/sqrt(2))", "x1/sqrt(2)"], 1, [(-20.0, 20.0)]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def unit_sphere():
    return Sphere(1.0)


@pytest.fixture
def ellipsoid():
    return Quadric(LinearMap.diag(*ELLIPSOID_DIAG))


@pytest.fixture
def plane():
    return ImplicitHypersurface(parse_scalar_field("x3", 3), 0.0)


@pytest.fixture
def helix():
    return helix_chart()


def sphere_r4_chart() -> ParametricChart:
    """Unit 2-sphere inside the hyperplane x4 = 0.5 of R^4 (codimension 2)."""
    return ParametricChart.from_strings(
        ["sin(x1)*cos(x2)", "sin(x1)*sin(x2)", "cos(x1)", "0.5"], 2, [(0.05, math.pi - 0.05), (-math.pi, math.pi)]
    )


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
