"""
Dense geometric algebra over R^N with Euclidean signature.

A multivector is stored as 2**N real coefficients, one per basis blade. Blade
``e_{i1 i2 ... ir}`` (ascending, 1-based) lives at the bitmask index with bits
``i1-1, ..., ir-1`` set. All products are driven by per-dimension tables
that record, for every blade pair, the sign picked up when the concatenated
basis vectors are sorted into canonical order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import SingularError

MAX_DIM = 12
_DENSE_TABLE_MAX = 8


def _popcount(a):
    return np.bitwise_count(np.asarray(a, dtype=np.int64)).astype(np.int64)


def _reorder_sign(a, b):
    """Sign of e_a e_b relative to e_(a^b), vectorised over index arrays."""
    a = np.asarray(a, dtype=np.int64) >> 1
    b = np.asarray(b, dtype=np.int64)
    swaps = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    while np.any(a):
        swaps += _popcount(a & b)
        a = a >> 1
    return 1.0 - 2.0 * (swaps & 1)


@lru_cache(maxsize=None)
def _tables(dim: int):
    # Row i, column k: partner j = i ^ k with e_i e_j = sign * e_k.
    size = 1 << dim
    idx = np.arange(size, dtype=np.int64)
    i = idx[:, None]
    k = idx[None, :]
    j = i ^ k
    sign = _reorder_sign(i, j)
    gi, gj, gk = _popcount(i), _popcount(j), _popcount(k)
    inner = np.where(gk == np.abs(gi - gj), sign, 0.0)
    outer = np.where(gk == gi + gj, sign, 0.0)
    for t in (j, sign, inner, outer):
        t.flags.writeable = False
    return j, sign, inner, outer


@lru_cache(maxsize=None)
def _grades(dim: int) -> np.ndarray:
    g = _popcount(np.arange(1 << dim))
    g.flags.writeable = False
    return g


@lru_cache(maxsize=None)
def _reverse_signs(dim: int) -> np.ndarray:
    g = _grades(dim)
    s = np.where((g * (g - 1) // 2) % 2 == 0, 1.0, -1.0)
    s.flags.writeable = False
    return s


@lru_cache(maxsize=None)
def _blades_of_grade(dim: int, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Bitmask indices of grade-r blades and their (ascending) vector indices."""
    combos = list(combinations(range(dim), r))
    masks = np.array([sum(1 << c for c in combo) for combo in combos], dtype=np.int64)
    members = np.array(combos, dtype=np.int64).reshape(len(combos), r)
    return masks, members


def _product(a: np.ndarray, b: np.ndarray, dim: int, kind: int) -> np.ndarray:
    """kind 0: geometric, 1: inner (grade |r-s|), 2: outer (grade r+s)."""
    if dim <= _DENSE_TABLE_MAX:
        tables = _tables(dim)
        j = tables[0]
        table = tables[1 + kind]
        return a @ (table * b[j])
    ia = np.flatnonzero(a)
    ib = np.flatnonzero(b)
    size = 1 << dim
    if ia.size == 0 or ib.size == 0:
        return np.zeros(size)
    I, J = np.meshgrid(ia, ib, indexing="ij")
    I, J = I.ravel(), J.ravel()
    K = I ^ J
    w = _reorder_sign(I, J) * a[I] * b[J]
    if kind == 1:
        w = np.where(_popcount(K) == np.abs(_popcount(I) - _popcount(J)), w, 0.0)
    elif kind == 2:
        w = np.where((I & J) == 0, w, 0.0)
    return np.bincount(K, weights=w, minlength=size)


def _blade_label(mask: int, dim: int) -> str:
    idx = [str(i + 1) for i in range(dim) if mask >> i & 1]
    if not idx:
        return "1"
    return "e" + ("".join(idx) if dim < 10 else "_".join(idx))


class Multivector:
    """Immutable dense multivector of the Euclidean algebra G(R^dim).

    Arithmetic operators: ``+``, ``-``, ``*`` (geometric product, or scaling
    by a real), ``/`` (by a real), ``^`` (outer), ``|`` (inner), ``~`` (reversion).
    """

    __slots__ = ("dim", "coeffs")
    __array_priority__ = 1000

    def __init__(self, dim: int, coeffs=None) -> None:
        if not 1 <= dim <= MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {dim}")
        size = 1 << dim
        if coeffs is None:
            arr = np.zeros(size)
        else:
            arr = np.array(coeffs, dtype=float)
            if arr.shape != (size,):
                raise ValueError(f"expected {size} coefficients, got shape {arr.shape}")
        arr.flags.writeable = False
        self.dim = dim
        self.coeffs = arr

    @classmethod
    def _wrap(cls, dim: int, arr: np.ndarray) -> "Multivector":
        obj = object.__new__(cls)
        arr.flags.writeable = False
        obj.dim = dim
        obj.coeffs = arr
        return obj

    # -- constructors ---------------------------------------------------------

    @classmethod
    def scalar(cls, dim: int, value: float = 1.0) -> "Multivector":
        arr = np.zeros(1 << dim)
        arr[0] = value
        return cls._wrap(dim, arr)

    @classmethod
    def vector(cls, values) -> "Multivector":
        values = np.asarray(values, dtype=float)
        dim = values.shape[0]
        if values.ndim != 1 or not 1 <= dim <= MAX_DIM:
            raise ValueError(f"vector must be 1-d with 1..{MAX_DIM} entries, got shape {values.shape}")
        arr = np.zeros(1 << dim)
        arr[1 << np.arange(dim)] = values
        return cls._wrap(dim, arr)

    @classmethod
    def blade(cls, dim: int, *indices: int) -> "Multivector":
        """Basis blade from 1-based vector indices, e.g. ``blade(3, 1, 2)`` is e1e2."""
        out = cls.scalar(dim)
        for i in indices:
            if not 1 <= i <= dim:
                raise ValueError(f"basis index {i} out of range for dimension {dim}")
            out = out * basis_vector(dim, i)
        return out

    @classmethod
    def pseudoscalar(cls, dim: int) -> "Multivector":
        arr = np.zeros(1 << dim)
        arr[-1] = 1.0
        return cls._wrap(dim, arr)

    @classmethod
    def from_dict(cls, dim: int, items: dict[str, float]) -> "Multivector":
        lookup = {_blade_label(m, dim): m for m in range(1 << dim)}
        arr = np.zeros(1 << dim)
        for key, value in items.items():
            if key not in lookup:
                raise ValueError(f"unknown blade label {key!r} for dimension {dim}")
            arr[lookup[key]] = value
        return cls._wrap(dim, arr)

    # -- arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Multivector):
            if other.dim != self.dim:
                raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other.coeffs
        if np.isscalar(other):
            arr = np.zeros(1 << self.dim)
            arr[0] = other
            return arr
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Multivector._wrap(self.dim, self.coeffs + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Multivector._wrap(self.dim, self.coeffs - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Multivector._wrap(self.dim, o - self.coeffs)

    def __neg__(self):
        return Multivector._wrap(self.dim, -self.coeffs)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        if np.isscalar(other):
            return Multivector._wrap(self.dim, self.coeffs * other)
        return NotImplemented

    def __rmul__(self, other):
        if np.isscalar(other):
            return Multivector._wrap(self.dim, self.coeffs * other)
        return NotImplemented

    def __truediv__(self, other):
        if np.isscalar(other):
            return Multivector._wrap(self.dim, self.coeffs / other)
        return NotImplemented

    def __xor__(self, other):
        if isinstance(other, Multivector):
            return outer_product(self, other)
        return NotImplemented

    def __or__(self, other):
        if isinstance(other, Multivector):
            return inner_product(self, other)
        return NotImplemented

    def __invert__(self):
        return reverse(self)

    # -- structure ------------------------------------------------------------

    def grade(self, r: int) -> "Multivector":
        return grade(self, r)

    def grades(self, tol: float = 0.0) -> list[int]:
        """Grades carrying a coefficient with absolute value above ``tol``."""
        g = _grades(self.dim)
        return sorted({int(x) for x in g[np.abs(self.coeffs) > tol]})

    @property
    def scalar_part(self) -> float:
        return float(self.coeffs[0])

    def vector_part(self) -> np.ndarray:
        """Grade-1 coefficients as an ordinary length-dim array."""
        return np.array(self.coeffs[1 << np.arange(self.dim)])

    def magnitude(self) -> float:
        return magnitude(self)

    def reverse(self) -> "Multivector":
        return reverse(self)

    def inverse(self) -> "Multivector":
        return blade_inverse(self)

    def commutator(self, other: "Multivector") -> "Multivector":
        return commutator(self, other)

    def allclose(self, other, atol: float = 1e-10) -> bool:
        o = self._coerce(other)
        return bool(np.max(np.abs(self.coeffs - o)) <= atol)

    def to_dict(self, tol: float = 0.0) -> dict[str, float]:
        return {
            _blade_label(m, self.dim): float(c)
            for m, c in enumerate(self.coeffs)
            if abs(c) > tol
        }

    def __repr__(self) -> str:
        terms = self.to_dict()
        if not terms:
            return "0"
        return " + ".join(
            f"{v:.6g}" if k == "1" else f"{v:.6g}*{k}" for k, v in terms.items()
        )


def basis_vector(dim: int, i: int) -> Multivector:
    arr = np.zeros(1 << dim)
    arr[1 << (i - 1)] = 1.0
    return Multivector._wrap(dim, arr)


def _check_pair(a: Multivector, b: Multivector) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    _check_pair(a, b)
    return Multivector._wrap(a.dim, _product(a.coeffs, b.coeffs, a.dim, 0))


def inner_product(a: Multivector, b: Multivector) -> Multivector:
    """Grade |r - s| part of the product of each pair of homogeneous components."""
    _check_pair(a, b)
    return Multivector._wrap(a.dim, _product(a.coeffs, b.coeffs, a.dim, 1))


def outer_product(a: Multivector, b: Multivector) -> Multivector:
    _check_pair(a, b)
    return Multivector._wrap(a.dim, _product(a.coeffs, b.coeffs, a.dim, 2))


def commutator(a: Multivector, b: Multivector) -> Multivector:
    """A x B = (AB - BA) / 2."""
    _check_pair(a, b)
    ab = _product(a.coeffs, b.coeffs, a.dim, 0)
    ba = _product(b.coeffs, a.coeffs, a.dim, 0)
    return Multivector._wrap(a.dim, 0.5 * (ab - ba))


def reverse(a: Multivector) -> Multivector:
    return Multivector._wrap(a.dim, a.coeffs * _reverse_signs(a.dim))


def grade(a: Multivector, r: int) -> Multivector:
    if not 0 <= r <= a.dim:
        raise ValueError(f"grade {r} out of range 0..{a.dim}")
    return Multivector._wrap(a.dim, np.where(_grades(a.dim) == r, a.coeffs, 0.0))


def grade_components(a: Multivector, r: int) -> dict[str, float]:
    """All grade-r coefficients keyed by blade label, zeros included, in lexicographic order."""
    masks, _ = _blades_of_grade(a.dim, r)
    return {_blade_label(int(m), a.dim): float(a.coeffs[m]) for m in masks}


def scalar_product(a: Multivector, b: Multivector) -> float:
    """<A B>_0 without forming the full product."""
    _check_pair(a, b)
    # <e_I e_J>_0 is nonzero only for I == J, with sign = reversion sign of e_I.
    return float(np.dot(a.coeffs * _reverse_signs(a.dim), b.coeffs))


def magnitude(a: Multivector) -> float:
    """|A| = sqrt(<~A A>_0); equals the Euclidean norm of the coefficient table."""
    return float(math.sqrt(max(scalar_product(reverse(a), a), 0.0)))


def _homogeneous_grade(a: Multivector, rtol: float = 1e-10) -> int:
    norm = np.max(np.abs(a.coeffs))
    g = _grades(a.dim)
    present = sorted({int(x) for x in g[np.abs(a.coeffs) > rtol * norm]})
    if len(present) != 1:
        raise ValueError(f"expected a homogeneous multivector, found grades {present}")
    return present[0]


def check_blade(a: Multivector, rtol: float = 1e-10) -> int:
    """Return the grade of ``a`` if it is a nonzero blade, else raise."""
    mag2 = scalar_product(a, reverse(a))
    if mag2 <= 0.0:
        raise SingularError("zero multivector has no inverse")
    r = _homogeneous_grade(a)
    aa = geometric_product(a, reverse(a)).coeffs.copy()
    aa[0] = 0.0
    if np.max(np.abs(aa)) > rtol * mag2:
        raise ValueError("multivector is not a blade (A ~A is not scalar)")
    return r


def blade_inverse(a: Multivector) -> Multivector:
    """A^-1 = ~A / |A|^2 for a blade A."""
    if not np.any(a.coeffs):
        raise SingularError("zero multivector has no inverse")
    check_blade(a)
    rev = reverse(a)
    return rev / scalar_product(rev, a)


@dataclass(frozen=True)
class Rotor:
    """Unit even multivector acting by the sandwich A -> R A ~R.

    The stored value is renormalised on construction so that <~R R>_0 = 1.
    """

    value: Multivector

    def __post_init__(self) -> None:
        v = self.value
        odd = _grades(v.dim) % 2 == 1
        scale = max(np.max(np.abs(v.coeffs)), 1e-300)
        if np.max(np.abs(v.coeffs[odd]), initial=0.0) > 1e-12 * scale:
            raise ValueError("rotor must be an even multivector")
        norm2 = scalar_product(reverse(v), v)
        if norm2 <= 0.0:
            raise SingularError("cannot normalise a zero rotor")
        object.__setattr__(self, "value", Multivector._wrap(v.dim, np.where(odd, 0.0, v.coeffs) / math.sqrt(norm2)))

    @classmethod
    def identity(cls, dim: int) -> "Rotor":
        return cls(Multivector.scalar(dim, 1.0))

    @property
    def dim(self) -> int:
        return self.value.dim

    def apply(self, a: Multivector) -> Multivector:
        return geometric_product(geometric_product(self.value, a), reverse(self.value))

    def apply_vector(self, v) -> np.ndarray:
        return self.apply(Multivector.vector(v)).vector_part()

    def reverse(self) -> "Rotor":
        return Rotor(reverse(self.value))

    def __mul__(self, other: "Rotor") -> "Rotor":
        return Rotor(geometric_product(self.value, other.value))

    def deviation(self) -> float:
        """|~R R - 1|, which should stay at rounding level."""
        return magnitude(geometric_product(reverse(self.value), self.value) - 1.0)

    @property
    def angle(self) -> float:
        """Rotation angle for a rotor that acts in a single plane: 2 acos <R>_0."""
        return 2.0 * math.acos(min(1.0, max(-1.0, self.value.scalar_part)))


def rotor_exp(b: Multivector) -> Rotor:
    """exp(B) for a bivector B, by scaling and squaring of the Taylor series.

    With R = exp(-B/2), ``R.apply`` rotates by |B| in the plane of B (for simple B).
    """
    if set(b.grades(1e-12 * max(1.0, np.max(np.abs(b.coeffs))))) - {2}:
        raise ValueError("rotor_exp expects a pure bivector")
    b = grade(b, 2)
    norm = magnitude(b)
    squarings = max(0, math.ceil(math.log2(norm / 0.25))) if norm > 0.25 else 0
    x = b / (2.0 ** squarings)
    term = Multivector.scalar(b.dim, 1.0)
    total = term
    for k in range(1, 60):
        term = geometric_product(term, x) / k
        total = total + term
        if magnitude(term) < 1e-15 * magnitude(total):
            break
    for _ in range(squarings):
        total = geometric_product(total, total)
    return Rotor(total)


@dataclass(frozen=True)
class LinearMap:
    """Linear map on R^N given by its matrix; optionally validated symmetric / PD."""

    matrix: np.ndarray
    symmetric: bool = False
    positive_definite: bool = False
    eigenvalues: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"linear map needs a square matrix, got shape {m.shape}")
        if not 1 <= m.shape[0] <= MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        if self.positive_definite and not self.symmetric:
            raise ValueError("positive-definite flag requires a symmetric map")
        if self.symmetric and not np.array_equal(m, m.T):
            raise ValueError("matrix flagged symmetric is not symmetric")
        if self.positive_definite:
            w, _ = jacobi_eigh(m)
            if np.min(w) <= 1e-12:
                raise ValueError(f"matrix is not positive definite (min eigenvalue {np.min(w):.3g})")
            object.__setattr__(self, "eigenvalues", w)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "LinearMap":
        return cls(np.eye(dim), symmetric=True, positive_definite=True)

    @classmethod
    def diag(cls, *values: float) -> "LinearMap":
        pd = all(v > 0 for v in values)
        return cls(np.diag(values), symmetric=True, positive_definite=pd)

    def __call__(self, a):
        if isinstance(a, Multivector):
            return outermorphism(self, a)
        return self.matrix @ np.asarray(a, dtype=float)


def _compound(matrix: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """r-th compound matrix (all r x r minors) and the blade masks it acts on."""
    dim = matrix.shape[0]
    masks, members = _blades_of_grade(dim, r)
    sub = matrix[members[:, None, :, None], members[None, :, None, :]]
    return np.linalg.det(sub), masks


def outermorphism(f: LinearMap | np.ndarray, a: Multivector) -> Multivector:
    """Extend f to blades by f(a1 ^ ... ^ ar) = f(a1) ^ ... ^ f(ar)."""
    m = f.matrix if isinstance(f, LinearMap) else np.asarray(f, dtype=float)
    if m.shape != (a.dim, a.dim):
        raise ValueError(f"dimension mismatch: map {m.shape} vs multivector dim {a.dim}")
    out = np.zeros_like(a.coeffs)
    out[0] = a.coeffs[0]
    g = _grades(a.dim)
    for r in range(1, a.dim + 1):
        part = a.coeffs[g == r]
        if not np.any(part):
            continue
        comp, masks = _compound(m, r)
        out[masks] = comp @ a.coeffs[masks]
    return Multivector._wrap(a.dim, out)


def projector(blade: Multivector) -> np.ndarray:
    """Matrix of the orthogonal projection a -> (a . I) I^-1 onto the span of ``blade``."""
    inv = blade_inverse(blade)
    dim = blade.dim
    cols = [
        geometric_product(inner_product(basis_vector(dim, i + 1), blade), inv).vector_part()
        for i in range(dim)
    ]
    return np.array(cols).T


def project_tangent(a: Multivector, blade: Multivector) -> Multivector:
    """Projection onto the subspace of ``blade``, acting factor-wise on blades.

    Components mixing tangent and transverse factors are annihilated.
    """
    return outermorphism(projector(blade), a)


def project_transverse(a: Multivector, blade: Multivector) -> Multivector:
    """Projection onto the orthogonal complement of ``blade``, factor-wise on blades."""
    p = projector(blade)
    return outermorphism(np.eye(a.dim) - p, a)


def jacobi_eigh(matrix, tol: float = 1e-13, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Returns ascending eigenvalues and the matching orthonormal eigenvectors
    as columns. Iterates until the off-diagonal Frobenius norm falls below
    ``tol`` times the norm of the input.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]


def _spd_power(f: LinearMap, power: float) -> LinearMap:
    m = f.matrix
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.max(np.abs(m)))):
        raise ValueError("matrix square root requires a symmetric matrix")
    w, v = jacobi_eigh(m)
    if np.min(w) <= 1e-12:
        raise ValueError(f"matrix square root requires a positive-definite matrix (min eigenvalue {np.min(w):.3g})")
    g = (v * w ** power) @ v.T
    g = 0.5 * (g + g.T)
    return LinearMap(g, symmetric=True, positive_definite=True)


def symmetric_sqrt(f: LinearMap) -> LinearMap:
    return _spd_power(f, 0.5)


def symmetric_inv_sqrt(f: LinearMap) -> LinearMap:
    return _spd_power(f, -0.5)


@lru_cache(maxsize=None)
def _pair_index(dim: int):
    i, j = np.triu_indices(dim, 1)
    return i, j, (1 << i) | (1 << j)


def bivector_from_vectors(a, b) -> Multivector:
    """a ^ b assembled directly from the 2x2 minors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dim = a.shape[0]
    i, j, masks = _pair_index(dim)
    coeffs = np.zeros(1 << dim)
    coeffs[masks] = a[i] * b[j] - a[j] * b[i]
    return Multivector._wrap(dim, coeffs)


def vector_dot_bivector(v, b: Multivector) -> np.ndarray:
    """v . B as a plain array (grade-1 part of the inner product)."""
    return inner_product(Multivector.vector(v), b).vector_part()
