"""Unital *-algebra backends: dense complex matrices and truncated twisted Fourier algebras.

Every other module consumes these elements as coefficient arithmetic.  Both
backends are finite data: an N x N complex matrix, or a finitely supported map
Z^t -> C with a hard truncation radius.  Elements are immutable after
construction and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import BackendMismatch, NonSkew, TruncationOverflow

DEFAULT_TOL = 1e-12

# Relative weight below which beyond-radius modes of a product are treated as
# floating-point dust rather than genuine overflow.
_DUST_REL = 1e-14

MATRIX = "matrix"
GRADED = "graded"


@dataclass(frozen=True)
class BackendDescriptor:
    """Identifies one concrete algebra: either M_N(C) or a twisted Fourier algebra.

    For the graded backend the generators satisfy U_k U_l = e^{2 pi i theta_kl} U_l U_k
    and basis modes are Weyl-normalized: U^k U^l = e^{pi i <k, theta l>} U^{k+l}.
    """

    kind: str
    size: int = 0            # matrix backend: N
    dim: int = 0             # graded backend: t
    twist: tuple = ()        # graded backend: row-major t*t entries of theta
    radius: int = 0          # graded backend: per-coordinate sup-norm bound
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.kind == MATRIX:
            if self.size < 1:
                raise ValueError("matrix backend needs size N >= 1")
        elif self.kind == GRADED:
            if self.dim < 1:
                raise ValueError("graded backend needs dimension t >= 1")
            if self.radius < 1:
                raise ValueError("graded backend needs truncation radius R >= 1")
            th = self.theta
            if th.shape != (self.dim, self.dim):
                raise ValueError("twist matrix has wrong shape")
            skew = np.max(np.abs(th + th.T)) if self.dim else 0.0
            if skew > 1e-12:
                raise NonSkew(f"twist matrix is not skew-symmetric (|theta+theta^T| = {skew:.3e})")
        else:
            raise ValueError(f"unknown backend kind {self.kind!r}")

    @classmethod
    def matrix(cls, size: int, tol: float = DEFAULT_TOL) -> "BackendDescriptor":
        return cls(kind=MATRIX, size=size, tol=tol)

    @classmethod
    def graded(cls, dim: int, twist, radius: int, tol: float = DEFAULT_TOL) -> "BackendDescriptor":
        th = np.asarray(twist, dtype=float).reshape(dim, dim)
        return cls(kind=GRADED, dim=dim, twist=tuple(map(float, th.ravel())), radius=radius, tol=tol)

    @property
    def theta(self) -> np.ndarray:
        return np.asarray(self.twist, dtype=float).reshape(self.dim, self.dim)

    def with_radius(self, radius: int) -> "BackendDescriptor":
        """Same algebra, larger truncation window (used internally for lifts)."""
        if self.kind != GRADED:
            return self
        return BackendDescriptor(kind=GRADED, dim=self.dim, twist=self.twist,
                                 radius=radius, tol=self.tol)

    def same_algebra(self, other: "BackendDescriptor") -> bool:
        """True when the two descriptors differ at most in truncation radius."""
        if self.kind != other.kind:
            return False
        if self.kind == MATRIX:
            return self.size == other.size
        return self.dim == other.dim and self.twist == other.twist


def _check_same(a: "AlgebraElement", b: "AlgebraElement") -> None:
    if a.backend != b.backend:
        raise BackendMismatch(f"operands live on different backends: {a.backend} vs {b.backend}")


class AlgebraElement:
    """A member of a backend algebra.

    Matrix backend: wraps an N x N complex ndarray.  Graded backend: wraps a
    finitely supported dict mode -> complex coefficient with exact integer
    multi-indices.  Instances are treated as immutable.
    """

    __slots__ = ("backend", "_mat", "_modes")

    def __init__(self, backend: BackendDescriptor, *, mat: Optional[np.ndarray] = None,
                 modes: Optional[Mapping[tuple, complex]] = None):
        self.backend = backend
        if backend.kind == MATRIX:
            if mat is None:
                raise ValueError("matrix backend element needs a matrix")
            arr = np.asarray(mat, dtype=complex)
            if arr.shape != (backend.size, backend.size):
                raise ValueError(f"expected {backend.size}x{backend.size} matrix, got {arr.shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            self._mat = arr
            self._modes = None
        else:
            data = {}
            for k, v in (modes or {}).items():
                key = tuple(int(x) for x in k)
                if len(key) != backend.dim:
                    raise ValueError(f"mode {key} has wrong dimension")
                if max((abs(x) for x in key), default=0) > backend.radius:
                    raise TruncationOverflow(f"mode {key} exceeds truncation radius {backend.radius}")
                v = complex(v)
                if v != 0.0:
                    data[key] = data.get(key, 0.0) + v
            self._mat = None
            self._modes = data

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, backend: BackendDescriptor) -> "AlgebraElement":
        if backend.kind == MATRIX:
            return cls(backend, mat=np.zeros((backend.size, backend.size), dtype=complex))
        return cls(backend, modes={})

    @classmethod
    def unit(cls, backend: BackendDescriptor) -> "AlgebraElement":
        if backend.kind == MATRIX:
            return cls(backend, mat=np.eye(backend.size, dtype=complex))
        return cls(backend, modes={(0,) * backend.dim: 1.0})

    @classmethod
    def from_matrix(cls, backend: BackendDescriptor, mat) -> "AlgebraElement":
        return cls(backend, mat=mat)

    @classmethod
    def from_modes(cls, backend: BackendDescriptor, modes: Mapping) -> "AlgebraElement":
        return cls(backend, modes=modes)

    @classmethod
    def single_mode(cls, backend: BackendDescriptor, mode: Sequence[int], coeff: complex = 1.0) -> "AlgebraElement":
        return cls(backend, modes={tuple(mode): coeff})

    @classmethod
    def from_scalar(cls, backend: BackendDescriptor, z: complex) -> "AlgebraElement":
        out = cls.unit(backend)
        return out * complex(z)

    # -- data views --------------------------------------------------------

    @property
    def matrix(self) -> np.ndarray:
        if self.backend.kind != MATRIX:
            raise BackendMismatch("not a matrix-backend element")
        return self._mat

    @property
    def modes(self) -> Mapping[tuple, complex]:
        if self.backend.kind != GRADED:
            raise BackendMismatch("not a graded-backend element")
        return dict(self._modes)

    def coefficient(self, mode: Sequence[int]) -> complex:
        return complex(self._modes.get(tuple(int(x) for x in mode), 0.0))

    def support_radius(self) -> int:
        if self.backend.kind == MATRIX:
            return 0
        return max((max(abs(x) for x in k) for k in self._modes), default=0)

    def scalar_part(self) -> complex:
        """Coefficient of the unit: normalized trace / zero mode."""
        return trace(self)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _check_same(self, other)
        if self.backend.kind == MATRIX:
            return AlgebraElement(self.backend, mat=self._mat + other._mat)
        data = dict(self._modes)
        for k, v in other._modes.items():
            w = data.get(k, 0.0) + v
            if w == 0.0:
                data.pop(k, None)
            else:
                data[k] = w
        return AlgebraElement(self.backend, modes=data)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def __neg__(self) -> "AlgebraElement":
        return self * (-1.0)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return mul(self, other)
        z = complex(other)
        if self.backend.kind == MATRIX:
            return AlgebraElement(self.backend, mat=self._mat * z)
        if z == 0.0:
            return AlgebraElement.zero(self.backend)
        return AlgebraElement(self.backend, modes={k: v * z for k, v in self._modes.items()})

    def __rmul__(self, other) -> "AlgebraElement":
        return self.__mul__(other)

    def star(self) -> "AlgebraElement":
        return star(self)

    def norm(self) -> float:
        return norm(self)

    def __repr__(self) -> str:
        if self.backend.kind == MATRIX:
            return f"AlgebraElement(matrix {self.backend.size}x{self.backend.size}, |.|={self.norm():.3g})"
        terms = ", ".join(f"{k}:{v:.3g}" for k, v in sorted(self._modes.items())[:4])
        more = "..." if len(self._modes) > 4 else ""
        return f"AlgebraElement(graded {{{terms}{more}}})"


# -- module-level operations ------------------------------------------------

def mul(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Backend product; graded case is the twisted convolution of Fourier modes."""
    _check_same(a, b)
    be = a.backend
    if be.kind == MATRIX:
        return AlgebraElement(be, mat=a._mat @ b._mat)
    theta = be.theta
    out: dict = {}
    for k, av in a._modes.items():
        ka = np.asarray(k, dtype=float)
        row = ka @ theta
        for l, bv in b._modes.items():
            phase = np.exp(1j * np.pi * float(row @ np.asarray(l, dtype=float)))
            m = tuple(ki + li for ki, li in zip(k, l))
            w = out.get(m, 0.0) + phase * av * bv
            if w == 0.0:
                out.pop(m, None)
            else:
                out[m] = w
    return _enforce_radius(be, out)


def _enforce_radius(backend: BackendDescriptor, data: dict) -> AlgebraElement:
    scale = max((abs(v) for v in data.values()), default=0.0)
    kept = {}
    for k, v in data.items():
        if max((abs(x) for x in k), default=0) > backend.radius:
            if abs(v) > _DUST_REL * max(scale, 1.0):
                raise TruncationOverflow(
                    f"product support {k} exceeds truncation radius {backend.radius}")
            continue  # beyond-radius floating dust
        if v != 0.0:
            kept[k] = v
    return AlgebraElement(backend, modes=kept)


def star(a: AlgebraElement) -> AlgebraElement:
    """Adjoint: conjugate transpose / mode reflection with conjugated coefficients."""
    if a.backend.kind == MATRIX:
        return AlgebraElement(a.backend, mat=a._mat.conj().T)
    return AlgebraElement(a.backend, modes={tuple(-x for x in k): np.conj(v)
                                            for k, v in a._modes.items()})


def trace(a: AlgebraElement) -> complex:
    """Normalized trace (matrix backend) or zero-mode coefficient (graded backend)."""
    if a.backend.kind == MATRIX:
        return complex(np.trace(a._mat)) / a.backend.size
    return complex(a._modes.get((0,) * a.backend.dim, 0.0))


def norm(a: AlgebraElement) -> float:
    """Entrywise / coefficientwise max modulus; the residual norm used everywhere."""
    if a.backend.kind == MATRIX:
        return float(np.max(np.abs(a._mat))) if a.backend.size else 0.0
    return max((abs(v) for v in a._modes.values()), default=0.0)


@dataclass(frozen=True)
class TraceFunctional:
    """The tracial state of a backend: tau(ab) = tau(ba), tau(1) = 1, tau(a*a) >= 0."""

    backend: BackendDescriptor

    def __call__(self, a: AlgebraElement) -> complex:
        if a.backend != self.backend:
            raise BackendMismatch("element does not belong to this trace's backend")
        return trace(a)


@dataclass(frozen=True)
class DerivationSpec:
    """A derivation of the backend algebra.

    kind "inner":   a -> i [X, a] for a fixed element X.
    kind "grading": U^k -> 2 pi i k_j U^k on the graded backend.
    kind "zero":    the zero action; the structure action used by the
                    structure-constant models, where the algebra is scalar.
    """

    kind: str
    element: Optional[AlgebraElement] = None
    index: int = -1

    def __post_init__(self):
        if self.kind not in ("inner", "grading", "zero"):
            raise ValueError(f"unknown derivation kind {self.kind!r}")
        if self.kind == "inner" and self.element is None:
            raise ValueError("inner derivation needs a fixed element")
        if self.kind == "grading" and self.index < 0:
            raise ValueError("grading derivation needs a coordinate index")

    @classmethod
    def inner(cls, element: AlgebraElement) -> "DerivationSpec":
        return cls(kind="inner", element=element)

    @classmethod
    def grading(cls, index: int) -> "DerivationSpec":
        return cls(kind="grading", index=index)

    @classmethod
    def zero(cls) -> "DerivationSpec":
        return cls(kind="zero")


def derive(delta: DerivationSpec, a: AlgebraElement) -> AlgebraElement:
    """Apply a derivation; C-linear and Leibniz by construction."""
    if delta.kind == "zero":
        return AlgebraElement.zero(a.backend)
    if delta.kind == "inner":
        x = delta.element
        if not x.backend.same_algebra(a.backend):
            raise BackendMismatch("inner derivation element lives on another backend")
        if x.backend != a.backend:
            x = lift(x, a.backend)
        return 1j * (mul(x, a) - mul(a, x))
    if a.backend.kind != GRADED:
        raise BackendMismatch("grading derivation requires the graded backend")
    if delta.index >= a.backend.dim:
        raise BackendMismatch("grading index exceeds backend dimension")
    j = delta.index
    return AlgebraElement(a.backend, modes={k: 2j * np.pi * k[j] * v
                                            for k, v in a._modes.items() if k[j] != 0})


def lift(a: AlgebraElement, backend: BackendDescriptor) -> AlgebraElement:
    """Reinterpret an element in a compatible backend (e.g. a larger truncation)."""
    if a.backend == backend:
        return a
    if not a.backend.same_algebra(backend):
        raise BackendMismatch("cannot lift between unrelated backends")
    if a.support_radius() > backend.radius:
        raise TruncationOverflow("element does not fit in the target radius")
    return AlgebraElement(backend, modes=a._modes)


def wide_backend(backend: BackendDescriptor, *elements: AlgebraElement) -> BackendDescriptor:
    """A truncation window wide enough for one product of the given elements."""
    if backend.kind == MATRIX:
        return backend
    need = sum(e.support_radius() for e in elements)
    return backend if need <= backend.radius else backend.with_radius(need)


def wide_mul(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Product computed in a window that provably fits it; result may be lifted."""
    if not a.backend.same_algebra(b.backend):
        raise BackendMismatch("operands live on unrelated backends")
    be = a.backend if a.backend.radius >= b.backend.radius else b.backend
    be = wide_backend(be, a, b)
    return mul(lift(a, be), lift(b, be))


def wide_sum(elements: Sequence[AlgebraElement]) -> AlgebraElement:
    """Sum of elements that may sit on differently sized windows of one algebra."""
    elements = list(elements)
    if not elements:
        raise ValueError("empty sum")
    be = max((e.backend for e in elements), key=lambda b: b.radius)
    acc = AlgebraElement.zero(be)
    for e in elements:
        acc = acc + lift(e, be)
    return acc


def commutator_norm(a: AlgebraElement, b: AlgebraElement) -> float:
    """|ab - ba| computed in a window wide enough to avoid spurious overflow."""
    _check_same(a, b)
    if a.backend.kind == GRADED:
        need = a.support_radius() + b.support_radius()
        if need > a.backend.radius:
            big = a.backend.with_radius(need)
            a, b = lift(a, big), lift(b, big)
    return norm(mul(a, b) - mul(b, a))


def is_central(a: AlgebraElement, generators: Iterable[AlgebraElement]) -> bool:
    """Generator-based centrality test: max |[a, g]| <= tol over the given generators."""
    tol = a.backend.tol
    return all(commutator_norm(a, g) <= tol for g in generators)


def random_element(backend: BackendDescriptor, rng: np.random.Generator,
                   radius: int = 1, nmodes: int = 4, scale: float = 1.0) -> AlgebraElement:
    """A generic element for property tests (bounded support on the graded backend)."""
    if backend.kind == MATRIX:
        n = backend.size
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return AlgebraElement(backend, mat=scale * m / max(1.0, np.sqrt(n)))
    r = min(radius, backend.radius)
    data: dict = {}
    for _ in range(nmodes):
        k = tuple(int(x) for x in rng.integers(-r, r + 1, size=backend.dim))
        data[k] = data.get(k, 0.0) + scale * complex(rng.standard_normal(), rng.standard_normal())
    return AlgebraElement(backend, modes=data)
