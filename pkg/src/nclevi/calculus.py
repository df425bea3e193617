"""Rank-n free one-form calculus with a central basis.

The calculus is finite data: wedge constants c^a_{ij} mapping the tensor square
onto two-forms, exterior constants D^a_i encoding d(e_i), and an ordered list of
derivations realizing d on the algebra.  One-forms, tensor squares and two-forms
are coefficient arrays over the algebra backend; the canonical flip is the
coefficient transpose and the symmetrizer is its average with the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .algebra import (
    AlgebraElement,
    BackendDescriptor,
    DerivationSpec,
    derive,
    lift,
)
from .errors import BackendMismatch, NoSolution

_ANTISYM_TOL = 1e-12


def _as_element_rows(rows) -> tuple:
    return tuple(tuple(r) for r in rows)


class OneForm:
    """Sum e_i a_i over the central basis, stored as the coefficient vector a."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[AlgebraElement]):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise ValueError("empty one-form")
        be = coeffs[0].backend
        if any(c.backend != be for c in coeffs):
            raise BackendMismatch("one-form coefficients on mixed backends")
        self.coeffs = coeffs

    @property
    def backend(self) -> BackendDescriptor:
        return self.coeffs[0].backend

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    @classmethod
    def zero(cls, backend: BackendDescriptor, rank: int) -> "OneForm":
        z = AlgebraElement.zero(backend)
        return cls([z] * rank)

    def __add__(self, other: "OneForm") -> "OneForm":
        return OneForm([a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "OneForm") -> "OneForm":
        return OneForm([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "OneForm":
        return OneForm([-a for a in self.coeffs])

    def right_mul(self, a: AlgebraElement) -> "OneForm":
        return OneForm([c * a for c in self.coeffs])

    def left_mul(self, a: AlgebraElement) -> "OneForm":
        # central basis: a e_i = e_i a, so the left action multiplies coefficients from the left
        return OneForm([a * c for c in self.coeffs])

    def scale(self, z: complex) -> "OneForm":
        return OneForm([c * z for c in self.coeffs])

    def norm(self) -> float:
        return max(c.norm() for c in self.coeffs)


class TensorSquare:
    """Sum e_i (x) e_j a_ij, stored as the n x n coefficient array."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        rows = _as_element_rows(coeffs)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("tensor square needs a square coefficient array")
        self.coeffs = rows

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    @property
    def backend(self) -> BackendDescriptor:
        return self.coeffs[0][0].backend

    @classmethod
    def zero(cls, backend: BackendDescriptor, rank: int) -> "TensorSquare":
        z = AlgebraElement.zero(backend)
        return cls([[z] * rank for _ in range(rank)])

    @classmethod
    def basis(cls, backend: BackendDescriptor, rank: int, i: int, j: int,
              coeff: complex = 1.0) -> "TensorSquare":
        out = [[AlgebraElement.zero(backend)] * rank for _ in range(rank)]
        out[i][j] = AlgebraElement.from_scalar(backend, coeff)
        return cls(out)

    def __add__(self, other: "TensorSquare") -> "TensorSquare":
        return TensorSquare([[a + b for a, b in zip(r, s)]
                             for r, s in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "TensorSquare") -> "TensorSquare":
        return TensorSquare([[a - b for a, b in zip(r, s)]
                             for r, s in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "TensorSquare":
        return self.scale(-1.0)

    def scale(self, z: complex) -> "TensorSquare":
        return TensorSquare([[a * z for a in r] for r in self.coeffs])

    def right_mul(self, a: AlgebraElement) -> "TensorSquare":
        return TensorSquare([[c * a for c in r] for r in self.coeffs])

    def left_mul(self, a: AlgebraElement) -> "TensorSquare":
        return TensorSquare([[a * c for c in r] for r in self.coeffs])

    def norm(self) -> float:
        return max(c.norm() for r in self.coeffs for c in r)


class TwoForm:
    """Sum f_a b_a over the chosen two-form basis."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[AlgebraElement]):
        self.coeffs = tuple(coeffs)

    @classmethod
    def zero(cls, backend: BackendDescriptor, rank: int) -> "TwoForm":
        z = AlgebraElement.zero(backend)
        return cls([z] * rank)

    def __add__(self, other: "TwoForm") -> "TwoForm":
        return TwoForm([a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "TwoForm") -> "TwoForm":
        return TwoForm([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def right_mul(self, a: AlgebraElement) -> "TwoForm":
        return TwoForm([c * a for c in self.coeffs])

    def norm(self) -> float:
        return max((c.norm() for c in self.coeffs), default=0.0)


class TensorCube:
    """Sum e_i (x) e_j (x) e_k a_ijk; only needed for braid/projector diagnostics."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = tuple(tuple(tuple(p) for p in r) for r in coeffs)

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    def permute(self, perm) -> "TensorCube":
        n = self.rank
        out = [[[None] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    src = (i, j, k)
                    dst = tuple(src[p] for p in perm)
                    out[dst[0]][dst[1]][dst[2]] = self.coeffs[i][j][k]
        return TensorCube(out)

    def sigma12(self) -> "TensorCube":
        return self.permute((1, 0, 2))

    def sigma23(self) -> "TensorCube":
        return self.permute((0, 2, 1))

    def __add__(self, other: "TensorCube") -> "TensorCube":
        n = self.rank
        return TensorCube([[[self.coeffs[i][j][k] + other.coeffs[i][j][k]
                             for k in range(n)] for j in range(n)] for i in range(n)])

    def __sub__(self, other: "TensorCube") -> "TensorCube":
        n = self.rank
        return TensorCube([[[self.coeffs[i][j][k] - other.coeffs[i][j][k]
                             for k in range(n)] for j in range(n)] for i in range(n)])

    def norm(self) -> float:
        return max(c.norm() for r in self.coeffs for p in r for c in p)


def sigma(t: TensorSquare) -> TensorSquare:
    """Canonical flip: coefficient transpose."""
    n = t.rank
    return TensorSquare([[t.coeffs[j][i] for j in range(n)] for i in range(n)])


def p_sym(t: TensorSquare) -> TensorSquare:
    """Symmetrizer (1 + sigma)/2; its range is Ker(wedge)."""
    return (t + sigma(t)).scale(0.5)


@dataclass(frozen=True)
class BraidReport:
    braid_residual: float
    dim_ran_p12: int
    dim_ran_p23: int
    rank_p12_on_ran_p23: int
    rank_p23_on_ran_p12: int
    bijective: bool


class CalculusSpec:
    """The differential calculus: wedge constants, exterior constants, derivations.

    Invariants enforced at construction: the wedge constants are antisymmetric
    in the lower pair (so the flip's symmetric part lies in Ker(wedge)), they
    realize the full two-form basis, and d compose d vanishes on the supplied
    generators.
    """

    def __init__(self, rank: int, two_form_rank: int, wedge_constants, exterior_constants,
                 derivations: Sequence[DerivationSpec], backend: BackendDescriptor,
                 generators: Sequence[AlgebraElement] = ()):
        self.rank = int(rank)
        self.two_form_rank = int(two_form_rank)
        self.wedge_constants = np.asarray(wedge_constants, dtype=complex).reshape(
            self.two_form_rank, self.rank, self.rank)
        self.exterior_constants = np.asarray(exterior_constants, dtype=complex).reshape(
            self.two_form_rank, self.rank)
        self.derivations = tuple(derivations)
        self.backend = backend
        self.generators = tuple(generators)
        if len(self.derivations) != self.rank:
            raise ValueError("need one derivation per basis one-form")
        self._validate()

    def _validate(self) -> None:
        c = self.wedge_constants
        anti = np.max(np.abs(c + np.transpose(c, (0, 2, 1)))) if c.size else 0.0
        if anti > _ANTISYM_TOL:
            raise ValueError(f"wedge constants are not antisymmetric (residual {anti:.3e})")
        if self.two_form_rank:
            flat = c.reshape(self.two_form_rank, self.rank * self.rank)
            if np.linalg.matrix_rank(flat, tol=1e-10) != self.two_form_rank:
                raise ValueError("wedge constants do not realize the two-form basis")
        res = self.d_squared_residual()
        if res > 10 * self.backend.tol:
            raise ValueError(f"d compose d does not vanish on generators (residual {res:.3e})")

    # -- consistency -------------------------------------------------------

    def d_squared_residual(self) -> float:
        """max_a |d1(d0(a))| over the generator list."""
        worst = 0.0
        for a in self.generators:
            worst = max(worst, self.d1(self.d0(a)).norm())
        return worst

    # -- building blocks ----------------------------------------------------

    def zero_one_form(self) -> OneForm:
        return OneForm.zero(self.backend, self.rank)

    def basis_one_form(self, i: int) -> OneForm:
        coeffs = [AlgebraElement.zero(self.backend)] * self.rank
        coeffs[i] = AlgebraElement.unit(self.backend)
        return OneForm(coeffs)

    def one_form(self, coeffs: Sequence[AlgebraElement]) -> OneForm:
        if len(coeffs) != self.rank:
            raise ValueError("wrong number of coefficients")
        return OneForm(coeffs)

    def basis_tensor(self, i: int, j: int) -> TensorSquare:
        return TensorSquare.basis(self.backend, self.rank, i, j)

    # -- differential structure ---------------------------------------------

    def d0(self, a: AlgebraElement) -> OneForm:
        """d(a) = sum_i e_i partial_i(a)."""
        if not a.backend.same_algebra(self.backend):
            raise BackendMismatch("element does not live on the calculus backend")
        return OneForm([derive(d, a) for d in self.derivations])

    def wedge(self, t: TensorSquare) -> TwoForm:
        """Quotiented multiplication: b_a = sum_ij c^a_ij a_ij."""
        n, m = self.rank, self.two_form_rank
        out = []
        for alpha in range(m):
            acc = AlgebraElement.zero(t.backend)
            for i in range(n):
                for j in range(n):
                    z = self.wedge_constants[alpha, i, j]
                    if z != 0.0:
                        acc = acc + t.coeffs[i][j] * z
            out.append(acc)
        return TwoForm(out)

    def d1(self, omega: OneForm) -> TwoForm:
        """d(sum e_i a_i): alpha-coefficient sum_i D^a_i a_i - sum_ik c^a_ik partial_k(a_i)."""
        n, m = self.rank, self.two_form_rank
        out = []
        for alpha in range(m):
            acc = AlgebraElement.zero(omega.backend)
            for i in range(n):
                z = self.exterior_constants[alpha, i]
                if z != 0.0:
                    acc = acc + omega.coeffs[i] * z
                for k in range(n):
                    c = self.wedge_constants[alpha, i, k]
                    if c != 0.0:
                        acc = acc - derive(self.derivations[k], omega.coeffs[i]) * c
            out.append(acc)
        return TwoForm(out)

    def d_basis(self, i: int) -> TwoForm:
        """d(e_i) as a two-form: the exterior-constant column."""
        return TwoForm([AlgebraElement.from_scalar(self.backend, self.exterior_constants[a, i])
                        for a in range(self.two_form_rank)])

    def wedge_section(self, b: TwoForm) -> TensorSquare:
        """Minimal-norm preimage of a two-form under the wedge (the Q-inverse).

        The preimage is the antisymmetric representative; with the shipped
        wedge tables it is the unique antisymmetric solution.
        """
        n, m = self.rank, self.two_form_rank
        if m == 0:
            return TensorSquare.zero(self.backend, n)
        flat = self.wedge_constants.reshape(m, n * n)
        pinv = np.linalg.pinv(flat)
        cols = [b.coeffs[a] for a in range(m)]
        out = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = AlgebraElement.zero(self.backend)
                for a in range(m):
                    z = pinv[i * n + j, a]
                    if z != 0.0:
                        acc = acc + cols[a] * z
                out[i][j] = acc
        t = TensorSquare(out)
        res = (self.wedge(t) - b).norm()
        if res > 1e3 * self.backend.tol * max(1.0, b.norm()):
            raise NoSolution(f"two-form outside the wedge range (residual {res:.3e})")
        return t

    # -- braid diagnostics ----------------------------------------------------

    def braid_check(self) -> BraidReport:
        """Verify the braid identity and the restricted-projector bijectivity.

        Everything happens on the scalar n^3 coefficient index space: the flips
        act by index permutation regardless of the algebra coefficients.
        """
        n = self.rank
        dim = n ** 3

        def perm_matrix(perm):
            p = np.zeros((dim, dim))
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        src = (i, j, k)
                        dst = tuple(src[q] for q in perm)
                        p[dst[0] * n * n + dst[1] * n + dst[2],
                          i * n * n + j * n + k] = 1.0
            return p

        s12 = perm_matrix((1, 0, 2))
        s23 = perm_matrix((0, 2, 1))
        braid = float(np.max(np.abs(s12 @ s23 @ s12 - s23 @ s12 @ s23)))
        p12 = 0.5 * (np.eye(dim) + s12)
        p23 = 0.5 * (np.eye(dim) + s23)

        def ran_basis(p):
            u, s, _ = np.linalg.svd(p)
            r = int(np.sum(s > 0.5))
            return u[:, :r]

        b12, b23 = ran_basis(p12), ran_basis(p23)
        r12_on_23 = int(np.linalg.matrix_rank(p12 @ b23, tol=1e-10))
        r23_on_12 = int(np.linalg.matrix_rank(p23 @ b12, tol=1e-10))
        bijective = (r12_on_23 == b23.shape[1] == b12.shape[1] == r23_on_12)
        return BraidReport(braid, b12.shape[1], b23.shape[1], r12_on_23, r23_on_12, bijective)

    # -- lifting -------------------------------------------------------------

    def lifted(self, extra_radius: int) -> "CalculusSpec":
        """A clone over an enlarged truncation window (graded backend only)."""
        if self.backend.kind != "graded" or extra_radius <= 0:
            return self
        be = self.backend.with_radius(self.backend.radius + extra_radius)
        ders = []
        for d in self.derivations:
            if d.kind == "inner":
                ders.append(DerivationSpec.inner(lift(d.element, be)))
            else:
                ders.append(d)
        gens = [lift(g, be) for g in self.generators]
        return CalculusSpec(self.rank, self.two_form_rank, self.wedge_constants,
                            self.exterior_constants, ders, be, gens)

    def lift_one_form(self, omega: OneForm, spec: "CalculusSpec") -> OneForm:
        return OneForm([lift(c, spec.backend) for c in omega.coeffs])


# -- zeta encoding of right-linear maps E -> E (x) E -------------------------

class ZetaTensor:
    """Coefficient tensor in E (x) E (x) E^*: entry [j][k][i] pairs e_j (x) e_k with phi^i."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = tuple(tuple(tuple(p) for p in r) for r in coeffs)

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    def norm(self) -> float:
        return max(c.norm() for r in self.coeffs for p in r for c in p)

    def __sub__(self, other: "ZetaTensor") -> "ZetaTensor":
        n = self.rank
        return ZetaTensor([[[self.coeffs[j][k][i] - other.coeffs[j][k][i]
                             for i in range(n)] for k in range(n)] for j in range(n)])


def zeta_encode(spec: CalculusSpec, values: List[TensorSquare]) -> ZetaTensor:
    """Encode a right-linear map L: E -> E (x) E, given by L(e_i), as a tensor in E (x) E (x) E^*."""
    n = spec.rank
    if len(values) != n:
        raise ValueError("need one tensor-square value per basis one-form")
    return ZetaTensor([[[values[i].coeffs[j][k] for i in range(n)]
                        for k in range(n)] for j in range(n)])


def zeta_decode(spec: CalculusSpec, tensor: ZetaTensor) -> List[TensorSquare]:
    """Inverse of zeta_encode: recover the basis values L(e_i)."""
    n = spec.rank
    return [TensorSquare([[tensor.coeffs[j][k][i] for k in range(n)] for j in range(n)])
            for i in range(n)]


def zeta_eval(spec: CalculusSpec, tensor: ZetaTensor, x: OneForm) -> TensorSquare:
    """Evaluation contract zeta(sum e (x) f (x) phi)(x) = sum e (x) f phi(x)."""
    n = spec.rank
    out = [[None] * n for _ in range(n)]
    for j in range(n):
        for k in range(n):
            acc = AlgebraElement.zero(x.backend)
            for i in range(n):
                acc = acc + tensor.coeffs[j][k][i] * x.coeffs[i]
            out[j][k] = acc
    return TensorSquare(out)


def random_one_form(spec: CalculusSpec, rng: np.random.Generator, **kw) -> OneForm:
    from .algebra import random_element
    return OneForm([random_element(spec.backend, rng, **kw) for _ in range(spec.rank)])


def random_tensor_square(spec: CalculusSpec, rng: np.random.Generator, **kw) -> TensorSquare:
    from .algebra import random_element
    n = spec.rank
    return TensorSquare([[random_element(spec.backend, rng, **kw) for _ in range(n)]
                         for _ in range(n)])
