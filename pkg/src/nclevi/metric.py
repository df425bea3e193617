"""Pseudo-Riemannian bilinear metrics with central components.

A metric is its n x n component array g_ij = g(e_i (x) e_j): central, symmetric,
and invertible as a component matrix.  On the matrix backend central elements
are scalar multiples of the unit, so the component matrix is numeric.  On the
graded backend components are Fourier polynomials over the untwisted
coordinates; inverses are computed by sampling on a torus grid, inverting
pointwise and reading the Fourier coefficients back off, with an explicit decay
budget.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .algebra import (
    MATRIX,
    AlgebraElement,
    BackendDescriptor,
    is_central,
    lift,
    trace,
    wide_mul,
    wide_sum,
)
from .calculus import CalculusSpec, OneForm, TensorSquare
from .errors import BackendMismatch, NonCentralResult, SingularMetric

# Relative singular-value floor for component-matrix invertibility.
SV_RATIO_FLOOR = 1e-8

# How far beyond the backend radius an inverse component may reach before the
# metric is declared non-invertible within the truncation budget.
_INVERSE_EXTRA_RADIUS = 40
_INVERSE_TAIL = 1e-12


class Functional:
    """Element of E^*: phi(sum e_i a_i) = sum phi_i a_i."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[AlgebraElement]):
        self.coeffs = tuple(coeffs)

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    def __call__(self, omega: OneForm) -> AlgebraElement:
        return wide_sum([wide_mul(f, a) for f, a in zip(self.coeffs, omega.coeffs)])

    def __sub__(self, other: "Functional") -> "Functional":
        return Functional([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def norm(self) -> float:
        return max(c.norm() for c in self.coeffs)


def _grid_sizes(ndim: int, radius: int) -> int:
    if ndim <= 1:
        return 2 * (radius + _INVERSE_EXTRA_RADIUS) + 1
    if ndim == 2:
        return 2 * (radius + _INVERSE_EXTRA_RADIUS) + 1
    return 2 * (radius + 8) + 1


def _central_inverse_graded(components, backend: BackendDescriptor):
    """Invert an n x n array of central graded elements pointwise on the torus.

    Returns (inverse components on a possibly lifted backend, sv_ratio).
    """
    n = len(components)
    coords = sorted({c for row in components for el in row for k in el.modes
                     for c, kc in enumerate(k) if kc != 0})
    if not coords:
        g = np.array([[trace(components[i][j]) for j in range(n)] for i in range(n)])
        hmat, ratio = _invert_scalar(g)
        unit = AlgebraElement.unit(backend)
        return [[unit * hmat[i, j] for j in range(n)] for i in range(n)], ratio

    m = _grid_sizes(len(coords), backend.radius)
    grids = np.meshgrid(*[np.arange(m) / m for _ in coords], indexing="ij")
    shape = grids[0].shape

    values = np.zeros((n, n) + shape, dtype=complex)
    for i in range(n):
        for j in range(n):
            for k, c in components[i][j].modes.items():
                phase = np.zeros(shape)
                for ax, coord in enumerate(coords):
                    phase = phase + k[coord] * grids[ax]
                values[i, j] += c * np.exp(2j * np.pi * phase)

    pts = values.reshape(n, n, -1).transpose(2, 0, 1)
    svals = np.linalg.svd(pts, compute_uv=False)
    smin, smax = float(np.min(svals)), float(np.max(svals))
    ratio = smin / smax if smax > 0 else 0.0
    if ratio <= SV_RATIO_FLOOR:
        raise SingularMetric(
            f"component matrix degenerate on the torus (relative singular value {ratio:.3e})")
    inv_pts = np.linalg.inv(pts)
    inv_values = inv_pts.transpose(1, 2, 0).reshape((n, n) + shape)

    scale = float(np.max(np.abs(inv_pts)))
    max_reach = backend.radius + _INVERSE_EXTRA_RADIUS
    out: List[List[Optional[AlgebraElement]]] = [[None] * n for _ in range(n)]
    reach = 0
    comps_modes: List[List[dict]] = [[{} for _ in range(n)] for _ in range(n)]
    half = m // 2
    for i in range(n):
        for j in range(n):
            coeffs = np.fft.fftn(inv_values[i, j]) / (m ** len(coords))
            for idx in np.ndindex(*coeffs.shape):
                c = coeffs[idx]
                if abs(c) <= _INVERSE_TAIL * max(scale, 1.0):
                    continue
                mode = [0] * backend.dim
                sup = 0
                for ax, coord in enumerate(coords):
                    f = idx[ax] if idx[ax] <= half else idx[ax] - m
                    mode[coord] = f
                    sup = max(sup, abs(f))
                if sup > max_reach or (sup > half - 4):
                    raise SingularMetric(
                        "inverse components decay too slowly for the truncation budget")
                reach = max(reach, sup)
                comps_modes[i][j][tuple(mode)] = complex(c)
    inv_backend = backend if reach <= backend.radius else backend.with_radius(reach)
    for i in range(n):
        for j in range(n):
            kept = {k: v for k, v in comps_modes[i][j].items()
                    if max(map(abs, k), default=0) <= inv_backend.radius}
            out[i][j] = AlgebraElement.from_modes(inv_backend, kept)
    return out, ratio


def _invert_scalar(g: np.ndarray):
    svals = np.linalg.svd(g, compute_uv=False)
    smin, smax = float(np.min(svals)), float(np.max(svals))
    ratio = smin / smax if smax > 0 else 0.0
    if ratio <= SV_RATIO_FLOOR:
        raise SingularMetric(
            f"component matrix singular (relative singular value {ratio:.3e})")
    return np.linalg.inv(g), ratio


class MetricSpec:
    """Central, symmetric, invertible component array of a bilinear metric."""

    def __init__(self, calculus: CalculusSpec, components):
        self.calculus = calculus
        n = calculus.rank
        rows = [list(r) for r in components]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError("component array must be n x n")
        be = calculus.backend
        for i in range(n):
            for j in range(n):
                comp = rows[i][j]
                if not comp.backend.same_algebra(be):
                    raise BackendMismatch("metric component on the wrong backend")
                rows[i][j] = lift(comp, be) if comp.backend != be else comp
        tol = be.tol
        for i in range(n):
            for j in range(n):
                if not is_central(rows[i][j], calculus.generators):
                    raise NonCentralResult(f"component ({i},{j}) is not central")
                if (rows[i][j] - rows[j][i]).norm() > 10 * tol:
                    raise ValueError(f"components not symmetric at ({i},{j})")
        self.components = tuple(tuple(r) for r in rows)
        if be.kind == MATRIX:
            gmat = np.array([[trace(rows[i][j]) for j in range(n)] for i in range(n)])
            hmat, ratio = _invert_scalar(gmat)
            unit = AlgebraElement.unit(be)
            inv = [[unit * hmat[i, j] for j in range(n)] for i in range(n)]
        else:
            inv, ratio = _central_inverse_graded(rows, be)
        self.inverse_components = tuple(tuple(r) for r in inv)
        self.sv_ratio = float(ratio)

    @property
    def rank(self) -> int:
        return self.calculus.rank

    @property
    def backend(self) -> BackendDescriptor:
        return self.calculus.backend

    @property
    def inverse_backend(self) -> BackendDescriptor:
        return self.inverse_components[0][0].backend

    def component_scalars(self) -> np.ndarray:
        """Scalar parts of the components (exact for constant metrics)."""
        n = self.rank
        return np.array([[trace(self.components[i][j]) for j in range(n)] for i in range(n)])

    def is_constant(self) -> bool:
        n = self.rank
        unit = AlgebraElement.unit(self.backend)
        s = self.component_scalars()
        return all((self.components[i][j] - unit * s[i, j]).norm() <= 10 * self.backend.tol
                   for i in range(n) for j in range(n))

    @classmethod
    def delta(cls, calculus: CalculusSpec) -> "MetricSpec":
        n = calculus.rank
        unit = AlgebraElement.unit(calculus.backend)
        zero = AlgebraElement.zero(calculus.backend)
        return cls(calculus, [[unit if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def from_scalar_matrix(cls, calculus: CalculusSpec, gmat) -> "MetricSpec":
        g = np.asarray(gmat, dtype=complex)
        unit = AlgebraElement.unit(calculus.backend)
        n = calculus.rank
        return cls(calculus, [[unit * g[i, j] for j in range(n)] for i in range(n)])

    def positivity_diagnostic(self) -> np.ndarray:
        """Eigenvalues of the scalar part; informational only, never enforced."""
        s = self.component_scalars()
        return np.linalg.eigvalsh(0.5 * (s + s.conj().T))


# -- operations ---------------------------------------------------------------


def metric_eval(g: MetricSpec, t: TensorSquare) -> AlgebraElement:
    """g applied to a tensor square: sum_ij g_ij a_ij."""
    if not t.backend.same_algebra(g.backend):
        raise BackendMismatch("tensor square on the wrong backend")
    n = g.rank
    terms = [wide_mul(g.components[i][j], t.coeffs[i][j]) for i in range(n) for j in range(n)]
    return wide_sum(terms)


def v_g(g: MetricSpec, omega: OneForm) -> Functional:
    """The musical map V_g(omega)(eta) = g(omega (x) eta); component j is sum_i g_ij omega_i."""
    n = g.rank
    return Functional([wide_sum([wide_mul(g.components[i][j], omega.coeffs[i]) for i in range(n)])
                       for j in range(n)])


def v_g_inverse(g: MetricSpec, phi: Functional) -> OneForm:
    """Inverse musical map via the cached inverse components."""
    n = g.rank
    return OneForm([wide_sum([wide_mul(g.inverse_components[i][j], phi.coeffs[j])
                              for j in range(n)]) for i in range(n)])


def g2_eval(g: MetricSpec, s: TensorSquare, t: TensorSquare) -> AlgebraElement:
    """Pairing on the tensor square: on basis tensors ((e_k,e_l),(e_i,e_j)) -> g_li g_kj."""
    n = g.rank
    terms = []
    for k in range(n):
        for l in range(n):
            skl = s.coeffs[k][l]
            if skl.norm() == 0.0:
                continue
            for i in range(n):
                for j in range(n):
                    tij = t.coeffs[i][j]
                    if tij.norm() == 0.0:
                        continue
                    gg = wide_mul(g.components[l][i], g.components[k][j])
                    terms.append(wide_mul(wide_mul(gg, skl), tij))
    if not terms:
        return AlgebraElement.zero(g.backend)
    return wide_sum(terms)


@dataclass
class Vg2Matrix:
    """The component matrix of V_{g^(2)} on E (x) E, entries in the algebra."""

    metric: MetricSpec
    entries: tuple  # entries[k*n+l][i*n+j] = g_li g_kj

    @property
    def rank(self) -> int:
        return self.metric.rank

    def entry(self, kl: Tuple[int, int], ij: Tuple[int, int]) -> AlgebraElement:
        n = self.rank
        return self.entries[kl[0] * n + kl[1]][ij[0] * n + ij[1]]

    def scalar_matrix(self) -> np.ndarray:
        """Numeric n^2 x n^2 matrix; exact when the metric is constant."""
        if not self.metric.is_constant():
            raise ValueError("scalar matrix only makes sense for constant metrics")
        n2 = self.rank ** 2
        return np.array([[trace(self.entries[a][b]) for b in range(n2)] for a in range(n2)])

    def symmetric_compression(self) -> np.ndarray:
        """P_sym M P_sym on the flattened index space (constant metrics)."""
        m = self.scalar_matrix()
        p = _p_sym_flat(self.rank)
        return p @ m @ p

    def symmetric_rank(self) -> int:
        return int(np.linalg.matrix_rank(self.symmetric_compression(), tol=1e-10))

    def restricted_inverse(self) -> np.ndarray:
        """Inverse of the compression on Ran(P_sym), as a full-space matrix."""
        n = self.rank
        p = _p_sym_flat(n)
        basis = _ran_basis(p)
        comp = basis.conj().T @ self.scalar_matrix() @ basis
        svals = np.linalg.svd(comp, compute_uv=False)
        ratio = float(np.min(svals) / np.max(svals)) if np.max(svals) > 0 else 0.0
        if ratio <= SV_RATIO_FLOOR:
            raise SingularMetric("V_{g^(2)} not invertible on the symmetric subspace")
        return basis @ np.linalg.inv(comp) @ basis.conj().T


def _p_sym_flat(n: int) -> np.ndarray:
    dim = n * n
    s = np.zeros((dim, dim))
    for i in range(n):
        for j in range(n):
            s[j * n + i, i * n + j] = 1.0
    return 0.5 * (np.eye(dim) + s)


def _ran_basis(p: np.ndarray) -> np.ndarray:
    u, sv, _ = np.linalg.svd(p)
    r = int(np.sum(sv > 0.5))
    return u[:, :r]


def v_g2_matrix(g: MetricSpec) -> Vg2Matrix:
    """Assemble the component matrix M[(k,l),(i,j)] = g_li g_kj of V_{g^(2)}."""
    n = g.rank
    rows = []
    for k in range(n):
        for l in range(n):
            row = []
            for i in range(n):
                for j in range(n):
                    row.append(wide_mul(g.components[l][i], g.components[k][j]))
            rows.append(tuple(row))
    return Vg2Matrix(metric=g, entries=tuple(rows))


# -- canonical trace metric ---------------------------------------------------


@dataclass(frozen=True)
class CanonicalMetricData:
    """Operator realization of the frame: e_i acts as 1 (x) s_i on H_A (x) W."""

    spinor_ops: tuple

    @property
    def spinor_dim(self) -> int:
        return self.spinor_ops[0].shape[0]

    def frame_pair_trace(self, i: int, j: int) -> complex:
        w = self.spinor_dim
        return complex(np.trace(self.spinor_ops[i] @ self.spinor_ops[j])) / w


def canonical_metric(calculus: CalculusSpec, data: CanonicalMetricData,
                     rng: Optional[np.random.Generator] = None) -> MetricSpec:
    """Solve tau(g_ij c) = tau(e_i e_j c) over an algebra basis for the components.

    Matrix backend: the basis ranges over all matrix units and the solve runs on
    the honest Kronecker realization.  Graded backend: the basis ranges over
    single modes; the right-hand side factorizes through the spinor trace.
    """
    be = calculus.backend
    n = calculus.rank
    if len(data.spinor_ops) != n:
        raise ValueError("need one spinor operator per basis one-form")
    if be.kind == MATRIX:
        comps = _canonical_matrix(calculus, data, rng)
    else:
        comps = _canonical_graded(calculus, data)
    for i in range(n):
        for j in range(n):
            if not is_central(comps[i][j], calculus.generators):
                raise NonCentralResult(f"canonical metric component ({i},{j}) not central")
    return MetricSpec(calculus, comps)


def _canonical_matrix(calculus: CalculusSpec, data: CanonicalMetricData, rng):
    be = calculus.backend
    n, N, w = calculus.rank, be.size, data.spinor_dim
    frame = [np.kron(np.eye(N), s) for s in data.spinor_ops]
    comps = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            prod = frame[i] @ frame[j]
            # partial trace over the spinor factor solves tau(g c) = tau(e_i e_j c)
            # against the matrix-unit basis: g[q,p] = (1/w) sum_s prod[(q,s),(p,s)]
            block = prod.reshape(N, w, N, w)
            gmat = np.einsum("asbs->ab", block) / w
            comps[i][j] = AlgebraElement.from_matrix(be, gmat)
    rng = rng or np.random.default_rng(7)
    for _ in range(3):
        c = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        cc = np.kron(c, np.eye(w))
        i, j = rng.integers(0, n, size=2)
        lhs = np.trace(comps[i][j].matrix @ c) / N
        rhs = np.trace(frame[i] @ frame[j] @ cc) / (N * w)
        if abs(lhs - rhs) > 1e-9 * max(1.0, abs(rhs)):
            raise SingularMetric("canonical trace solve failed verification")
    return comps


def _canonical_graded(calculus: CalculusSpec, data: CanonicalMetricData):
    be = calculus.backend
    n = calculus.rank
    comps = [[None] * n for _ in range(n)]
    ball = [k for k in itertools.product(range(-1, 2), repeat=be.dim)]
    for i in range(n):
        for j in range(n):
            wij = data.frame_pair_trace(i, j)
            # tau(g U^l) = tau(U^l) w_ij forces the zero mode w_ij and kills the rest
            modes = {}
            for l in ball:
                rhs = wij if all(x == 0 for x in l) else 0.0
                if rhs != 0.0:
                    modes[tuple(-x for x in l)] = rhs
            comps[i][j] = AlgebraElement.from_modes(be, modes)
    return comps
