import numpy as np
import pytest

from nclevi.algebra import AlgebraElement, random_element, star, wide_mul, wide_sum
from nclevi.calculus import TensorSquare, random_one_form, random_tensor_square, sigma
from nclevi.errors import NonCentralResult, SingularMetric
from nclevi.metric import (
    Functional,
    MetricSpec,
    g2_eval,
    metric_eval,
    v_g,
    v_g2_matrix,
    v_g_inverse,
)
from nclevi.models import torus_bundle

TOL = 1e-12


# -- metric_eval ------------------------------------------------------------------


def test_delta_eval_examples(fuzzy1):
    spec, g = fuzzy1.calculus, fuzzy1.metric
    one = AlgebraElement.unit(spec.backend)
    assert (metric_eval(g, spec.basis_tensor(0, 0)) - one).norm() <= TOL
    assert metric_eval(g, spec.basis_tensor(0, 1)).norm() <= TOL


def test_eval_flip_invariant(fuzzy1, torus_twisted):
    rng = np.random.default_rng(0)
    for model in (fuzzy1, torus_twisted):
        spec, g = model.calculus, model.metric
        for _ in range(10):
            t = random_tensor_square(spec, rng)
            d = wide_sum([metric_eval(g, sigma(t)), -metric_eval(g, t)])
            assert d.norm() <= 10 * TOL


def test_eval_bilinear(fuzzy1):
    spec, g = fuzzy1.calculus, fuzzy1.metric
    rng = np.random.default_rng(1)
    t = random_tensor_square(spec, rng)
    a = random_element(spec.backend, rng)
    left = wide_sum([metric_eval(g, t.left_mul(a)), -wide_mul(a, metric_eval(g, t))])
    right = wide_sum([metric_eval(g, t.right_mul(a)), -wide_mul(metric_eval(g, t), a)])
    assert left.norm() <= 1e-10 and right.norm() <= 1e-10


# -- V_g ---------------------------------------------------------------------------


def test_v_g_delta_coordinates(fuzzy1):
    spec, g = fuzzy1.calculus, fuzzy1.metric
    phi = v_g(g, spec.basis_one_form(1))
    assert phi.coeffs[0].norm() <= TOL
    assert (phi.coeffs[1] - AlgebraElement.unit(spec.backend)).norm() <= TOL


def test_v_g_inverse_diagonal(fuzzy1):
    spec = fuzzy1.calculus
    g = MetricSpec.from_scalar_matrix(spec, np.diag([2.0, 1.0, 1.0]))
    unit = AlgebraElement.unit(spec.backend)
    zero = AlgebraElement.zero(spec.backend)
    phi = Functional([unit, zero, zero])
    w = v_g_inverse(g, phi)
    assert (w.coeffs[0] - unit * 0.5).norm() <= TOL
    assert w.coeffs[1].norm() <= TOL


def test_v_g_roundtrips(fuzzy1, torus_comm):
    rng = np.random.default_rng(2)
    for model in (fuzzy1, torus_comm):
        spec, g = model.calculus, model.metric
        for _ in range(10):
            w = random_one_form(spec, rng)
            back = v_g_inverse(g, v_g(g, w))
            assert max(wide_sum([a, -b]).norm()
                       for a, b in zip(back.coeffs, w.coeffs)) <= 1e-9


def test_singular_metric_zero_row(fuzzy1):
    spec = fuzzy1.calculus
    with pytest.raises(SingularMetric):
        MetricSpec.from_scalar_matrix(spec, np.diag([1.0, 1.0, 0.0]))


def test_singular_metric_vanishing_component(torus_comm):
    # phi = 1 - cos(2 pi x_3) vanishes on the torus: not invertible
    spec = torus_comm.calculus
    be = spec.backend
    unit = AlgebraElement.unit(be)
    zero = AlgebraElement.zero(be)
    phi = unit + AlgebraElement.from_modes(be, {(0, 0, 1): -0.5, (0, 0, -1): -0.5})
    with pytest.raises(SingularMetric):
        MetricSpec(spec, [[unit, zero, zero], [zero, unit, zero], [zero, zero, phi]])


def test_noncentral_component_rejected(fuzzy1):
    spec = fuzzy1.calculus
    unit = AlgebraElement.unit(spec.backend)
    zero = AlgebraElement.zero(spec.backend)
    rng = np.random.default_rng(3)
    bad = random_element(spec.backend, rng)
    with pytest.raises(NonCentralResult):
        MetricSpec(spec, [[unit, zero, zero], [zero, unit, zero], [zero, zero, bad]])


# -- canonical metric -----------------------------------------------------------------


def test_canonical_metric_fuzzy_is_delta(fuzzy1, fuzzy2):
    for model in (fuzzy1, fuzzy2):
        s = model.metric.component_scalars()
        assert np.max(np.abs(s - np.eye(3))) <= 1e-12
        assert model.metric.is_constant()


def test_canonical_metric_heisenberg_is_delta(heis):
    s = heis.metric.component_scalars()
    assert np.max(np.abs(s - np.eye(3))) <= 1e-12


def test_canonical_metric_torus_is_delta(torus_comm, torus_twisted):
    for model in (torus_comm, torus_twisted):
        s = model.metric.component_scalars()
        assert np.max(np.abs(s - np.eye(3))) <= 1e-12
        assert model.metric.is_constant()


def test_canonical_metric_positivity_diagnostic(fuzzy1):
    eigs = fuzzy1.metric.positivity_diagnostic()
    assert np.all(eigs.real > 0.0)


# -- g2 ---------------------------------------------------------------------------------


def test_g2_delta_examples(fuzzy1):
    spec, g = fuzzy1.calculus, fuzzy1.metric
    one = AlgebraElement.unit(spec.backend)
    val = g2_eval(g, spec.basis_tensor(0, 1), spec.basis_tensor(1, 0))
    assert (val - one).norm() <= TOL
    assert g2_eval(g, spec.basis_tensor(0, 1), spec.basis_tensor(0, 1)).norm() <= TOL


def test_g2_flip_adjoint(fuzzy1, torus_twisted):
    rng = np.random.default_rng(4)
    for model in (fuzzy1, torus_twisted):
        spec, g = model.calculus, model.metric
        for _ in range(5):
            s = random_tensor_square(spec, rng)
            t = random_tensor_square(spec, rng)
            d = wide_sum([g2_eval(g, sigma(s), t), -g2_eval(g, s, sigma(t))])
            assert d.norm() <= 1e-9


def test_v_g2_matrix_n2_permutation():
    model = torus_bundle(2, 2, np.zeros((2, 2)), radius=2)
    m = v_g2_matrix(model.metric)
    mat = m.scalar_matrix()
    # delta metric: M[(k,l),(i,j)] = delta_li delta_kj, the swap matrix
    expected = np.zeros((4, 4))
    for k in range(2):
        for l in range(2):
            expected[k * 2 + l, l * 2 + k] = 1.0
    assert np.max(np.abs(mat - expected)) <= TOL
    assert np.max(np.abs(mat @ mat - np.eye(4))) <= TOL


def test_v_g2_symmetric_rank_n3(fuzzy1):
    m = v_g2_matrix(fuzzy1.metric)
    assert m.symmetric_rank() == 6
    inv = m.restricted_inverse()
    from nclevi.metric import _p_sym_flat
    p = _p_sym_flat(3)
    comp = p @ m.scalar_matrix() @ p
    assert np.max(np.abs(p @ (inv @ comp) @ p - p)) <= 1e-10


def test_v_g2_sigma_conjugation(fuzzy1, torus_twisted):
    for model in (fuzzy1, torus_twisted):
        m = v_g2_matrix(model.metric)
        n = model.calculus.rank
        worst = 0.0
        for k in range(n):
            for l in range(n):
                for i in range(n):
                    for j in range(n):
                        d = wide_sum([m.entry((l, k), (i, j)), -m.entry((k, l), (j, i))])
                        worst = max(worst, d.norm())
        assert worst <= 10 * TOL


def test_hilbert_module_identity(fuzzy1):
    # <<x, y>>_{g2} computed through the conjugate-swap S(e (x) f) = fbar (x) ebar
    # matches g2(S(x) (x) y) on the self-adjoint central basis
    spec, g = fuzzy1.calculus, fuzzy1.metric
    rng = np.random.default_rng(5)
    n = spec.rank
    for _ in range(5):
        x = random_tensor_square(spec, rng)
        y = random_tensor_square(spec, rng)
        # S(sum e_k (x) e_l x_kl) has coefficients x_lk^* on the self-adjoint frame
        sx = TensorSquare([[star(x.coeffs[j][i]) for j in range(n)] for i in range(n)])
        lhs = g2_eval(g, sx, y)
        # <<f, <<e, e'>>_g f'>>_g unwound on coefficients for the delta metric:
        # <<x, y>>_{g2} = sum_kl x_kl^* y_kl
        rhs = wide_sum([wide_mul(star(x.coeffs[k][l]), y.coeffs[k][l])
                        for k in range(n) for l in range(n)])
        assert wide_sum([lhs, -rhs]).norm() <= 1e-9


def test_functional_evaluation_contract(fuzzy1):
    # phi(sum e_i a_i) = sum phi_i a_i
    spec = fuzzy1.calculus
    rng = np.random.default_rng(6)
    phis = [random_element(spec.backend, rng) for _ in range(3)]
    phi = Functional(phis)
    w = random_one_form(spec, rng)
    got = phi(w)
    want = wide_sum([wide_mul(p, a) for p, a in zip(phis, w.coeffs)])
    assert wide_sum([got, -want]).norm() <= TOL


def test_v_g_inverse_then_v_g(fuzzy1, torus_comm):
    rng = np.random.default_rng(7)
    for model in (fuzzy1, torus_comm):
        spec, g = model.calculus, model.metric
        phis = Functional([random_element(spec.backend, rng) for _ in range(3)])
        back = v_g(g, v_g_inverse(g, phis))
        assert max(wide_sum([a, -b]).norm()
                   for a, b in zip(back.coeffs, phis.coeffs)) <= 1e-9
