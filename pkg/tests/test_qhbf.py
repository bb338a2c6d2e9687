import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from qivif.exceptions import ConvergenceWarning, DimensionMismatchError
from qivif.models.params import QhbfParams
from qivif.models.qhbf import (
    EPS_FLOOR,
    EXPECTATION_CAP,
    EXPECTATION_FLOOR,
    e_step,
    log_objective,
    m_step,
    m_step_objective,
    run_qhbf,
    update_eps,
)
from qivif.quaternion import QuaternionMatrix, apply_filter

from .conftest import random_matrix


def _single(value: float) -> QuaternionMatrix:
    return QuaternionMatrix.from_parts([[0.0]], [[value]], [[0.0]], [[0.0]])


def test_expectation_at_unit_modulus():
    one, zero = _single(1.0), _single(0.0)
    M, N = e_step(one, zero, eps_s=2.0, eps_q=2.0, variant="proportional")
    assert M[0, 0] == pytest.approx(1.0)
    assert N[0, 0] == EXPECTATION_FLOOR

    M, N = e_step(one, zero, eps_s=2.0, eps_q=2.0, variant="reciprocal")
    assert M[0, 0] == pytest.approx(1.0)
    assert N[0, 0] == EXPECTATION_CAP


def test_variants_agree_at_unit_modulus(rng):
    one = _single(1.0)
    for eps in rng.uniform(0.01, 5.0, size=10):
        proportional, _ = e_step(one, one, eps, eps, "proportional")
        reciprocal, _ = e_step(one, one, eps, eps, "reciprocal")
        assert proportional[0, 0] == pytest.approx(reciprocal[0, 0], rel=1e-14)


def test_unknown_variant(rng):
    one = _single(1.0)
    with pytest.raises(ValueError):
        e_step(one, one, 1.0, 1.0, "median")
    with pytest.raises(DimensionMismatchError):
        e_step(random_matrix(rng, 2, 2), random_matrix(rng, 2, 3), 1.0, 1.0)


@pytest.mark.parametrize("modulus, eps", [(0.7, 0.3), (2.0, 0.05), (0.1, 1.0)])
def test_reciprocal_variant_is_the_posterior_mean(modulus, eps):
    # posterior ~ m^(-3/2) exp(-(s^2 m + 2 / (m eps)) / 2), integrated over u = log m
    expected, _ = e_step(_single(modulus), _single(modulus), eps, eps, "reciprocal")
    centre = math.log(expected[0, 0])
    u = np.linspace(centre - 25.0, centre + 25.0, 400001)
    m = np.exp(u)
    log_density = -1.5 * u - 0.5 * (modulus**2 * m + 2.0 / (m * eps)) + u
    weights = np.exp(log_density - log_density.max())
    mean = trapezoid(m * weights, u) / trapezoid(weights, u)
    assert mean == pytest.approx(expected[0, 0], rel=1e-6)


def test_zero_target_gives_zero_layer(rng):
    T = QuaternionMatrix.zeros(6, 6)
    M = rng.uniform(0.5, 2.0, size=(6, 6))
    log = []
    S = m_step(T, M, M, 0.5, 0.5, log=log)
    assert S.norm() == 0.0
    assert log[0].converged and log[0].iterations == 0


def test_unregularised_step_is_pointwise(rng):
    T = random_matrix(rng, 5, 7)
    M = rng.uniform(0.2, 2.0, size=(5, 7))
    N = rng.uniform(0.2, 2.0, size=(5, 7))
    S = m_step(T, M, N, 0.0, 0.0)
    assert S.allclose(T * (N**2 / (M**2 + N**2)), atol=1e-14)


def _dense_neg_laplacian(h, w) -> np.ndarray:
    columns = []
    for idx in range(h * w):
        basis = np.zeros((4, h, w))
        basis[0].flat[idx] = 1.0
        columns.append(-apply_filter(QuaternionMatrix(basis), "laplacian").real.ravel())
    return np.stack(columns, axis=1)


def _dense_m_step(T, M, N, w1, w2) -> np.ndarray:
    h, w = T.shape
    neg_lap = _dense_neg_laplacian(h, w)
    system = np.diag((M**2 + N**2).ravel()) + 0.5 * (w1 + w2) * neg_lap
    planes = []
    for c in range(4):
        t = T.components[c].ravel()
        rhs = (N**2).ravel() * t + 0.5 * w2 * neg_lap @ t
        planes.append(np.linalg.solve(system, rhs).reshape(h, w))
    return np.stack(planes)


def test_regularised_step_matches_dense_solve(rng):
    T = random_matrix(rng, 8, 8)
    M = rng.uniform(0.2, 2.0, size=(8, 8))
    N = rng.uniform(0.2, 2.0, size=(8, 8))
    log = []
    S = m_step(T, M, N, 0.7, 0.4, tol=1e-12, max_iter=1000, log=log)
    assert log[0].converged
    assert np.allclose(S.components, _dense_m_step(T, M, N, 0.7, 0.4), atol=1e-8)


def test_widely_spread_weights_match_dense_solve(rng):
    # spread of M^2 + N^2 well past the Jacobi switch
    T = random_matrix(rng, 8, 8)
    M = np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=(8, 8)))
    N = np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=(8, 8)))
    assert (M**2 + N**2).max() > 1e3 * (M**2 + N**2).min()
    log = []
    S = m_step(T, M, N, 0.6, 0.5, tol=1e-10, max_iter=2000, log=log)
    assert log[0].converged
    assert np.allclose(S.components, _dense_m_step(T, M, N, 0.6, 0.5), atol=1e-6)


def test_solver_reaches_the_requested_tolerance(rng):
    T = random_matrix(rng, 16, 12)
    M = rng.uniform(0.01, 3.0, size=(16, 12))
    N = rng.uniform(0.01, 3.0, size=(16, 12))
    tol = 1e-8
    log = []
    m_step(T, M, N, 2.0, 1.0, tol=tol, max_iter=500, log=log)
    assert log[0].converged
    assert log[0].residual <= 2 * tol


def test_constant_difference_splits_by_weight():
    T = QuaternionMatrix.from_pure(*np.full((3, 6, 6), 0.8))
    ones = np.ones((6, 6))
    S = m_step(T, ones, ones, 0.3, 0.3, tol=1e-12)
    assert S.allclose(T * 0.5, atol=1e-10)


def test_m_step_minimises_its_objective(rng):
    T = random_matrix(rng, 6, 6)
    M = rng.uniform(0.3, 1.5, size=(6, 6))
    N = rng.uniform(0.3, 1.5, size=(6, 6))
    S = m_step(T, M, N, 0.5, 0.25, tol=1e-12, max_iter=500)
    best = m_step_objective(S, T, M, N, 0.5, 0.25)
    for _ in range(10):
        nudged = S + random_matrix(rng, 6, 6, scale=1e-3)
        assert m_step_objective(nudged, T, M, N, 0.5, 0.25) >= best - 1e-12


def test_unconverged_solve_warns(rng):
    T = random_matrix(rng, 10, 10)
    M = rng.uniform(0.2, 2.0, size=(10, 10))
    log = []
    with pytest.warns(ConvergenceWarning):
        m_step(T, M, M, 5.0, 5.0, tol=1e-14, max_iter=1, log=log)
    assert not log[0].converged


def test_weight_maps_must_be_positive(rng):
    T = random_matrix(rng, 3, 3)
    ones = np.ones((3, 3))
    zeros = np.zeros((3, 3))
    with pytest.raises(ValueError):
        m_step(T, zeros, ones, 0.1, 0.1)
    with pytest.raises(DimensionMismatchError):
        m_step(T, np.ones((3, 4)), ones, 0.1, 0.1)


def test_identical_sources_fuse_to_themselves(rng):
    I_v = random_matrix(rng, 8, 8, pure=True)
    result = run_qhbf(I_v, I_v)
    assert np.array_equal(result.F.components, I_v.components)
    assert result.state.S.norm() == 0.0
    assert result.state.eps_s == EPS_FLOOR


def test_fused_image_is_base_plus_latent(rng):
    I_v = random_matrix(rng, 10, 10, pure=True)
    I_f = random_matrix(rng, 10, 10, pure=True)
    result = run_qhbf(I_v, I_f, QhbfParams(em_iters=3))
    assert result.F.allclose(result.state.S + I_v, atol=0.0)
    assert result.state.Q.allclose((I_f - I_v) - result.state.S, atol=0.0)
    assert result.trace.iterations == 3
    assert len(result.m_step_objectives) == 3
    assert len(result.inner) == 3


@pytest.mark.parametrize("variant", ["proportional", "reciprocal"])
@pytest.mark.parametrize("em_iters", [1, 3])
def test_unsmoothed_fusion_is_a_convex_combination(rng, variant, em_iters):
    I_v = random_matrix(rng, 9, 7, pure=True)
    I_f = random_matrix(rng, 9, 7, pure=True)
    params = QhbfParams(w1=0.0, w2=0.0, em_iters=em_iters, estep_variant=variant)
    result = run_qhbf(I_v, I_f, params)
    M, N = result.state.M, result.state.N
    expected = I_v + (I_f - I_v) * (N**2 / (M**2 + N**2))
    assert result.F.allclose(expected, atol=1e-12)


def test_first_unsmoothed_step_splits_by_noise_scale(rng):
    # S starts at T/2, so the proportional weights reduce to eps_s / (eps_s + eps_q)
    I_v = random_matrix(rng, 6, 6, pure=True)
    I_f = random_matrix(rng, 6, 6, pure=True)
    params = QhbfParams(w1=0.0, w2=0.0, eps_s=0.05, eps_q=0.5, em_iters=1)
    result = run_qhbf(I_v, I_f, params)
    assert result.F.allclose(I_v + (I_f - I_v) * (0.05 / 0.55), atol=1e-12)


def test_reciprocal_em_does_not_increase_the_log_objective(rng):
    I_v = random_matrix(rng, 8, 8, pure=True)
    I_f = random_matrix(rng, 8, 8, pure=True)
    params = QhbfParams(
        estep_variant="reciprocal",
        freeze_eps=True,
        eps_s=0.05,
        eps_q=0.1,
        inner_tol=1e-10,
        inner_max_iter=1000,
        em_iters=6,
    )
    T = I_f - I_v
    start = log_objective(T * 0.5, T, 0.05, 0.1, params.w1, params.w2)
    values = [start] + run_qhbf(I_v, I_f, params).trace.objective
    for before, after in zip(values, values[1:]):
        assert after <= before + 1e-9 * abs(before) + 1e-12


def test_log_objective_is_tangent_to_the_m_step_objective(rng):
    # their difference is stationary at the point the weights were taken from
    S = QuaternionMatrix.from_pure(*rng.uniform(0.5, 1.5, size=(3, 5, 5)))
    T = QuaternionMatrix.from_pure(*rng.uniform(-1.5, -0.5, size=(3, 5, 5)))
    M, N = e_step(S, T - S, 0.2, 0.3, "reciprocal")
    direction = random_matrix(rng, 5, 5, pure=True)
    h = 1e-6

    def gap(step):
        shifted = S + direction * step
        return log_objective(shifted, T, 0.2, 0.3, 0.4, 0.6) - m_step_objective(shifted, T, M, N, 0.4, 0.6)

    def m_objective(step):
        return m_step_objective(S + direction * step, T, M, N, 0.4, 0.6)

    slope = (gap(h) - gap(-h)) / (2 * h)
    scale = abs(m_objective(h) - m_objective(-h)) / (2 * h)
    assert abs(slope) <= 1e-5 * max(scale, 1.0)


def test_noise_scale_update_is_floored(rng):
    zero = QuaternionMatrix.zeros(4, 4)
    assert update_eps(zero, zero) == (EPS_FLOOR, EPS_FLOOR)
    S = random_matrix(rng, 4, 4)
    eps_s, _ = update_eps(S, zero)
    assert eps_s == pytest.approx(S.modulus().mean())


def test_runs_are_deterministic(rng):
    I_v = random_matrix(rng, 12, 12, pure=True)
    I_f = random_matrix(rng, 12, 12, pure=True)
    first, second = run_qhbf(I_v, I_f), run_qhbf(I_v, I_f)
    assert np.array_equal(first.F.components, second.F.components)


def test_inputs_must_agree(rng):
    with pytest.raises(DimensionMismatchError):
        run_qhbf(random_matrix(rng, 4, 4), random_matrix(rng, 4, 5))


def test_legacy_variant_name_selects_the_default():
    assert QhbfParams(estep_variant="paper") == QhbfParams()
    with pytest.raises(ValueError):
        QhbfParams(estep_variant="median")
