import math

import numpy as np
import pytest

from qivif.imgcodec import intensity
from qivif.models.params import QlsParams
from qivif.models.qls import (
    hard_shrink,
    lighting_objective,
    normalize_intensity,
    project_intensity,
    run_qls,
    update_lighting_layer,
)
from qivif.quaternion import QuaternionMatrix, gradient

from .conftest import random_matrix


def _gray(plane) -> QuaternionMatrix:
    return QuaternionMatrix.from_pure(plane, plane, plane)


def _operator(order, h, w) -> np.ndarray:
    """Dense matrix of a periodic stencil acting on a row-major h*w plane."""
    from qivif.quaternion import apply_filter

    columns = []
    for idx in range(h * w):
        basis = np.zeros((4, h, w))
        basis[0].flat[idx] = 1.0
        columns.append(apply_filter(QuaternionMatrix(basis), order).real.ravel())
    return np.stack(columns, axis=1)


def test_hard_shrink_identity_and_boundary():
    data = np.zeros((4, 1, 3))
    data[:, 0, 0] = [0.0, 3.0, 4.0, 0.0]  # modulus 5
    data[:, 0, 1] = [1.0, 0.0, 0.0, 0.0]
    data[:, 0, 2] = [0.0, 0.0, 0.0, 7.0]
    X = QuaternionMatrix(data)
    assert hard_shrink(X, 0.0).allclose(X, atol=0.0)
    out = hard_shrink(X, 5.0)
    assert np.all(out.components[:, 0, :2] == 0.0)
    assert np.array_equal(out.components[:, 0, 2], data[:, 0, 2])


def test_hard_shrink_zeroes_exactly_the_small_support(rng):
    X = random_matrix(rng, 9, 7)
    tau = 1.5
    out = hard_shrink(X, tau)
    moduli = X.modulus()
    for r in range(9):
        for c in range(7):
            if moduli[r, c] <= tau:
                assert np.all(out.components[:, r, c] == 0.0)
            else:
                assert np.array_equal(out.components[:, r, c], X.components[:, r, c])


def test_spectral_update_matches_dense_least_squares(rng):
    h = w = 8
    lap = _operator("laplacian", h, w)
    dx = _operator("grad1_x", h, w)
    dy = _operator("grad1_y", h, w)
    for _ in range(20):
        lam, mu = float(rng.uniform(0.01, 1.0)), float(rng.uniform(0.1, 10.0))
        L = random_matrix(rng, h, w, pure=True)
        G = (random_matrix(rng, h, w), random_matrix(rng, h, w))
        I = update_lighting_layer(L, G, lam, mu, constrain=False)

        system = np.vstack([math.sqrt(lam) * lap, math.sqrt(mu / 2) * dx, math.sqrt(mu / 2) * dy])
        planes = []
        for c in range(4):
            rhs = np.concatenate(
                [
                    math.sqrt(lam) * lap @ L.components[c].ravel(),
                    math.sqrt(mu / 2) * G[0].components[c].ravel(),
                    math.sqrt(mu / 2) * G[1].components[c].ravel(),
                ]
            )
            planes.append(np.linalg.lstsq(system, rhs, rcond=None)[0].reshape(h, w))
        oracle = QuaternionMatrix(np.stack(planes))

        best = lighting_objective(oracle, L, G, lam, mu)
        got = lighting_objective(I, L, G, lam, mu)
        assert abs(got - best) <= 1e-6 * max(1.0, best)


def test_dominant_fidelity_returns_the_input(rng):
    L = random_matrix(rng, 8, 8, pure=True)
    zeros = QuaternionMatrix.zeros(8, 8)
    I = update_lighting_layer(L, (zeros, zeros), lam=1e9, mu2=1.0, constrain=False)
    assert I.allclose(L, atol=1e-6)


def test_constant_input_stays_constant():
    L = _gray(np.full((6, 6), 0.3))
    zeros = QuaternionMatrix.zeros(6, 6)
    I = update_lighting_layer(L, (zeros, zeros), lam=0.01, mu2=0.1)
    assert I.allclose(L, atol=1e-12)


def test_intensity_constraint_holds_after_update(rng):
    L = _gray(rng.random((10, 10)))
    G = (random_matrix(rng, 10, 10, scale=0.5), random_matrix(rng, 10, 10, scale=0.5))
    I = update_lighting_layer(L, G, lam=0.05, mu2=1.0)
    t = intensity(I, clamp=False)
    assert np.all(t >= 0.0)
    assert np.all(t <= intensity(L, clamp=False) + 1e-12)


def test_projection_rescales_only_violating_pixels():
    L = _gray(np.array([[0.5, 0.5, 0.5]]))
    I = _gray(np.array([[0.25, 0.8, -0.1]]))
    out = project_intensity(I, L)
    assert np.allclose(out.i, [[0.25, 0.5, 0.0]], atol=1e-15)


def test_normalisation_spans_unit_range(rng):
    I = _gray(0.2 + 0.3 * rng.random((5, 5)))
    t = intensity(normalize_intensity(I), clamp=False)
    assert t.min() == pytest.approx(0.0, abs=1e-12)
    assert t.max() == pytest.approx(1.0, abs=1e-12)

    flat = _gray(np.full((3, 3), 0.4))
    assert normalize_intensity(flat) is flat


def test_smooth_dark_input_is_left_alone():
    L = _gray(np.full((12, 12), 0.2))
    result = run_qls(L)
    assert result.I.allclose(L, atol=1e-12)
    assert result.G[0].norm() == 0.0
    assert result.G[1].norm() == 0.0
    assert result.trace.converged


def test_infinite_tolerance_runs_one_iteration(rng):
    L = _gray(rng.random((8, 8)))
    result = run_qls(L, QlsParams(tol=math.inf))
    assert result.trace.iterations == 1


def test_penalty_schedule(rng):
    L = _gray(rng.random((10, 10)))
    params = QlsParams(tol=1e-300, max_iter=12)
    result = run_qls(L, params)
    assert result.trace.iterations >= 2
    expected, mu = [], params.mu2_init
    for _ in range(result.trace.iterations):
        expected.append(mu)
        mu = min(1e6, mu * 5)
    assert result.trace.penalty == expected


def _glow_scene(size=32):
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    texture = 0.15 + 0.1 * (((yy // 4) + (xx // 4)) % 2)
    blob = 0.6 * np.exp(-((yy - size / 2) ** 2 + (xx - size / 2) ** 2) / (2 * 8.0**2))
    return texture, blob


def _correlation(a: tuple, b: tuple) -> float:
    num = sum(x.inner(y) for x, y in zip(a, b))
    den = math.sqrt(sum(x.norm() ** 2 for x in a) * sum(y.norm() ** 2 for y in b))
    return num / den


def test_glow_is_suppressed_and_texture_kept():
    texture, blob = _glow_scene()
    result = run_qls(_gray(texture + blob))
    grad_I = gradient(result.I)
    assert _correlation(grad_I, gradient(_gray(texture))) > _correlation(grad_I, gradient(_gray(blob)))


def test_runs_are_deterministic(small_pair):
    from qivif.imgcodec import encode_visible

    L = encode_visible(small_pair.visible)
    first, second = run_qls(L), run_qls(L)
    assert np.array_equal(first.I.components, second.I.components)
    assert np.array_equal(first.G[0].components, second.G[0].components)


def test_channelwise_domain(small_pair):
    from qivif.imgcodec import encode_visible

    L = encode_visible(small_pair.visible)
    result = run_qls(L, QlsParams(domain="channelwise", max_iter=5))
    assert result.I.shape == L.shape
    assert result.I.is_pure()
    assert result.trace.iterations >= 3
