import numpy as np
import pytest
from pydantic import ValidationError

from qivif.exceptions import DimensionMismatchError
from qivif.models.params import QaumMode
from qivif.models.qaum import enhance, gain_maps
from qivif.quaternion import QuaternionMatrix

from .conftest import random_matrix


def test_no_detail_returns_the_base(rng):
    I_v = random_matrix(rng, 5, 6, pure=True)
    zero = QuaternionMatrix.zeros(5, 6)
    assert np.array_equal(enhance(I_v, zero, zero).components, I_v.components)


def test_opposite_details_cancel(rng):
    I_v = random_matrix(rng, 5, 6, pure=True)
    D = random_matrix(rng, 5, 6, pure=True)
    assert enhance(I_v, D, -D).allclose(I_v, atol=1e-14)


def test_summation_is_linear(rng):
    I_v, D_f, D_v = (random_matrix(rng, 4, 4, pure=True) for _ in range(3))
    assert np.array_equal(enhance(I_v, D_f, D_v).components, (I_v + D_f + D_v).components)


def test_adaptive_with_unit_gains_is_summation(rng):
    I_v, D_f, D_v = (random_matrix(rng, 6, 5, pure=True) for _ in range(3))
    mode = QaumMode(mode="adaptive", g_min=1.0, g_max=1.0)
    assert enhance(I_v, D_f, D_v, mode).allclose(enhance(I_v, D_f, D_v), atol=1e-15)


def test_adaptive_gains_stay_in_range_and_follow_strength(rng):
    I_v = QuaternionMatrix.from_pure(*rng.random((3, 8, 8)))
    D_f = random_matrix(rng, 8, 8, pure=True)
    lam_f, lam_v = gain_maps(I_v, D_f, QaumMode(mode="adaptive", g_min=0.5, g_max=1.5))
    for gains in (lam_f, lam_v):
        assert gains.min() == pytest.approx(0.5)
        assert gains.max() == pytest.approx(1.5)

    strength = D_f.modulus().ravel()
    order = np.argsort(strength)
    assert np.all(np.diff(lam_f.ravel()[order]) >= -1e-15)


def test_adaptive_gains_on_flat_inputs_are_the_floor():
    flat = QuaternionMatrix.from_pure(*np.full((3, 4, 4), 0.3))
    lam_f, lam_v = gain_maps(flat, flat, QaumMode(mode="adaptive", g_min=0.2, g_max=0.9))
    assert np.all(lam_f == 0.2)
    assert np.all(lam_v == 0.2)


def test_shape_mismatch(rng):
    with pytest.raises(DimensionMismatchError):
        enhance(random_matrix(rng, 4, 4), random_matrix(rng, 4, 4), random_matrix(rng, 4, 5))


def test_mode_validation():
    with pytest.raises(ValidationError):
        QaumMode(mode="multiply")
    with pytest.raises(ValidationError):
        QaumMode(mode="adaptive", g_min=2.0, g_max=1.0)
