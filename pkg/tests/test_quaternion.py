import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qivif.exceptions import DimensionMismatchError
from qivif.quaternion import Quaternion, QuaternionMatrix, matmul, qmul, solve_left, solve_right

from .conftest import random_matrix

ONE = Quaternion(1.0)
I = Quaternion(0.0, 1.0)
J = Quaternion(0.0, 0.0, 1.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)

components = st.floats(min_value=-100, max_value=100, allow_nan=False)
quaternions = st.builds(Quaternion, components, components, components, components)


def test_basis_products():
    assert qmul(I, J) == K
    assert qmul(J, I) == -K
    assert qmul(J, K) == I
    assert qmul(K, I) == J
    for unit in (I, J, K):
        assert qmul(unit, unit) == -ONE


@pytest.mark.parametrize("p, q", [(I, J), (J, K), (K, I)])
def test_anticommutation(p, q):
    assert qmul(p, q) == -qmul(q, p)


def test_expanded_product():
    assert (ONE + I) * (ONE + J) == Quaternion(1.0, 1.0, 1.0, 1.0)


def test_product_with_conjugate_is_squared_modulus():
    q = Quaternion(1.0, 2.0, 3.0, 4.0)
    assert q * q.conj() == Quaternion(30.0)
    assert (q * q.conj()).is_pure() is False


@given(quaternions, quaternions)
def test_modulus_is_multiplicative(p, q):
    assert math.isclose((p * q).modulus(), p.modulus() * q.modulus(), rel_tol=1e-12, abs_tol=1e-9)


@given(quaternions)
def test_conjugation_is_an_involution(q):
    assert q.conj().conj() == q
    assert q.conj().modulus() == q.modulus()


def test_identity_is_neutral(rng):
    A = random_matrix(rng, 5, 3)
    assert (A @ QuaternionMatrix.identity(3)).allclose(A, atol=1e-14)
    assert (QuaternionMatrix.identity(5) @ A).allclose(A, atol=1e-14)


def test_one_by_one_product_is_qmul():
    p = Quaternion(0.5, -1.0, 2.0, 0.25)
    q = Quaternion(-1.5, 0.5, 1.0, 3.0)
    P = QuaternionMatrix.from_quaternions([p])
    Q = QuaternionMatrix.from_quaternions([q])
    got = (P @ Q).entry(0, 0)
    assert np.allclose(got.as_tuple(), (p * q).as_tuple(), atol=1e-14)


def test_product_matches_complex_adjoint(rng):
    A = random_matrix(rng, 3, 2)
    B = random_matrix(rng, 2, 4)
    assert np.allclose((A @ B).adjoint(), A.adjoint() @ B.adjoint(), atol=1e-12)


def test_product_matches_entrywise_hamilton_sums(rng):
    A = random_matrix(rng, 2, 3)
    B = random_matrix(rng, 3, 2)
    C = A @ B
    for r in range(2):
        for c in range(2):
            expected = Quaternion(0.0)
            for m in range(3):
                expected = expected + A.entry(r, m) * B.entry(m, c)
            assert np.allclose(C.entry(r, c).as_tuple(), expected.as_tuple(), atol=1e-12)


def test_associativity_and_conjugate_transpose(rng):
    A = random_matrix(rng, 3, 4)
    B = random_matrix(rng, 4, 2)
    C = random_matrix(rng, 2, 5)
    assert ((A @ B) @ C).allclose(A @ (B @ C), atol=1e-10)
    assert (A @ B).H.allclose(B.H @ A.H, atol=1e-10)
    assert A.H.H.allclose(A, atol=0.0)


def test_inner_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        matmul(QuaternionMatrix.zeros(2, 3), QuaternionMatrix.zeros(2, 3))
    with pytest.raises(DimensionMismatchError):
        QuaternionMatrix.zeros(2, 3) + QuaternionMatrix.zeros(3, 2)


def test_matrices_are_read_only():
    A = QuaternionMatrix.zeros(2, 2)
    with pytest.raises(ValueError):
        A.components[0, 0, 0] = 1.0


def test_norms_of_zero_matrix():
    Z = QuaternionMatrix.zeros(3, 4)
    for kind in ("l1", "fro", "nuclear", "max"):
        assert Z.norm(kind) == 0.0


def test_norms_of_single_entry():
    A = QuaternionMatrix.from_quaternions([Quaternion(1.0, 1.0, 1.0, 1.0)])
    assert A.norm("l1") == 2.0
    assert A.norm("fro") == 2.0


def test_nuclear_norm_of_diagonal():
    D = QuaternionMatrix.from_quaternions([Quaternion(3.0), Quaternion(1.0)])
    assert D.norm("nuclear") == pytest.approx(4.0, abs=1e-12)


def test_frobenius_and_l1_definitions(rng):
    A = random_matrix(rng, 4, 6)
    moduli = np.sqrt(np.sum(A.components**2, axis=0))
    assert A.norm("fro") ** 2 == pytest.approx(np.sum(moduli**2), rel=1e-12)
    assert A.norm("l1") == pytest.approx(np.sum(moduli), rel=1e-12)


def test_pure_predicate(rng):
    assert random_matrix(rng, 3, 3, pure=True).is_pure()
    assert not QuaternionMatrix.identity(2).is_pure()


def test_linear_solves(rng):
    M = random_matrix(rng, 4, 4)
    gram = M.H @ M + QuaternionMatrix.identity(4)
    R_left = random_matrix(rng, 4, 3)
    R_right = random_matrix(rng, 2, 4)

    X = solve_left(gram, R_left, hermitian=True)
    assert (gram @ X - R_left).norm() <= 1e-9 * max(1.0, R_left.norm())

    Y = solve_right(R_right, gram, hermitian=True)
    assert (Y @ gram - R_right).norm() <= 1e-9 * max(1.0, R_right.norm())

    X_gen = solve_left(M, R_left)
    assert (M @ X_gen - R_left).norm() <= 1e-8 * max(1.0, R_left.norm())
