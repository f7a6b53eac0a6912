import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from equivint.matexp import (affine_algebra, as_matrix, cayley, commutator, expm,
                             general_linear_algebra, hat, pair_algebra,
                             random_general_linear, random_special_orthogonal,
                             solve_sylvester_spd, special_linear_algebra,
                             special_orthogonal_algebra, vee)

finite = st.floats(-3, 3, allow_nan=False)


def rodrigues(v):
    """Closed-form rotation about ``v`` by angle ``|v|``."""
    theta = np.linalg.norm(v)
    if theta == 0:
        return np.eye(3)
    k = hat(v / theta)
    return np.eye(3) + np.sin(theta) * k + (1 - np.cos(theta)) * k @ k


@given(arrays(float, 3, elements=finite))
def test_expm_of_rotation_generator_matches_rodrigues(v):
    np.testing.assert_allclose(expm(hat(v)), rodrigues(v), atol=1e-13)


@settings(max_examples=60)
@given(arrays(float, (4, 4), elements=st.floats(-1, 1)), st.sampled_from([1e-3, 0.3, 2.0, 40.0]))
def test_expm_agrees_with_scipy(a, scale):
    ref = scipy.linalg.expm(scale * a)
    got = expm(scale * a)
    # forward error of any backward-stable expm grows with the norm of the argument
    tol = 1e-13 * max(1.0, np.linalg.norm(scale * a, 1)) * max(1.0, np.linalg.norm(ref))
    assert np.linalg.norm(got - ref) <= tol


def test_expm_zero_diagonal_and_nilpotent():
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(expm(np.diag([1.0, -2.0])), np.diag(np.exp([1.0, -2.0])),
                               rtol=1e-15)
    n = np.array([[0.0, 2.0], [0.0, 0.0]])
    np.testing.assert_allclose(expm(n), [[1.0, 2.0], [0.0, 1.0]], atol=1e-15)


@given(arrays(float, (3, 3), elements=finite))
def test_expm_inverse_is_expm_of_negative(a):
    np.testing.assert_allclose(expm(a) @ expm(-a), np.eye(3), atol=1e-9)


def test_expm_rejects_bad_input():
    with pytest.raises(ValueError):
        expm(np.ones((2, 3)))
    with pytest.raises(ValueError):
        expm([[np.nan]])
    with pytest.raises(OverflowError):
        expm(np.array([[1e300, 0.0], [0.0, 0.0]]))


def test_cayley_quarter_turn():
    np.testing.assert_allclose(cayley([[0.0, -2.0], [2.0, 0.0]]), [[0.0, -1.0], [1.0, 0.0]],
                               atol=1e-15)


@given(arrays(float, 3, elements=finite))
def test_cayley_is_orthogonal_and_inverts_under_negation(v):
    c = cayley(hat(v))
    np.testing.assert_allclose(c.T @ c, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(cayley(-hat(v)), np.linalg.inv(c), atol=1e-12)


def test_cayley_singular():
    with pytest.raises(np.linalg.LinAlgError):
        cayley(2.0 * np.eye(2))


@given(arrays(float, 3, elements=finite), arrays(float, 3, elements=finite))
def test_hat_is_cross_product(v, w):
    np.testing.assert_allclose(hat(v) @ w, np.cross(v, w), atol=1e-12)
    np.testing.assert_array_equal(vee(hat(v)), v)


def test_vee_rejects_non_skew():
    with pytest.raises(ValueError):
        vee(np.eye(3))


def test_commutator():
    a, b = hat([1, 0, 0]), hat([0, 1, 0])
    np.testing.assert_allclose(commutator(a, b), hat([0, 0, 1]))
    with pytest.raises(ValueError):
        commutator(np.eye(2), np.eye(3))


@given(st.integers(0, 10_000), st.integers(1, 5))
def test_sylvester_matches_kronecker_solve(seed, d):
    rng = np.random.default_rng(seed)
    a = random_general_linear(d, rng)
    p = a @ a.T
    r = rng.standard_normal((d, d))
    r = r + r.T
    kron = np.kron(np.eye(d), p) + np.kron(p.T, np.eye(d))
    ref = np.linalg.solve(kron, r.ravel(order="F")).reshape((d, d), order="F")
    np.testing.assert_allclose(solve_sylvester_spd(p, r), ref, atol=1e-10)


def test_sylvester_errors():
    with pytest.raises(ValueError, match="positive definite"):
        solve_sylvester_spd(np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(ValueError, match="symmetric"):
        solve_sylvester_spd(np.eye(2), [[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError, match="mismatch"):
        solve_sylvester_spd(np.eye(2), np.eye(3))


@pytest.mark.parametrize("d", [1, 2, 3, 6])
def test_random_special_orthogonal(d):
    q = random_special_orthogonal(d, 4)
    np.testing.assert_allclose(q.T @ q, np.eye(d), atol=1e-13)
    assert np.linalg.det(q) == pytest.approx(1.0)
    np.testing.assert_array_equal(q, random_special_orthogonal(d, 4))


def test_random_general_linear_is_well_conditioned():
    g = random_general_linear(4, 1, spread=0.5)
    assert np.linalg.det(g) > 0
    assert np.linalg.cond(g) <= np.exp(1.0) + 1e-9


@pytest.mark.parametrize("algebra, dim", [
    (special_orthogonal_algebra(4), 6),
    (general_linear_algebra(3), 9),
    (special_linear_algebra(3), 8),
    (affine_algebra(general_linear_algebra(2)), 6),
    (affine_algebra(special_orthogonal_algebra(3)), 6),
    (pair_algebra(special_orthogonal_algebra(3)), 6),
])
def test_algebra_dimensions_and_membership(algebra, dim):
    basis = algebra.basis()
    assert len(basis) == dim == algebra.dim
    for b in basis:
        assert algebra.contains(b)
    assert algebra.contains(algebra.sample(0))


def test_algebra_check_rejects_outsiders():
    with pytest.raises(ValueError):
        special_orthogonal_algebra(3).check(np.eye(3))


def test_as_matrix_promotes_vectors():
    assert as_matrix([1.0, 2.0]).shape == (2, 1)
