import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equivint.matexp import expm, random_general_linear, random_special_orthogonal
from equivint.spaces import (get_space, grassmann_connection, isospectral, lax_choice, lift,
                             spd_space, spd_sylvester_form, stiefel, toda_generator)

WITH_CONNECTION = [
    "sphere:3", "sphere:5", "stiefel:5,2", "stiefel:4,3", "grassmann:4,2", "grassmann:5,1",
    "isospectral:2*2,-1*3", "spd:3", "so:3", "so:4:right", "gl:3", "gl:2:right",
    "cartan_schouten:so3:mean", "cartan_schouten:gl2:plus", "cartan_schouten:so3:minus",
    "affine:3", "affine:2:so",
]


@pytest.mark.parametrize("name", WITH_CONNECTION)
def test_origin_and_samples_lie_on_the_space(name):
    space, conn = get_space(name)
    assert conn is not None
    assert space.membership(space.origin) <= 1e-14
    x = space.sample_point(0)
    assert space.membership(x) <= 1e-12


@pytest.mark.parametrize("name", WITH_CONNECTION)
def test_isotropy_basis_fixes_the_origin(name):
    space, _ = get_space(name)
    for b in space.iso_basis:
        assert space.algebra.contains(b)
        np.testing.assert_allclose(space.inf_act(b, space.origin), 0.0, atol=1e-14)


@pytest.mark.parametrize("name", WITH_CONNECTION)
def test_lift_point_projects_back(name):
    space, _ = get_space(name)
    x = space.sample_point(3)
    g = space.lift_point(x)
    np.testing.assert_allclose(space.act(g, space.origin), x, atol=1e-12)


@pytest.mark.parametrize("name", WITH_CONNECTION)
def test_lifted_field_descends(name):
    space, conn = get_space(name)
    rng = np.random.default_rng(4)
    xi = space.algebra.sample(rng)
    def f(x):
        return space.inf_act(xi, x)
    g = space.sample_group(rng)
    x = space.act(g, space.origin)
    # the lifted vector, right-translated to the algebra, moves x along f
    np.testing.assert_allclose(space.inf_act(lift(conn, f)(g) @ np.linalg.inv(g), x), f(x),
                               atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(WITH_CONNECTION), st.integers(0, 10_000))
def test_connection_is_consistent(name, seed):
    space, conn = get_space(name)
    rng = np.random.default_rng(seed)
    x = space.sample_point(rng)
    v = space.sample_tangent(x, rng)
    assert np.linalg.norm(space.inf_act(conn(x, v), x) - v) <= 1e-11 * max(1, np.linalg.norm(v))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(WITH_CONNECTION), st.integers(0, 10_000))
def test_connection_takes_values_in_the_algebra(name, seed):
    space, conn = get_space(name)
    rng = np.random.default_rng(seed)
    x = space.sample_point(rng)
    assert space.algebra.contains(conn(x, space.sample_tangent(x, rng)), tol=1e-11)


def test_sphere_connection_closed_form():
    space, conn = get_space("sphere:3")
    x = np.array([[0.0], [0.0], [1.0]])
    v = np.array([[1.0], [0.0], [0.0]])
    np.testing.assert_allclose(conn(x, v), [[0, 0, 1], [0, 0, 0], [-1, 0, 0]])


def test_stiefel_connection_at_origin_hits_the_block_complement():
    space, conn = stiefel(4, 2)
    w = np.array([[1.0, 2.0], [3.0, 4.0]])
    omega = np.array([[0.0, 5.0], [-5.0, 0.0]])
    xi = conn(space.origin, np.vstack([w, omega]))
    np.testing.assert_allclose(xi[:2, :2], 0.0)
    np.testing.assert_allclose(xi[:2, 2:], w)
    np.testing.assert_allclose(xi[2:, 2:], omega)


def test_stiefel_rejects_square_and_off_manifold_points():
    with pytest.raises(ValueError, match="k < n"):
        stiefel(3, 3)
    _, conn = stiefel(4, 2)
    with pytest.raises(ValueError, match="not on"):
        conn(2 * np.ones((4, 2)), np.zeros((4, 2)))


def test_grassmann_connection_needs_two_eigenvalues():
    with pytest.raises(ValueError, match="two"):
        grassmann_connection(isospectral([3.0, 2.0, 1.0]))
    space, conn = get_space("isospectral:3,2,1")
    assert conn is None


def test_isospectral_needs_distinct_values():
    with pytest.raises(ValueError):
        isospectral([(1.0, 3)])
    with pytest.raises(ValueError):
        isospectral([1.0, 1.0])


def test_isospectral_tangent_projection_is_tangent():
    space = isospectral([(2.0, 2), (1.0, 1), (0.0, 1)])
    p = space.sample_point(1)
    z = space.sample_tangent(p, 2)
    # tangent vectors are [xi, P] for skew xi, so they have zero trace against P^k
    for k in range(4):
        assert abs(np.trace(np.linalg.matrix_power(p, k) @ z)) <= 1e-12


def test_toda_generator_and_lax_choice():
    p = isospectral([3.0, 2.0, 1.0]).sample_point(0)
    b = toda_generator(p)
    np.testing.assert_allclose(b, -b.T)
    np.testing.assert_allclose(lax_choice(toda_generator, 0.5)(p), 0.5 * b)
    with pytest.raises(ValueError, match="skew"):
        lax_choice(lambda q: q)(p)


def test_spd_connection_is_gl_equivariant_and_sylvester_form_is_not():
    space, conn = spd_space(3)
    syl = spd_sylvester_form(space)
    rng = np.random.default_rng(0)
    p = space.sample_point(rng)
    dp = space.sample_tangent(p, rng)
    a = random_general_linear(3, rng)
    r = random_special_orthogonal(3, rng)
    def defect(c, g):
        return np.linalg.norm(c(g @ p @ g.T, g @ dp @ g.T) - g @ c(p, dp) @ np.linalg.inv(g))
    assert defect(conn, a) <= 1e-12
    assert defect(syl, r) <= 1e-12
    assert defect(syl, a) > 1e-3
    # both agree at the identity, where the connection is dP / 2
    np.testing.assert_allclose(conn(np.eye(3), dp), dp / 2)
    np.testing.assert_allclose(syl(np.eye(3), dp), dp / 2)


def test_spd_rejects_non_symmetric_tangent():
    _, conn = spd_space(2)
    with pytest.raises(ValueError, match="symmetric"):
        conn(np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_right_maurer_cartan_action():
    space, conn = get_space("so:3:right")
    rng = np.random.default_rng(2)
    xi = space.algebra.sample(rng)
    x = space.sample_point(rng)
    np.testing.assert_allclose(space.act(expm(xi), x), x @ expm(-xi), atol=1e-14)
    np.testing.assert_allclose(conn(x, space.inf_act(xi, x)), xi, atol=1e-13)


@pytest.mark.parametrize("name", ["blob:3", "sphere", "stiefel:3,5", "so:3:middle",
                                  "cartan_schouten:so3:sideways", "affine:2:xy"])
def test_registry_rejects_bad_names(name):
    with pytest.raises(ValueError):
        get_space(name)
