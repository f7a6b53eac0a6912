import numpy as np
import pytest

from equivint import fields
from equivint.skeleton import integrate, named_skeleton
from equivint.spaces import get_space


@pytest.mark.parametrize("name", ["sphere:3", "stiefel:5,2", "spd:3", "so:3",
                                  "cartan_schouten:so3:mean", "affine:2"])
@pytest.mark.parametrize("kind", ["constant_rotation", "gradient_like", "smooth", "zero"])
def test_fields_are_tangent(name, kind):
    space, _ = get_space(name)
    f = fields.make_field(space, kind, 3)
    x = space.sample_point(4)
    v = f(x)
    np.testing.assert_allclose(space.tangent_project(x, v), v, atol=1e-12)


def test_constant_rotation_is_exact_under_the_maurer_cartan_form():
    space, conn = get_space("so:3")
    f = fields.make_field(space, "constant_rotation", 1)
    x0 = space.sample_point(2)
    for name in ("euler_forward", "rkmk4", "gauss4"):
        x = integrate(named_skeleton(name), space, conn.choice(f, 0.1), x0, 10)[-1]
        np.testing.assert_allclose(x, f.exact(1.0, x0), atol=1e-13)


def test_constant_rotation_on_the_sphere_is_resolved_to_method_accuracy():
    # the connection keeps only the part of xi0 that moves x, which varies along the orbit
    space, conn = get_space("sphere:3")
    f = fields.make_field(space, "constant_rotation", 1)
    x0 = space.sample_point(2)
    x = integrate(named_skeleton("rkmk4"), space, conn.choice(f, 0.01), x0, 100)[-1]
    assert np.linalg.norm(x - f.exact(1.0, x0)) <= 1e-6


def test_user_coefficients():
    space, _ = get_space("so:3")
    z = np.zeros((3, 3))
    a = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    f = fields.make_field(space, {"name": "coefficients", "A": a, "B": z, "C": z}, 0)
    np.testing.assert_allclose(f(np.eye(3)), a)
    with pytest.raises(ValueError, match="missing"):
        fields.make_field(space, {"name": "coefficients", "A": a}, 0)
    with pytest.raises(ValueError):
        fields.make_field(space, {"name": "coefficients", "A": np.eye(3), "B": z, "C": z}, 0)


def test_toda_needs_an_isospectral_space():
    space, _ = get_space("sphere:3")
    with pytest.raises(ValueError, match="isospectral"):
        fields.make_field(space, "toda", 0)
    iso, _ = get_space("isospectral:3,2,1")
    p = iso.sample_point(0)
    v = fields.make_field(iso, "toda", 0)(p)
    np.testing.assert_allclose(v, v.T, atol=1e-14)


def test_unknown_field():
    space, _ = get_space("sphere:3")
    with pytest.raises(ValueError, match="valid fields"):
        fields.make_field(space, "vortex", 0)


def test_fields_are_deterministic_in_the_seed():
    space, _ = get_space("stiefel:4,2")
    x = space.sample_point(0)
    a = fields.make_field(space, "smooth", 11)(x)
    b = fields.make_field(space, "smooth", 11)(x)
    np.testing.assert_array_equal(a, b)
