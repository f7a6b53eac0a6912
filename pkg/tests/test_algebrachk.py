import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equivint import algebrachk as ac
from equivint.matexp import random_general_linear


@pytest.mark.parametrize("label, split, reductive, symmetric, flat", [
    ("sphere", ac.stiefel_split(3, 1), True, True, False),
    ("stiefel 4,2", ac.stiefel_split(4, 2), True, False, False),
    ("cartan-schouten mean", ac.cartan_schouten_split(3, "mean"), True, True, False),
    ("cartan-schouten plus", ac.cartan_schouten_split(3, "plus"), True, False, True),
    ("affine", ac.affine_split(2, "gl"), True, True, True),
    ("affine rigid", ac.affine_split(3, "so"), True, True, True),
    ("grassmann 5,2", ac.block_split([2, 3]), True, True, False),
    ("spd", ac.spd_split(2), True, True, False),
])
def test_classify(label, split, reductive, symmetric, flat):
    c = ac.classify(split)
    assert (c.reductive, c.symmetric, c.flat) == (reductive, symmetric, flat), label


def test_non_reductive_complement_is_detected():
    # in sl(2) over the diagonal, span{E + H, F} is a complement but not invariant
    e, f, h = ac.sl2_basis()
    c = ac.classify(ac.SubalgebraSplit([e, f, h], [h], [e + h, f]))
    assert not c.reductive
    assert c.residuals[0] > 1e-3


def test_flat_and_symmetric_means_abelian():
    c = ac.classify(ac.affine_split(3))
    assert c.flat and c.symmetric
    split = ac.affine_split(3)
    for a in split.m_basis:
        for b in split.m_basis:
            assert np.linalg.norm(a @ b - b @ a) == 0.0


def test_classify_needs_a_complement():
    split = ac.SubalgebraSplit(ac.sl2_basis(), [ac.sl2_basis()[2]])
    with pytest.raises(ValueError, match="complement"):
        ac.classify(split)


@pytest.mark.parametrize("g, h, m, message", [
    (lambda: [np.eye(2), 2 * np.eye(2)], lambda: [], lambda: None, "independent"),
    (ac.sl2_basis, lambda: ac.sl2_basis()[:2], lambda: None, "closed"),
    (ac.sl2_basis, lambda: [ac.sl2_basis()[2]], lambda: [ac.sl2_basis()[0]], "dim"),
    (ac.sl2_basis, lambda: [np.eye(2)], lambda: None, "contained"),
])
def test_split_validation(g, h, m, message):
    with pytest.raises(ValueError, match=message):
        ac.SubalgebraSplit(g(), h(), m())


def test_sl2_over_nilpotent_has_no_reductive_complement():
    g = ac.sl2_basis()
    found = ac.find_reductive_complements(g, [g[0]])
    assert found.empty and found.dimension == -1
    assert found.describe() == "no reductive complement exists"
    with pytest.raises(ValueError):
        found.complement()


def test_sl2_over_diagonal_has_a_unique_complement():
    e, f, h = ac.sl2_basis()
    found = ac.find_reductive_complements([e, f, h], [h])
    assert found.describe() == "unique complement"
    m = found.complement()
    assert ac.classify(ac.SubalgebraSplit([e, f, h], [h], m)).reductive


def test_affine_with_scalings_has_only_the_translations():
    split = ac.affine_split(3, "gl")
    found = ac.find_reductive_complements(split.g_basis, split.h_basis)
    assert found.describe() == "unique complement"
    m = np.array([b.ravel() for b in found.complement()]).T
    t = np.array([b.ravel() for b in split.m_basis]).T
    # same span as the translation generators
    assert np.linalg.matrix_rank(np.hstack([m, t]), tol=1e-9) == t.shape[1]


def test_trivial_isotropy_has_the_whole_algebra_as_unique_complement():
    g = ac.so_basis(3)
    found = ac.find_reductive_complements(g, [])
    assert found.dimension == 0
    assert len(found.complement()) == 3


def _parameters_of(found, target):
    """Parameters ``t`` whose complement spans ``target`` (least squares)."""
    h, c = list(found.h_basis), list(found.seed_basis)
    joint = np.array([b.ravel() for b in h + c]).T
    coef = np.linalg.lstsq(joint, np.array([b.ravel() for b in target]).T, rcond=None)[0]
    hc, cc = coef[:len(h)], coef[len(h):]
    a = (hc @ np.linalg.inv(cc)).T
    dirs = np.array([d.ravel() for d in found.directions]).T
    return np.linalg.lstsq(dirs, (a - found.particular).ravel(), rcond=None)[0]


@pytest.mark.parametrize("variant, symmetric, flat", [
    ("plus", False, True), ("minus", False, True), ("mean", True, False)])
def test_cartan_schouten_family_contains_each_structure(variant, symmetric, flat):
    split = ac.cartan_schouten_split(3, variant)
    found = ac.find_reductive_complements(split.g_basis, split.h_basis)
    assert found.dimension >= 1
    t = _parameters_of(found, split.m_basis)
    m = found.complement(t)
    c = ac.classify(ac.SubalgebraSplit(split.g_basis, split.h_basis, m))
    assert (c.reductive, c.symmetric, c.flat) == (True, symmetric, flat)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.sampled_from(["so3", "sl2"]))
def test_every_member_of_the_family_is_reductive(t, which):
    if which == "so3":
        split = ac.cartan_schouten_split(3, "mean")
        g, h = split.g_basis, split.h_basis
    else:
        e, f, hh = ac.sl2_basis()
        g, h = [e, f, hh], [hh]
    found = ac.find_reductive_complements(g, h)
    m = found.complement([t] * found.dimension)
    assert ac.classify(ac.SubalgebraSplit(g, h, m)).reductive


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_emptiness_is_invariant_under_change_of_basis(seed):
    a = random_general_linear(2, seed, spread=1.0)
    ainv = np.linalg.inv(a)
    g = [a @ b @ ainv for b in ac.sl2_basis()]
    assert ac.find_reductive_complements(g, [g[0]]).empty
    assert not ac.find_reductive_complements(g, [g[2]]).empty


def test_component_representatives_are_checked():
    split = ac.block_split([2, 2])
    k = np.diag([-1.0, 1.0, -1.0, 1.0])
    c = ac.classify(ac.SubalgebraSplit(split.g_basis, split.h_basis, split.m_basis, [k]))
    assert c.reductive and c.criterion == "infinitesimal+components"
    # a component that mixes the blocks breaks invariance of m
    p = np.eye(4)[[0, 2, 1, 3]]
    c = ac.classify(ac.SubalgebraSplit(split.g_basis, split.h_basis, split.m_basis, [p]))
    assert not c.reductive


def test_row_uses_check_marks():
    assert ac.classify(ac.stiefel_split(3, 1)).row() == "reductive ✓ symmetric ✓ flat ✗"
