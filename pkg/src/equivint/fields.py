"""Named test vector fields on catalog spaces.

Every field is built from the space's own action, so it is tangent by
construction.  ``constant_rotation`` also carries its exact flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .matexp import as_matrix, expm
from .spaces import HomogeneousSpace, toda_generator

FIELD_NAMES = ("constant_rotation", "gradient_like", "smooth", "toda", "zero", "coefficients")


@dataclass(frozen=True)
class VectorField:
    name: str
    f: Callable[[np.ndarray], np.ndarray]
    exact: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    generator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x):
        return self.f(x)


def constant_rotation(space: HomogeneousSpace, xi0) -> VectorField:
    """``f(x) = xi0 . x``; the flow is ``exp(t xi0) . x0``."""
    xi0 = space.algebra.check(as_matrix(xi0, "xi0"), "xi0")
    return VectorField(
        "constant_rotation",
        lambda x: space.inf_act(xi0, x),
        exact=lambda t, x0: space.act(expm(t * xi0), x0),
        generator=lambda x: xi0)


def smooth(space: HomogeneousSpace, a, b, c) -> VectorField:
    """``f(x) = (A + sin(<C, x>) B) . x`` with ``A``, ``B`` in the symmetry algebra."""
    a = space.algebra.check(as_matrix(a, "A"), "A")
    b = space.algebra.check(as_matrix(b, "B"), "B")
    c = np.asarray(c, dtype=float).reshape(np.shape(space.origin))

    def gen(x):
        return a + np.sin(float(np.sum(c * x))) * b
    return VectorField("smooth", lambda x: space.inf_act(gen(x), x), generator=gen)


def random_smooth(space: HomogeneousSpace, seed, scale: float = 1.0) -> VectorField:
    rng = np.random.default_rng(seed)
    a = space.algebra.sample(rng, scale)
    b = space.algebra.sample(rng, scale)
    c = rng.standard_normal(np.shape(space.origin))
    return smooth(space, a, b, c)


def gradient_like(space: HomogeneousSpace, target) -> VectorField:
    """Tangent projection of ``target - x``: relaxes towards ``target``."""
    target = np.asarray(target, dtype=float)
    return VectorField("gradient_like", lambda x: space.tangent_project(x, target - x))


def toda(space: HomogeneousSpace) -> VectorField:
    """Lax field ``P' = [B(P), P]`` with the Toda generator; isospectral spaces only."""
    if not space.name.startswith(("isospectral", "grassmann")):
        raise ValueError(f"toda field needs an isospectral space, got {space.name}")
    return VectorField("toda", lambda p: space.inf_act(toda_generator(p), p),
                       generator=toda_generator)


def zero(space: HomogeneousSpace) -> VectorField:
    return VectorField("zero", lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                       exact=lambda t, x0: np.array(x0, dtype=float),
                       generator=lambda x: np.zeros((space.algebra.size,) * 2))


def make_field(space: HomogeneousSpace, entry, seed) -> VectorField:
    """Build a field from a name or a mapping ``{"name": ..., ...}``.

    ``coefficients`` needs ``A``, ``B`` (algebra elements) and ``C``;
    ``constant_rotation`` accepts an optional ``xi``; ``gradient_like`` an
    optional ``target`` point.  Missing parameters are drawn from ``seed``.
    """
    params: Mapping = entry if isinstance(entry, Mapping) else {"name": entry}
    name = params.get("name")
    rng = np.random.default_rng(seed)
    if name == "constant_rotation":
        xi = params.get("xi")
        return constant_rotation(space, space.algebra.sample(rng) if xi is None else xi)
    if name == "gradient_like":
        target = params.get("target")
        return gradient_like(space, space.sample_point(rng) if target is None else target)
    if name == "smooth":
        return random_smooth(space, rng)
    if name == "toda":
        return toda(space)
    if name == "zero":
        return zero(space)
    if name == "coefficients":
        missing = [k for k in ("A", "B", "C") if k not in params]
        if missing:
            raise ValueError(f"coefficients field is missing {', '.join(missing)}")
        return smooth(space, params["A"], params["B"], params["C"])
    raise ValueError(f"unknown field {name!r}; valid fields: {', '.join(FIELD_NAMES)}")
