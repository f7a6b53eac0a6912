"""Catalog of homogeneous spaces and their connections.

Points are stored as concrete matrices (``Q``, ``P``, ``g``); cosets only
appear in the docs.  Every space knows its action, infinitesimal action,
origin, a distance-to-manifold, the symmetry algebra and a basis of the
isotropy algebra at the origin.

A connection is an algebra-valued one-form ``omega(x, v)`` with
``inf_act(omega(x, v), x) == v`` that commutes with the group action.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .matexp import (Algebra, affine_algebra, as_matrix, block_diag,
                     general_linear_algebra, pair_algebra,
                     random_general_linear, random_special_orthogonal,
                     solve_sylvester_spd, special_orthogonal_algebra, skew, sym)

MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True)
class HomogeneousSpace:
    name: str
    act: Callable[[np.ndarray, np.ndarray], np.ndarray]
    inf_act: Callable[[np.ndarray, np.ndarray], np.ndarray]
    push: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    origin: np.ndarray
    membership: Callable[[np.ndarray], float]
    algebra: Algebra
    iso_basis: tuple[np.ndarray, ...]
    sample_group: Callable[[object], np.ndarray]
    tangent_project: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lift_point: Optional[Callable[[np.ndarray], np.ndarray]] = None
    invariant_name: str = "distance"
    invariant: Optional[Callable[[np.ndarray], float]] = None

    @property
    def algebra_tag(self) -> str:
        return self.algebra.name

    def adjoint(self, g, xi) -> np.ndarray:
        return g @ xi @ np.linalg.inv(g)

    def sample_point(self, rng) -> np.ndarray:
        return self.act(self.sample_group(rng), self.origin)

    def sample_tangent(self, x, rng, scale: float = 1.0) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return scale * self.tangent_project(x, rng.standard_normal(np.shape(x)))

    def invariant_value(self, x) -> float:
        f = self.invariant or self.membership
        return float(f(x))

    def require_point(self, x, what: str = "point") -> np.ndarray:
        x = as_matrix(x, what)
        dist = self.membership(x)
        if not dist <= MEMBERSHIP_TOL:
            raise ValueError(f"{what} is not on {self.name} (distance {dist:.3g})")
        return x


@dataclass(frozen=True)
class Connection:
    space: HomogeneousSpace
    form: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = ""

    def eval(self, x, v) -> np.ndarray:
        return self.form(np.asarray(x, dtype=float), np.asarray(v, dtype=float))

    __call__ = eval

    def choice(self, f: Callable[[np.ndarray], np.ndarray], h: float = 1.0):
        """Isotropy choice ``x -> h * omega(x, f(x))``."""
        def nu(x):
            return h * self.form(x, f(x))
        return nu


def lift(conn: Connection, f: Callable[[np.ndarray], np.ndarray]):
    """Lift of the field ``f`` to the group: ``g -> omega([g], f([g])) g``."""
    space = conn.space

    def lifted(g):
        x = space.act(g, space.origin)
        return conn.eval(x, f(x)) @ g
    return lifted


def _orth_residual(q) -> float:
    q = np.asarray(q, dtype=float)
    return float(np.linalg.norm(q.T @ q - np.eye(q.shape[1])))


def _unit_basis(n: int, pairs: Sequence[tuple[int, int]]) -> tuple[np.ndarray, ...]:
    out = []
    for i, j in pairs:
        e = np.zeros((n, n))
        e[i, j], e[j, i] = 1.0, -1.0
        out.append(e)
    return tuple(out)


def _linear_group_sampler(tag: str, d: int):
    if tag in ("so", "orthogonal"):
        return lambda rng: random_special_orthogonal(d, rng)
    if tag in ("gl", "full-gl"):
        return lambda rng: random_general_linear(d, rng)
    raise ValueError(f"unknown group tag {tag!r}; expected 'so' or 'gl'")


def _linear_algebra(tag: str, d: int) -> Algebra:
    if tag in ("so", "orthogonal"):
        return special_orthogonal_algebra(d)
    if tag in ("gl", "full-gl"):
        return general_linear_algebra(d)
    raise ValueError(f"unknown group tag {tag!r}; expected 'so' or 'gl'")


# --- affine spaces ---------------------------------------------------------

def affine_space(isotropy_tag: str, d: int) -> tuple[HomogeneousSpace, Connection]:
    """R^d under ``x -> h x + a`` written in homogeneous coordinates.

    Points are ``d x 1`` columns.  The connection is pure translation.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    linear = _linear_algebra(isotropy_tag, d)
    sample_linear = _linear_group_sampler(isotropy_tag, d)

    def act(g, x):
        return g[:d, :d] @ x + g[:d, d:]

    def inf_act(xi, x):
        return xi[:d, :d] @ x + xi[:d, d:]

    def push(g, x, v):
        return g[:d, :d] @ v

    def sample_group(rng):
        rng = np.random.default_rng(rng)
        g = np.eye(d + 1)
        g[:d, :d] = sample_linear(rng)
        g[:d, d] = rng.standard_normal(d)
        return g

    def membership(x):
        x = np.asarray(x)
        return 0.0 if x.shape == (d, 1) and np.all(np.isfinite(x)) else np.inf

    def lift_point(x):
        g = np.eye(d + 1)
        g[:d, d:] = x
        return g

    iso = []
    for b in linear.basis():
        e = np.zeros((d + 1, d + 1))
        e[:d, :d] = b
        iso.append(e)

    space = HomogeneousSpace(
        f"affine:{d}:{isotropy_tag}", act, inf_act, push, np.zeros((d, 1)), membership,
        affine_algebra(linear), tuple(iso), sample_group,
        lambda x, z: np.array(z, dtype=float), lift_point, "distance")

    def form(x, v):
        out = np.zeros((d + 1, d + 1))
        out[:d, d:] = np.asarray(v).reshape(d, 1)
        return out

    return space, Connection(space, form, "translation")


# --- Stiefel manifolds and spheres -------------------------------------------

def stiefel(n: int, k: int) -> tuple[HomogeneousSpace, Connection]:
    """Orthonormal ``n x k`` frames under ``R . Q = R Q`` with ``R`` in SO(n).

    Only ``k < n`` is catalogued.  ``k == 1`` is the sphere S^{n-1}.
    """
    if not 1 <= k < n:
        raise ValueError(f"stiefel needs 1 <= k < n, got n={n}, k={k}")
    origin = np.zeros((n, k))
    origin[n - k:, :] = np.eye(k)
    m = n - k

    def lift_point(q):
        # complete q to a rotation whose last k columns are q
        proj = np.eye(n) - q @ q.T
        u, s, _ = np.linalg.svd(proj)
        r = np.hstack([u[:, :m], q])
        if np.linalg.det(r) < 0:
            r[:, 0] = -r[:, 0]
        return r

    space = HomogeneousSpace(
        f"sphere:{n}" if k == 1 else f"stiefel:{n},{k}",
        act=lambda g, x: g @ x,
        inf_act=lambda xi, x: xi @ x,
        push=lambda g, x, v: g @ v,
        origin=origin,
        membership=_orth_residual,
        algebra=special_orthogonal_algebra(n),
        iso_basis=_unit_basis(n, [(i, j) for i in range(m) for j in range(i + 1, m)]),
        sample_group=lambda rng: random_special_orthogonal(n, rng),
        tangent_project=lambda q, z: z - q @ sym(q.T @ z),
        lift_point=lift_point,
        invariant_name="orthonormality_residual",
    )

    def form(q, dq):
        space.require_point(q)
        return dq @ q.T - q @ dq.T + q @ dq.T @ q @ q.T

    return space, Connection(space, form, "stiefel")


def sphere(n: int) -> tuple[HomogeneousSpace, Connection]:
    """Unit sphere in R^n as ``stiefel(n, 1)``."""
    return stiefel(n, 1)


# --- isospectral manifolds -----------------------------------------------------

def _parse_spectrum(eigs) -> tuple[np.ndarray, list[float], list[int]]:
    values, mults = [], []
    for item in eigs:
        if np.ndim(item) == 0:
            value, mult = float(item), 1
        else:
            value, mult = float(item[0]), int(item[1])
        if mult < 1:
            raise ValueError("multiplicities must be positive")
        if any(abs(value - v) < 1e-12 for v in values):
            raise ValueError(f"eigenvalue {value} listed twice")
        values.append(value)
        mults.append(mult)
    diag = np.repeat(values, mults)
    return diag, values, mults


def isospectral(eigs) -> HomogeneousSpace:
    """Symmetric matrices with a prescribed spectrum, under ``R P R^T``.

    ``eigs`` is a sequence of ``(value, multiplicity)`` pairs or bare values.
    """
    diag, values, mults = _parse_spectrum(eigs)
    if len(values) < 2:
        raise ValueError("need at least two distinct eigenvalues "
                         "(the manifold reduces to one point)")
    d = len(diag)
    target = np.sort(diag)
    order = np.argsort(diag, kind="stable")
    groups = np.repeat(np.arange(len(values)), mults)
    value_arr = np.array(values)

    def membership(p):
        p = np.asarray(p, dtype=float)
        if p.shape != (d, d):
            return np.inf
        asym = float(np.linalg.norm(p - p.T))
        return asym + float(np.max(np.abs(np.linalg.eigvalsh(sym(p)) - target)))

    def _eig(p):
        lam, vecs = np.linalg.eigh(sym(p))
        grp = np.argmin(np.abs(lam[:, None] - value_arr[None, :]), axis=1)
        return lam, vecs, grp

    def tangent_project(p, z):
        _, vecs, grp = _eig(p)
        w = vecs.T @ sym(z) @ vecs
        w[grp[:, None] == grp[None, :]] = 0.0
        return vecs @ w @ vecs.T

    def lift_point(p):
        _, vecs, _ = _eig(p)
        r = np.empty((d, d))
        r[:, order] = vecs
        if np.linalg.det(r) < 0:
            r[:, 0] = -r[:, 0]
        return r

    pairs = [(i, j) for i in range(d) for j in range(i + 1, d) if groups[i] == groups[j]]
    label = ",".join(f"{v:g}*{m}" if m > 1 else f"{v:g}" for v, m in zip(values, mults))
    return HomogeneousSpace(
        f"isospectral:{label}",
        act=lambda g, p: g @ p @ g.T,
        inf_act=lambda xi, p: xi @ p - p @ xi,
        push=lambda g, p, v: g @ v @ g.T,
        origin=np.diag(diag),
        membership=membership,
        algebra=special_orthogonal_algebra(d),
        iso_basis=_unit_basis(d, pairs),
        sample_group=lambda rng: random_special_orthogonal(d, rng),
        tangent_project=tangent_project,
        lift_point=lift_point,
        invariant_name="spectrum_drift",
    )


def _spectrum_values(space: HomogeneousSpace) -> list[float]:
    return sorted(set(np.round(np.diag(space.origin), 14).tolist()))


def grassmann_connection(space: HomogeneousSpace) -> Connection:
    """Symmetric connection of a two-eigenvalue isospectral manifold."""
    values = _spectrum_values(space)
    if len(values) != 2:
        raise ValueError(
            f"{space.name} has {len(values)} distinct eigenvalues; a closed-form "
            "connection exists only for two (Grassmann). With all multiplicities "
            "one use a Lax generator via lax_choice; otherwise no formula is available")
    gap2 = (values[1] - values[0]) ** 2

    def form(p, dp):
        space.require_point(p)
        return (dp @ p - p @ dp) / gap2

    return Connection(space, form, "grassmann")


def grassmann(n: int, k: int) -> tuple[HomogeneousSpace, Connection]:
    """Rank-``k`` orthogonal projectors in R^n (spectrum 1 x k, 0 x (n-k))."""
    if not 1 <= k < n:
        raise ValueError(f"grassmann needs 1 <= k < n, got n={n}, k={k}")
    space = isospectral([(1.0, k), (0.0, n - k)])
    space = _renamed(space, f"grassmann:{n},{k}")
    return space, grassmann_connection(space)


def _renamed(space: HomogeneousSpace, name: str) -> HomogeneousSpace:
    from dataclasses import replace
    return replace(space, name=name)


def lax_choice(xi_of_p: Callable[[np.ndarray], np.ndarray], h: float = 1.0):
    """Use a Lax generator ``xi(P)`` (skew) directly as the isotropy choice."""
    def nu(p):
        xi = np.asarray(xi_of_p(p), dtype=float)
        if np.linalg.norm(xi + xi.T) > 1e-12 * max(1.0, np.linalg.norm(xi)):
            raise ValueError("Lax generator returned a non-skew matrix")
        return h * xi
    return nu


def toda_generator(p) -> np.ndarray:
    """Toda lattice generator ``P_+ - P_-`` (strict upper minus strict lower)."""
    p = np.asarray(p, dtype=float)
    return np.triu(p, 1) - np.tril(p, -1)


# --- symmetric positive definite matrices ----------------------------------------

def _spd_membership(p) -> float:
    p = np.asarray(p, dtype=float)
    asym = float(np.linalg.norm(p - p.T))
    lam = np.linalg.eigvalsh(sym(p))[0]
    return asym + max(0.0, 1e-12 - lam)


def spd_space(d: int) -> tuple[HomogeneousSpace, Connection]:
    """SPD matrices under ``A . P = A P A^T`` with ``A`` in GL(d).

    The connection is the GL-equivariant extension of ``delta_P / 2`` at the
    identity, ``omega(P, dP) = dP P^{-1} / 2``.  It takes values in
    ``A Sym A^{-1}`` at ``P = A A^T``.  :func:`spd_sylvester_form` gives the
    symmetric-valued solution of ``P xi + xi P = dP``; that one agrees at the
    identity but is only O(d)-equivariant.
    """
    if d < 1:
        raise ValueError("d must be >= 1")

    def lift_point(p):
        lam, vecs = np.linalg.eigh(sym(p))
        return (vecs * np.sqrt(lam)) @ vecs.T

    space = HomogeneousSpace(
        f"spd:{d}",
        act=lambda a, p: a @ p @ a.T,
        inf_act=lambda xi, p: xi @ p + p @ xi.T,
        push=lambda a, p, v: a @ v @ a.T,
        origin=np.eye(d),
        membership=_spd_membership,
        algebra=general_linear_algebra(d),
        iso_basis=_unit_basis(d, [(i, j) for i in range(d) for j in range(i + 1, d)]),
        sample_group=lambda rng: random_general_linear(d, rng),
        tangent_project=lambda p, z: sym(z),
        lift_point=lift_point,
        invariant_name="min_eigenvalue",
        invariant=lambda p: float(np.linalg.eigvalsh(sym(p))[0]),
    )

    def form(p, dp):
        _check_spd_args(p, dp)
        return 0.5 * np.linalg.solve(p.T, dp.T).T

    return space, Connection(space, form, "spd")


def _check_spd_args(p, dp):
    if np.linalg.norm(dp - dp.T) > 1e-10 * max(1.0, np.linalg.norm(dp)):
        raise ValueError("tangent dP must be symmetric")
    if _spd_membership(p) > 1e-10 * max(1.0, np.linalg.norm(p)):
        raise ValueError("P is not symmetric positive definite")


def spd_sylvester_form(space: HomogeneousSpace) -> Connection:
    """Symmetric ``xi`` with ``P xi + xi P = dP``: consistent, O(d)-equivariant only."""
    def form(p, dp):
        _check_spd_args(p, dp)
        return solve_sylvester_spd(p, dp)
    return Connection(space, form, "spd-sylvester")


# --- Lie groups acting on themselves -------------------------------------------------

def _group_parts(group_tag: str):
    m = re.fullmatch(r"(so|gl)\(?(\d+)\)?", group_tag.replace(" ", "").lower())
    if not m:
        raise ValueError(f"group tag {group_tag!r} must look like 'so3', 'SO(3)' or 'gl3'")
    return m.group(1), int(m.group(2))


def _group_membership(kind: str, d: int):
    def membership(g):
        g = np.asarray(g, dtype=float)
        if g.shape != (d, d):
            return np.inf
        if kind == "so":
            return _orth_residual(g) + max(0.0, -np.linalg.det(g))
        s = np.linalg.svd(g, compute_uv=False)
        return 0.0 if s[-1] > 1e-12 * s[0] else np.inf
    return membership


def _group_tangent(kind: str):
    if kind == "so":
        return lambda g, z: g @ skew(g.T @ z)
    return lambda g, z: np.array(z, dtype=float)


def _inv(g, kind: str):
    if kind == "gl" and np.linalg.cond(g) > 1e13:
        raise ValueError("group element is singular")
    return np.linalg.inv(g)


def lie_group_space(group_tag: str, side: str = "left") -> tuple[HomogeneousSpace, Connection]:
    """A matrix group acting on itself; the connection is the Maurer-Cartan form."""
    kind, d = _group_parts(group_tag)
    algebra = _linear_algebra(kind, d)
    sample = _linear_group_sampler(kind, d)
    common = dict(origin=np.eye(d), membership=_group_membership(kind, d), algebra=algebra,
                  iso_basis=(), sample_group=sample, tangent_project=_group_tangent(kind),
                  invariant_name="orthogonality_residual" if kind == "so" else "distance")
    if side == "left":
        space = HomogeneousSpace(
            f"{kind}:{d}", act=lambda g, x: g @ x, inf_act=lambda xi, x: xi @ x,
            push=lambda g, x, v: g @ v, lift_point=lambda x: np.array(x, dtype=float),
            **common)
        return space, Connection(space, lambda g, dg: dg @ _inv(g, kind), "maurer-cartan+")
    if side == "right":
        space = HomogeneousSpace(
            f"{kind}:{d}:right", act=lambda g, x: x @ np.linalg.inv(g),
            inf_act=lambda xi, x: -x @ xi, push=lambda g, x, v: v @ np.linalg.inv(g),
            lift_point=lambda x: np.linalg.inv(x), **common)
        return space, Connection(space, lambda g, dg: -_inv(g, kind) @ dg, "maurer-cartan-")
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def _pair_sample(sample, rng):
    rng = np.random.default_rng(rng)
    return block_diag(sample(rng), sample(rng))


def cartan_schouten(group_tag: str, variant: str = "mean") -> tuple[HomogeneousSpace, Connection]:
    """G under ``(g1, g2) . g = g1 g g2^{-1}``; pairs are block-diagonal matrices."""
    kind, d = _group_parts(group_tag)
    factor = _linear_algebra(kind, d)
    sample = _linear_group_sampler(kind, d)
    if variant not in ("plus", "minus", "mean"):
        raise ValueError(f"variant must be plus, minus or mean, got {variant!r}")

    def act(g, x):
        return g[:d, :d] @ x @ np.linalg.inv(g[d:, d:])

    def inf_act(xi, x):
        return xi[:d, :d] @ x - x @ xi[d:, d:]

    def push(g, x, v):
        return g[:d, :d] @ v @ np.linalg.inv(g[d:, d:])

    space = HomogeneousSpace(
        f"cartan_schouten:{kind}{d}:{variant}", act, inf_act, push, np.eye(d),
        _group_membership(kind, d), pair_algebra(factor),
        tuple(block_diag(b, b) for b in factor.basis()),
        lambda rng: _pair_sample(sample, rng),
        _group_tangent(kind), lambda x: block_diag(x, np.eye(d)),
        "orthogonality_residual" if kind == "so" else "distance")

    weight = {"plus": (1.0, 0.0), "minus": (0.0, 1.0), "mean": (0.5, 0.5)}[variant]

    def form(g, dg):
        ginv = _inv(g, kind)
        return block_diag(weight[0] * (dg @ ginv), -weight[1] * (ginv @ dg))

    return space, Connection(space, form, f"cartan-schouten-{variant}")


# --- registry ----------------------------------------------------------------

def _parse_ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def _parse_eigs(text: str):
    out = []
    for tok in text.split(","):
        if "*" in tok:
            v, m = tok.split("*")
            out.append((float(v), int(m)))
        else:
            out.append((float(tok), 1))
    return out


REGISTRY_HELP = {
    "sphere:N": "unit sphere in R^N (Stiefel with k=1)",
    "stiefel:N,K": "orthonormal N x K frames, K < N",
    "grassmann:N,K": "rank-K projectors in R^N",
    "isospectral:V1*M1,V2*M2,...": "symmetric matrices with this spectrum (no connection "
                                   "unless exactly two eigenvalues)",
    "spd:D": "symmetric positive definite D x D matrices under GL(D)",
    "so:D / gl:D [:right]": "matrix group acting on itself (Maurer-Cartan form)",
    "cartan_schouten:so3:mean|plus|minus": "G x G acting on G by g1 g g2^-1",
    "affine:D[:so|gl]": "R^D under the affine group with the given linear part",
}


def get_space(name: str) -> tuple[HomogeneousSpace, Optional[Connection]]:
    """Resolve a registry name such as ``"stiefel:5,2"``.

    Returns the space and its catalog connection (``None`` for isospectral
    spaces without a closed-form connection).
    """
    kind, _, rest = name.strip().partition(":")
    parts = rest.split(":") if rest else []
    try:
        if kind == "sphere":
            return sphere(int(parts[0]))
        if kind == "stiefel":
            n, k = _parse_ints(parts[0])
            return stiefel(n, k)
        if kind == "grassmann":
            n, k = _parse_ints(parts[0])
            return grassmann(n, k)
        if kind == "isospectral":
            space = isospectral(_parse_eigs(parts[0]))
            conn = grassmann_connection(space) if len(_spectrum_values(space)) == 2 else None
            return space, conn
        if kind == "spd":
            return spd_space(int(parts[0]))
        if kind in ("so", "gl"):
            side = parts[1] if len(parts) > 1 else "left"
            return lie_group_space(f"{kind}{int(parts[0])}", side)
        if kind == "cartan_schouten":
            variant = parts[1] if len(parts) > 1 else "mean"
            return cartan_schouten(parts[0], variant)
        if kind == "affine":
            tag = parts[1] if len(parts) > 1 else "gl"
            return affine_space(tag, int(parts[0]))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"cannot build space {name!r}: {exc}") from exc
    raise ValueError(f"unknown space {name!r}; known forms: {', '.join(REGISTRY_HELP)}")
