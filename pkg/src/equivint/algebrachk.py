"""Numerical classification of splittings g = h + m.

``classify`` decides whether a candidate complement ``m`` is reductive
(``[h, m]`` in ``m``), symmetric (``[m, m]`` in ``h``) and flat
(``[m, m]`` in ``m``).  ``find_reductive_complements`` solves the linear
problem for all reductive complements of ``h`` in ``g`` and reports an
empty set when there is none.

All inclusion tests are infinitesimal.  For a disconnected isotropy group,
pass representatives of its components to additionally check ``Ad``
invariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .matexp import commutator

RANK_TOL = 1e-10
INCLUSION_TOL = 1e-9
EMPTY_TOL = 1e-7


def _flat(mats: Sequence[np.ndarray]) -> np.ndarray:
    if not mats:
        return np.zeros((0, 0))
    return np.array([np.asarray(m, dtype=float).ravel() for m in mats]).T


def _rank(mats: Sequence[np.ndarray]) -> int:
    if not mats:
        return 0
    s = np.linalg.svd(_flat(mats), compute_uv=False)
    return int(np.sum(s > RANK_TOL * max(1.0, s[0])))


def _split_coords(b: np.ndarray, h: Sequence[np.ndarray], m: Sequence[np.ndarray]):
    """Least-squares coordinates of ``b`` in the joint basis ``h + m``.

    Returns ``(h_part, m_part, outside)`` as matrices.
    """
    basis = list(h) + list(m)
    a = _flat(basis)
    coef, *_ = np.linalg.lstsq(a, b.ravel(), rcond=None)
    h_part = (a[:, :len(h)] @ coef[:len(h)]).reshape(b.shape) if h else np.zeros_like(b)
    m_part = (a[:, len(h):] @ coef[len(h):]).reshape(b.shape) if m else np.zeros_like(b)
    return h_part, m_part, b - h_part - m_part


@dataclass
class SubalgebraSplit:
    """Bases of ``g``, of the subalgebra ``h`` and optionally of a complement ``m``."""

    g_basis: list
    h_basis: list
    m_basis: Optional[list] = None
    components: list = field(default_factory=list)

    def __post_init__(self):
        self.g_basis = [np.asarray(b, dtype=float) for b in self.g_basis]
        self.h_basis = [np.asarray(b, dtype=float) for b in self.h_basis]
        if self.m_basis is not None:
            self.m_basis = [np.asarray(b, dtype=float) for b in self.m_basis]
        self.components = [np.asarray(c, dtype=float) for c in self.components]
        self.validate()

    def validate(self):
        g = self.g_basis
        if not g:
            raise ValueError("g_basis is empty")
        shape = g[0].shape
        if any(b.shape != shape for b in g + self.h_basis + (self.m_basis or [])):
            raise ValueError("all basis matrices must have the same shape")
        if _rank(g) != len(g):
            raise ValueError("g_basis is not linearly independent")
        if _rank(self.h_basis) != len(self.h_basis):
            raise ValueError("h_basis is not linearly independent")
        if _rank(g + self.h_basis) != len(g):
            raise ValueError("h is not contained in g")
        for a in self.h_basis:
            for b in self.h_basis:
                c = commutator(a, b)
                if _residual_outside(c, self.h_basis) > RANK_TOL * max(1.0, np.linalg.norm(c)):
                    raise ValueError("h is not closed under the bracket")
        if self.m_basis is not None:
            m = self.m_basis
            if len(self.h_basis) + len(m) != len(g):
                raise ValueError("dim h + dim m != dim g")
            if _rank(self.h_basis + m) != len(g) or _rank(g + m) != len(g):
                raise ValueError("h + m does not span g")


def _residual_outside(b, basis) -> float:
    if not basis:
        return float(np.linalg.norm(b))
    a = _flat(basis)
    coef, *_ = np.linalg.lstsq(a, b.ravel(), rcond=None)
    return float(np.linalg.norm(b.ravel() - a @ coef))


def _unit(b: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(b)
    return b / n if n > 1e-14 else b


@dataclass(frozen=True)
class Classification:
    reductive: bool
    symmetric: bool
    flat: bool
    residuals: tuple[float, float, float]
    criterion: str = "infinitesimal"

    def row(self) -> str:
        mark = {True: "✓", False: "✗"}
        return (f"reductive {mark[self.reductive]} symmetric {mark[self.symmetric]} "
                f"flat {mark[self.flat]}")


def classify(split: SubalgebraSplit, tol: float = INCLUSION_TOL) -> Classification:
    """Reductive / symmetric / flat verdicts for ``split`` (``m_basis`` required)."""
    if split.m_basis is None:
        raise ValueError("classify needs a candidate complement m_basis")
    h, m = split.h_basis, split.m_basis
    red = 0.0
    for a in h:
        for b in m:
            hp, _, out = _split_coords(_unit(commutator(a, b)), h, m)
            red = max(red, float(np.linalg.norm(hp) + np.linalg.norm(out)))
    criterion = "infinitesimal"
    for k in split.components:
        kinv = np.linalg.inv(k)
        for b in m:
            hp, _, out = _split_coords(_unit(k @ b @ kinv), h, m)
            red = max(red, float(np.linalg.norm(hp) + np.linalg.norm(out)))
        criterion = "infinitesimal+components"
    symm = flat = 0.0
    for i, a in enumerate(m):
        for b in m[i + 1:]:
            hp, mp, out = _split_coords(_unit(commutator(a, b)), h, m)
            o = float(np.linalg.norm(out))
            symm = max(symm, float(np.linalg.norm(mp)) + o)
            flat = max(flat, float(np.linalg.norm(hp)) + o)
    return Classification(red <= tol, symm <= tol, flat <= tol, (red, symm, flat), criterion)


@dataclass(frozen=True)
class ComplementSet:
    """Affine family of reductive complements, or ``empty``.

    The complement for parameters ``t`` is spanned by
    ``c_a + sum_e A(t)[a, e] h_e`` where ``A(t) = particular + sum t_k directions[k]``.
    The particular solution depends on the seed section.
    """

    empty: bool
    seed_basis: tuple
    h_basis: tuple
    particular: Optional[np.ndarray]
    directions: tuple
    residual: float

    @property
    def dimension(self) -> int:
        return -1 if self.empty else len(self.directions)

    def complement(self, t: Sequence[float] = ()) -> list[np.ndarray]:
        if self.empty:
            raise ValueError("no reductive complement exists")
        coeff = self.particular.copy()
        for tk, d in zip(t, self.directions):
            coeff = coeff + tk * d
        return [c + sum(coeff[a, e] * self.h_basis[e] for e in range(len(self.h_basis)))
                for a, c in enumerate(self.seed_basis)]

    def describe(self) -> str:
        if self.empty:
            return "no reductive complement exists"
        if not self.directions:
            return "unique complement"
        return f"affine family of complements (dimension {len(self.directions)})"


def seed_complement(g_basis, h_basis) -> list[np.ndarray]:
    """A complement of ``h`` in ``g``: the part of ``g`` orthogonal to ``h``."""
    g = _flat(g_basis)
    if h_basis:
        q, _ = np.linalg.qr(_flat(h_basis))
        g = g - q @ (q.T @ g)
    u, s, _ = np.linalg.svd(g, full_matrices=False)
    k = len(g_basis) - len(h_basis)
    shape = np.asarray(g_basis[0]).shape
    return [u[:, i].reshape(shape) for i in range(k)]


def find_reductive_complements(g_basis, h_basis, seed_section=None,
                               components: Sequence = ()) -> ComplementSet:
    """All reductive complements of ``h`` in ``g``.

    A complement is a section ``c_a -> c_a + alpha(c_a)`` of ``g -> g/h`` with
    ``alpha`` valued in ``h``.  Requiring ``[xi, sigma(x)] = sigma([xi, x] mod h)``
    for every ``xi`` in ``h`` is linear in the coefficients of ``alpha``;
    the set is empty when that system has no solution.
    """
    split = SubalgebraSplit(g_basis, h_basis)
    h = split.h_basis
    c = ([np.asarray(b, dtype=float) for b in seed_section] if seed_section is not None
         else seed_complement(split.g_basis, h))
    p, q = len(h), len(c)
    if _rank(h + c) != len(split.g_basis):
        raise ValueError("seed section does not complete h to a basis of g")
    if p == 0:
        return ComplementSet(False, tuple(c), (), np.zeros((q, 0)), (), 0.0)
    joint = _flat(h + c)

    def coords(b):
        coef, *_ = np.linalg.lstsq(joint, b.ravel(), rcond=None)
        return coef[:p], coef[p:]

    rows, rhs = [], []
    # unknown A[a, e] flattened as a * p + e
    reps = [("lie", xi) for xi in h] + [("group", k) for k in components]
    for kind, xi in reps:
        if kind == "lie":
            act = lambda b, xi=xi: commutator(xi, b)
        else:
            kinv = np.linalg.inv(xi)
            act = lambda b, k=xi, kinv=kinv: k @ b @ kinv
        S = np.array([coords(act(he))[0] for he in h]).T   # S[f, e]: h-coords of act(h_e)
        K = np.empty((q, q))
        L = np.empty((p, q))
        for a in range(q):
            hc, cc = coords(act(c[a]))
            L[:, a], K[:, a] = hc, cc
        for a in range(q):
            for f in range(p):
                # act(c_a + A_a.h) = sum_b K_ba (c_b + A_b.h), h-component f
                row = np.zeros(q * p)
                row[a * p:(a + 1) * p] += S[f, :]
                for b in range(q):
                    row[b * p + f] -= K[b, a]
                rows.append(row)
                rhs.append(-L[f, a])
    M = np.array(rows)
    r = np.array(rhs)
    sol, *_ = np.linalg.lstsq(M, r, rcond=None)
    residual = float(np.linalg.norm(M @ sol - r))
    if residual > EMPTY_TOL:
        return ComplementSet(True, tuple(c), tuple(h), None, (), residual)
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > RANK_TOL * max(1.0, s[0] if s.size else 1.0)))
    directions = tuple(v.reshape(q, p) for v in vt[rank:])
    return ComplementSet(False, tuple(c), tuple(h), sol.reshape(q, p), directions, residual)


# --- reference splits ----------------------------------------------------------

def _e(n, i, j):
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


def _skew_e(n, i, j):
    return _e(n, i, j) - _e(n, j, i)


def so_basis(n: int) -> list[np.ndarray]:
    return [_skew_e(n, i, j) for i in range(n) for j in range(i + 1, n)]


def gl_basis(n: int) -> list[np.ndarray]:
    return [_e(n, i, j) for i in range(n) for j in range(n)]


def sl2_basis() -> list[np.ndarray]:
    return [np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]]),
            np.array([[1.0, 0.0], [0.0, -1.0]])]


def block_split(sizes: Sequence[int]) -> SubalgebraSplit:
    """so(d) with h = block-diagonal skew blocks and m = off-block-diagonal part."""
    d = sum(sizes)
    grp = np.repeat(np.arange(len(sizes)), sizes)
    h, m = [], []
    for i in range(d):
        for j in range(i + 1, d):
            (h if grp[i] == grp[j] else m).append(_skew_e(d, i, j))
    return SubalgebraSplit(h + m, h, m)


def stiefel_split(n: int, k: int) -> SubalgebraSplit:
    """so(n), h = so(n-k) top-left, m = [[0, W], [-W^T, Omega]]."""
    r = n - k
    h, m = [], []
    for i in range(n):
        for j in range(i + 1, n):
            (h if j < r else m).append(_skew_e(n, i, j))
    return SubalgebraSplit(h + m, h, m)


def affine_split(d: int, linear: str = "gl") -> SubalgebraSplit:
    base = gl_basis(d) if linear == "gl" else so_basis(d)
    h = []
    for b in base:
        e = np.zeros((d + 1, d + 1))
        e[:d, :d] = b
        h.append(e)
    m = [_e(d + 1, i, d) for i in range(d)]
    return SubalgebraSplit(h + m, h, m)


def spd_split(d: int) -> SubalgebraSplit:
    h = so_basis(d)
    m = [_e(d, i, i) for i in range(d)] + [_e(d, i, j) + _e(d, j, i)
                                            for i in range(d) for j in range(i + 1, d)]
    return SubalgebraSplit(h + m, h, m)


def group_split(n: int) -> SubalgebraSplit:
    """so(n) acting on itself: trivial isotropy, m = g."""
    g = so_basis(n)
    return SubalgebraSplit(g, [], g)


def _pair(a, b):
    n = a.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n], out[n:, n:] = a, b
    return out


def cartan_schouten_split(n: int, variant: str = "mean") -> SubalgebraSplit:
    base = so_basis(n)
    z = np.zeros((n, n))
    h = [_pair(b, b) for b in base]
    m = {"mean": [_pair(b, -b) for b in base], "plus": [_pair(b, z) for b in base],
         "minus": [_pair(z, b) for b in base]}[variant]
    return SubalgebraSplit(h + m, h, m)
