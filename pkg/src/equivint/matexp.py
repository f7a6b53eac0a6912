"""Dense small-matrix kernels.

Everything here works on plain ``numpy`` float64 arrays.  Group elements,
Lie algebra elements and manifold points are all carried as 2-d arrays.

The hat map follows the cross-product convention ``hat(v) @ w == cross(v, w)``.
Some texts use the opposite sign; this package does not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

ALGEBRA_TOL = 1e-12

# Higham (2005) backward-error bounds for the diagonal Pade approximants.
_PADE_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
               7: 9.504178996162932e-1, 9: 2.097847961257068e0,
               13: 5.371920351148152e0}

_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0,
        1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}

_MAX_SQUARINGS = 1000


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-d float64 array (copying only if needed)."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _square(a, name: str) -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def commutator(a, b) -> np.ndarray:
    """Matrix commutator ``a @ b - b @ a``."""
    a = _square(a, "a")
    b = _square(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def _pade(a: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    c = _PADE_COEFFS[m]
    n = a.shape[0]
    ident = np.eye(n)
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (a6 @ (c[13] * a6 + c[11] * a4 + c[9] * a2)
                 + c[7] * a6 + c[5] * a4 + c[3] * a2 + c[1] * ident)
        v = (a6 @ (c[12] * a6 + c[10] * a4 + c[8] * a2)
             + c[6] * a6 + c[4] * a4 + c[2] * a2 + c[0] * ident)
        return u, v
    powers = [ident, a2]
    for _ in range(2, (m + 1) // 2):
        powers.append(powers[-1] @ a2)
    u = a @ sum(c[2 * k + 1] * powers[k] for k in range(len(powers)))
    v = sum(c[2 * k] * powers[k] for k in range(len(powers)))
    return u, v


def expm(xi) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal Pade kernel.

    The Pade degree and the number of squarings are picked from the 1-norm
    following Higham's 2005 bounds, which keeps the backward error at unit
    roundoff level.

    Raises:
        OverflowError: if the norm is so large that the result cannot be
            represented.
    """
    a = _square(xi, "xi")
    norm = np.linalg.norm(a, 1)
    if norm == 0.0:
        return np.eye(a.shape[0])
    for m in (3, 5, 7, 9):
        if norm <= _PADE_THETA[m]:
            u, v = _pade(a, m)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(np.ceil(np.log2(norm / _PADE_THETA[13]))))
    if s > _MAX_SQUARINGS:
        raise OverflowError(f"matrix norm {norm:.3g} too large for expm")
    u, v = _pade(a / 2.0**s, 13)
    r = np.linalg.solve(v - u, v + u)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            r = r @ r
    if not np.all(np.isfinite(r)):
        raise OverflowError(f"expm overflowed (norm {norm:.3g})")
    return r


def cayley(xi) -> np.ndarray:
    """Cayley map ``(I - xi/2)^{-1} (I + xi/2)``.

    Raises:
        np.linalg.LinAlgError: if ``I - xi/2`` is singular.
    """
    a = _square(xi, "xi")
    ident = np.eye(a.shape[0])
    lhs = ident - 0.5 * a
    if np.linalg.cond(lhs) > 1e14:
        raise np.linalg.LinAlgError("I - xi/2 is singular; Cayley map undefined")
    return np.linalg.solve(lhs, ident + 0.5 * a)


MOTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exponential": expm,
    "cayley": cayley,
}


def hat(v) -> np.ndarray:
    """so(3) matrix of the cross product with ``v``."""
    x, y, z = np.asarray(v, dtype=float).reshape(3)
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def vee(m) -> np.ndarray:
    """Inverse of :func:`hat`; rejects matrices that are not skew."""
    m = _square(m, "m")
    if m.shape != (3, 3):
        raise ValueError(f"vee expects a 3x3 matrix, got {m.shape}")
    if np.linalg.norm(m + m.T) > ALGEBRA_TOL:
        raise ValueError("vee expects a skew-symmetric matrix")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def solve_sylvester_spd(p, rhs) -> np.ndarray:
    """Symmetric solution ``xi`` of ``p @ xi + xi @ p == rhs`` for SPD ``p``.

    Solved in the eigenbasis of ``p``, where the equation decouples into an
    entrywise division by ``lambda_i + lambda_j``.
    """
    p = _square(p, "p")
    rhs = _square(rhs, "rhs")
    if p.shape != rhs.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {rhs.shape}")
    if np.linalg.norm(p - p.T) > 1e-10 * max(1.0, np.linalg.norm(p)):
        raise ValueError("p is not symmetric")
    if np.linalg.norm(rhs - rhs.T) > 1e-10 * max(1.0, np.linalg.norm(rhs)):
        raise ValueError("rhs is not symmetric")
    lam, vecs = np.linalg.eigh(0.5 * (p + p.T))
    if lam[0] <= 1e-12:
        raise ValueError(f"p is not positive definite (min eigenvalue {lam[0]:.3g})")
    r = vecs.T @ rhs @ vecs
    x = r / (lam[:, None] + lam[None, :])
    xi = vecs @ x @ vecs.T
    return 0.5 * (xi + xi.T)


def random_special_orthogonal(d: int, seed=None) -> np.ndarray:
    """Deterministic draw from SO(d): QR of a seeded Gaussian, signs fixed.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_general_linear(d: int, seed=None, spread: float = 0.5) -> np.ndarray:
    """Well-conditioned element of GL(d) with positive determinant.

    Built as ``R1 diag(exp(s)) R2`` with ``s`` uniform in ``[-spread, spread]``.
    """
    rng = np.random.default_rng(seed)
    r1 = random_special_orthogonal(d, rng)
    r2 = random_special_orthogonal(d, rng)
    s = rng.uniform(-spread, spread, size=d)
    return (r1 * np.exp(s)) @ r2


def skew(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a - a.T)


def sym(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class Algebra:
    """A matrix Lie algebra given as a linear subspace of square matrices.

    ``project`` is the orthogonal projection onto the subspace (Frobenius
    inner product), ``basis`` an orthonormal basis of it.
    """

    name: str
    size: int
    project: Callable[[np.ndarray], np.ndarray]
    dim: int

    def residual(self, xi) -> float:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.size, self.size):
            return np.inf
        return float(np.linalg.norm(xi - self.project(xi)))

    def contains(self, xi, tol: float = ALGEBRA_TOL) -> bool:
        return self.residual(xi) <= tol

    def check(self, xi, what: str = "value") -> np.ndarray:
        xi = as_matrix(xi, what)
        res = self.residual(xi)
        if res > ALGEBRA_TOL * max(1.0, float(np.linalg.norm(xi))):
            raise ValueError(f"{what} is not in {self.name} (residual {res:.3g})")
        return xi

    def sample(self, rng, scale: float = 1.0) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return scale * self.project(rng.standard_normal((self.size, self.size)))

    def basis(self) -> list[np.ndarray]:
        n = self.size
        images = np.array([self.project(e.reshape(n, n)).ravel()
                           for e in np.eye(n * n)])
        u, s, _ = np.linalg.svd(images.T)
        rank = int(np.sum(s > 1e-10))
        return [u[:, k].reshape(n, n) for k in range(rank)]


def special_orthogonal_algebra(n: int) -> Algebra:
    return Algebra(f"so({n})", n, skew, n * (n - 1) // 2)


def general_linear_algebra(n: int) -> Algebra:
    return Algebra(f"gl({n})", n, lambda a: np.array(a, dtype=float), n * n)


def special_linear_algebra(n: int) -> Algebra:
    def project(a):
        a = np.array(a, dtype=float)
        return a - np.trace(a) / n * np.eye(n)
    return Algebra(f"sl({n})", n, project, n * n - 1)


def affine_algebra(linear: Algebra) -> Algebra:
    """``linear`` semidirect R^d, as (d+1)x(d+1) matrices [[A, a], [0, 0]]."""
    d = linear.size

    def project(m):
        m = np.asarray(m, dtype=float)
        out = np.zeros((d + 1, d + 1))
        out[:d, :d] = linear.project(m[:d, :d])
        out[:d, d] = m[:d, d]
        return out
    return Algebra(f"aff({linear.name})", d + 1, project, linear.dim + d)


def pair_algebra(factor: Algebra) -> Algebra:
    """Product algebra embedded block-diagonally in 2d x 2d matrices."""
    d = factor.size

    def project(m):
        m = np.asarray(m, dtype=float)
        out = np.zeros((2 * d, 2 * d))
        out[:d, :d] = factor.project(m[:d, :d])
        out[d:, d:] = factor.project(m[d:, d:])
        return out
    return Algebra(f"{factor.name}x{factor.name}", 2 * d, project, 2 * factor.dim)


def block_diag(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]))
    out[:a.shape[0], :a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out
