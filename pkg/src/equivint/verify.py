"""Executable checks for connections, skeletons and integrators.

Every check is deterministic given ``(seed, samples)`` and returns a
residual (or an :class:`OrderReport`).  ``CheckResult`` wraps a residual
with its threshold for machine-readable reports.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .matexp import expm
from .skeleton import Skeleton, integrate, step
from .spaces import Connection, HomogeneousSpace, lift

EPS = np.finfo(float).eps


@dataclass
class CheckResult:
    name: str
    params: dict
    value: float
    threshold: float
    passed: bool
    kind: str = "residual"

    def to_dict(self) -> dict:
        return asdict(self)


def residual_check(name: str, value: float, threshold: float, **params) -> CheckResult:
    """Pass when ``value <= threshold``."""
    return CheckResult(name, params, float(value), threshold, bool(value <= threshold))


def report_json(results: Sequence[CheckResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2)


def _rng(seed):
    return np.random.default_rng(seed)


def _inverse_act(space: HomogeneousSpace, g, y):
    return space.act(np.linalg.inv(g), y)


# --- connection checks ----------------------------------------------------------

def check_consistency(conn: Connection, samples: int = 100, seed=0) -> float:
    """Max of ``|omega(x, v) . x - v|`` over random points and tangents."""
    space, rng = conn.space, _rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = space.sample_point(rng)
        v = space.sample_tangent(x, rng)
        worst = max(worst, float(np.linalg.norm(space.inf_act(conn.eval(x, v), x) - v)))
    return worst


def check_equivariance(conn: Connection, samples: int = 100, seed=0) -> float:
    """Max of ``|omega(g.x, g.v) - g omega(x, v) g^-1|``."""
    space, rng = conn.space, _rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = space.sample_point(rng)
        v = space.sample_tangent(x, rng)
        g = space.sample_group(rng)
        lhs = conn.eval(space.act(g, x), space.push(g, x, v))
        rhs = space.adjoint(g, conn.eval(x, v))
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def transformed_field(space: HomogeneousSpace, g, f):
    """Push-forward ``(g_* f)(y) = g . f(g^-1 . y)``."""
    def fg(y):
        x = _inverse_act(space, g, y)
        return space.push(g, x, f(x))
    return fg


def check_method_equivariance(skel: Skeleton, conn: Connection, field_of_rng,
                              samples: int = 100, seed=0, h: float = 0.1) -> float:
    """Max of ``|M_{g_* f}(g . x) - g . M_f(x)|`` for one step of size ``h``.

    ``field_of_rng(rng)`` draws the vector field for each sample.
    """
    space, rng = conn.space, _rng(seed)
    worst = 0.0
    for _ in range(samples):
        f = field_of_rng(rng)
        x = space.sample_point(rng)
        g = space.sample_group(rng)
        a = step(skel, space, conn.choice(transformed_field(space, g, f), h), space.act(g, x))
        b = space.act(g, step(skel, space, conn.choice(f, h), x))
        worst = max(worst, float(np.linalg.norm(a - b)))
    return worst


def order_zero_exactness(skel: Skeleton, space: HomogeneousSpace, samples: int = 20,
                         seed=0, scale: float = 1.0) -> float:
    """Max of ``|step(nu = xi) - exp(xi) . x0|`` over constant choices ``xi``.

    ``scale`` sets the Frobenius norm of the sampled ``xi``.
    """
    rng = _rng(seed)
    worst = 0.0
    for _ in range(samples):
        xi = space.algebra.sample(rng)
        n = np.linalg.norm(xi)
        xi = xi * (scale / n) if n > 0 else xi
        x0 = space.sample_point(rng)
        got = step(skel, space, lambda x, xi=xi: xi, x0)
        worst = max(worst, float(np.linalg.norm(got - space.act(expm(xi), x0))))
    return worst


# --- principal form ---------------------------------------------------------------

def _iso_distance(space: HomogeneousSpace, theta) -> float:
    if not space.iso_basis:
        return float(np.linalg.norm(theta))
    a = np.array([b.ravel() for b in space.iso_basis]).T
    coef, *_ = np.linalg.lstsq(a, theta.ravel(), rcond=None)
    return float(np.linalg.norm(theta.ravel() - a @ coef))


def principal_form(conn: Connection):
    """``theta(g, X) = g^-1 X - g^-1 omega([X]) g`` for ``X`` tangent at ``g``."""
    space = conn.space

    def theta(g, big_x):
        ginv = np.linalg.inv(g)
        x = space.act(g, space.origin)
        v = space.inf_act(big_x @ ginv, x)
        return ginv @ big_x - ginv @ conn.eval(x, v) @ g
    return theta


def _iso_sample(space, rng):
    if not space.iso_basis:
        return np.zeros((space.algebra.size,) * 2)
    c = rng.standard_normal(len(space.iso_basis))
    return sum(ci * b for ci, b in zip(c, space.iso_basis))


def check_principal_form(conn: Connection, samples: int = 50, seed=0) -> dict:
    """Residuals of the principal form: values in the isotropy algebra,
    reproduction of vertical vectors, isotropy equivariance and left invariance.
    """
    space = conn.space
    if space.lift_point is None:
        raise ValueError(f"{space.name} cannot lift points to group elements")
    theta, rng = principal_form(conn), _rng(seed)
    out = dict(isotropy_valued=0.0, reproducing=0.0, isotropy_equivariance=0.0,
               left_invariance=0.0)
    for _ in range(samples):
        g = space.sample_group(rng)
        big_x = g @ space.algebra.sample(rng)
        t = theta(g, big_x)
        out["isotropy_valued"] = max(out["isotropy_valued"], _iso_distance(space, t))
        eta = _iso_sample(space, rng)
        out["reproducing"] = max(out["reproducing"],
                                 float(np.linalg.norm(theta(g, g @ eta) - eta)))
        hh = expm(_iso_sample(space, rng))
        lhs = theta(g @ hh, big_x @ hh)
        rhs = np.linalg.inv(hh) @ t @ hh
        out["isotropy_equivariance"] = max(out["isotropy_equivariance"],
                                           float(np.linalg.norm(lhs - rhs)))
        k = space.sample_group(rng)
        out["left_invariance"] = max(out["left_invariance"],
                                     float(np.linalg.norm(theta(k @ g, k @ big_x) - t)))
    return out


def check_horizontal_lift(conn: Connection, f, samples: int = 20, seed=0) -> float:
    """Max of ``|theta(lift(f)(g))|``: lifted fields are horizontal."""
    space, rng = conn.space, _rng(seed)
    theta, lifted = principal_form(conn), lift(conn, f)
    worst = 0.0
    for _ in range(samples):
        g = space.sample_group(rng)
        worst = max(worst, float(np.linalg.norm(theta(g, lifted(g)))))
    return worst


# --- descent -----------------------------------------------------------------------

def group_space(space: HomogeneousSpace) -> HomogeneousSpace:
    """The symmetry group of ``space`` acting on itself by left multiplication."""
    n = space.algebra.size

    def membership(g):
        g = np.asarray(g, dtype=float)
        return 0.0 if g.shape == (n, n) and np.all(np.isfinite(g)) else np.inf

    return HomogeneousSpace(
        f"group({space.name})", act=lambda g, x: g @ x, inf_act=lambda xi, x: xi @ x,
        push=lambda g, x, v: g @ v, origin=np.eye(n), membership=membership,
        algebra=space.algebra, iso_basis=(), sample_group=space.sample_group,
        tangent_project=lambda g, z: np.array(z, dtype=float), lift_point=lambda g: g)


def check_descent(skel: Skeleton, space: HomogeneousSpace, conn: Connection, f, x0,
                  h: float) -> float:
    """Distance between projecting a group step of the lifted field and a direct step."""
    if space.lift_point is None:
        raise ValueError(f"{space.name} cannot lift points to group elements")
    x0 = space.require_point(x0, "x0")
    g0 = space.lift_point(x0)
    if np.linalg.norm(space.act(g0, space.origin) - x0) > 1e-10:
        raise ValueError(f"lift of x0 does not project back onto x0 on {space.name}")
    grp = group_space(space)
    lifted = lift(conn, f)

    def nu_group(g):
        return h * (lifted(g) @ np.linalg.inv(g))

    g1 = step(skel, grp, nu_group, g0)
    x1 = step(skel, space, conn.choice(f, h), x0)
    return float(np.linalg.norm(space.act(g1, space.origin) - x1))


# --- finite differences --------------------------------------------------------------

def check_inf_act(space: HomogeneousSpace, seed=0, ts: Sequence[float] = (1e-4, 1e-5)
                  ) -> tuple[list[float], float]:
    """Errors ``|(exp(t xi) . x - x)/t - xi . x|`` at each ``t`` and their ratio."""
    rng = _rng(seed)
    xi = space.algebra.sample(rng)
    x = space.sample_point(rng)
    ref = space.inf_act(xi, x)
    errs = [float(np.linalg.norm((space.act(expm(t * xi), x) - x) / t - ref)) for t in ts]
    return errs, errs[0] / errs[1] if errs[1] > 0 else np.inf


# --- convergence order -----------------------------------------------------------------

class ExactToPrecisionError(ValueError):
    """The method is exact on this problem, so no order can be measured."""


@dataclass
class OrderReport:
    step_sizes: list
    errors: list
    observed_order: float
    local_slopes: list = field(default_factory=list)

    def rows(self):
        slopes = [np.nan] + list(self.local_slopes)
        return list(zip(self.step_sizes, self.errors, slopes))


def fit_order(h_list, errors) -> float:
    return float(np.polyfit(np.log(h_list), np.log(errors), 1)[0])


def observed_order(skel: Skeleton, space: HomogeneousSpace,
                   nu_of_h: Callable[[float], Callable], x0, h_list: Sequence[float],
                   reference, final_time: float) -> OrderReport:
    """Errors at ``final_time`` for each step size and the least-squares slope.

    ``reference`` is the exact end point.  Each ``h`` must divide
    ``final_time`` to within 1e-9.
    """
    h_list = [float(h) for h in h_list]
    if len(h_list) < 4:
        raise ValueError("need at least four step sizes")
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("step sizes must be strictly decreasing")
    reference = np.asarray(reference, dtype=float)
    errors = []
    for h in h_list:
        n = int(round(final_time / h))
        if n < 1 or abs(n * h - final_time) > 1e-9:
            raise ValueError(f"step size {h} does not divide final time {final_time}")
        x = integrate(skel, space, nu_of_h(h), x0, n)[-1]
        errors.append(float(np.linalg.norm(x - reference)))
    if errors[0] <= 100 * EPS * max(1.0, float(np.linalg.norm(reference))):
        raise ExactToPrecisionError(
            f"{skel.name} is exact to precision on this problem (error {errors[0]:.3g})")
    if min(errors) <= 0.0:
        raise ExactToPrecisionError(f"{skel.name} hit zero error at some step size")
    local = [float(np.log(e0 / e1) / np.log(h0 / h1))
             for h0, h1, e0, e1 in zip(h_list, h_list[1:], errors, errors[1:])]
    return OrderReport(h_list, errors, fit_order(h_list, errors), local)


def reference_solution(f, x0, final_time: float, time_dependent: bool = False):
    """End point of ``x' = f(x)`` from an adaptive high-order integrator in the ambient space.

    With ``time_dependent`` the field is called as ``f(t, x)``.
    """
    x0 = np.asarray(x0, dtype=float)
    shape = x0.shape

    def rhs(t, y):
        x = y.reshape(shape)
        return np.asarray(f(t, x) if time_dependent else f(x), dtype=float).ravel()

    sol = solve_ivp(rhs, (0.0, final_time), x0.ravel(), method="DOP853",
                    rtol=1e-13, atol=1e-15)
    if not sol.success:
        raise RuntimeError(f"reference integration failed: {sol.message}")
    return sol.y[:, -1].reshape(shape)


# --- negative controls -------------------------------------------------------------------

def stiefel_without_third_term(conn: Connection) -> Connection:
    """Stiefel form with the ``Q dQ^T Q Q^T`` term dropped: inconsistent for k >= 2."""
    def form(q, dq):
        return dq @ q.T - q @ dq.T
    return Connection(conn.space, form, "corrupt-dropped-term")


def shifted_connection(conn: Connection, eta=None) -> Connection:
    """Connection plus a fixed nonzero isotropy element at every point."""
    space = conn.space
    if eta is None:
        if not space.iso_basis:
            raise ValueError(f"{space.name} has trivial isotropy; nothing to shift by")
        eta = space.iso_basis[0]
    eta = np.asarray(eta, dtype=float)
    return Connection(space, lambda x, v: conn.eval(x, v) + eta, "corrupt-shifted")
