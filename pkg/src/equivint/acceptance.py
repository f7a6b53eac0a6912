"""The acceptance suite: ten property-based criteria with fixed tolerances.

Each criterion returns an :class:`Outcome`; :func:`run_all` runs them in
order.  ``corrupt=True`` swaps the Stiefel connection for a broken one so
the suite can be shown to fail.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import algebrachk as ac
from . import fields
from . import verify as V
from .matexp import random_general_linear
from .skeleton import DESIGN_ORDER, SKELETON_NAMES, from_butcher, integrate, named_skeleton
from .spaces import affine_space, get_space, isospectral, lax_choice, toda_generator

CONNECTION_SPACES = (
    "sphere:3", "sphere:4", "stiefel:5,2", "stiefel:4,2", "grassmann:4,2", "grassmann:5,2",
    "spd:3", "so:3", "so:3:right", "gl:3", "gl:3:right", "cartan_schouten:so3:mean",
    "cartan_schouten:so3:plus", "cartan_schouten:so3:minus", "affine:3:gl", "affine:3:so",
)
EQUIVARIANCE_SPACES = ("sphere:3", "stiefel:5,2", "grassmann:4,2", "spd:3", "so:3",
                       "cartan_schouten:so3:mean")
EQUIVARIANCE_METHODS = ("euler_forward", "rkmk4", "cf4", "gauss4")
ORDER_BANDS = {"euler_forward": (1.0, 0.2), "implicit_midpoint": (2.0, 0.2),
               "trapezoidal": (2.0, 0.2), "rkmk3": (3.0, 0.25), "cg3": (3.0, 0.25),
               "rkmk4": (4.0, 0.25), "cf4": (4.0, 0.25), "gauss4": (4.0, 0.25)}
ORDER_PROBLEM_SEED = 0
ORDER_FINAL_TIME = 1.0


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"AC{self.number:<2d} {verdict}  {self.title}: {self.detail} ({self.seconds:.1f}s)"


def corrupted(conn):
    """Stiefel connection with its third term dropped and an isotropy shift added."""
    return V.shifted_connection(V.stiefel_without_third_term(conn))


def _connection(name: str, corrupt: bool):
    space, conn = get_space(name)
    if corrupt and name.startswith("stiefel"):
        conn = corrupted(conn)
    return space, conn


def order_zero(corrupt: bool = False) -> tuple[bool, str]:
    worst, where = 0.0, ""
    for name in ("so:3", "sphere:3"):
        space, _ = get_space(name)
        for sk in SKELETON_NAMES:
            r = V.order_zero_exactness(named_skeleton(sk), space, 20, seed=1)
            if r >= worst:
                worst, where = r, f"{sk} on {name}"
    return worst <= 1e-10, f"max residual {worst:.2e} ({where}) <= 1e-10"


def consistency(corrupt: bool = False) -> tuple[bool, str]:
    worst, where = 0.0, ""
    for name in CONNECTION_SPACES:
        _, conn = _connection(name, corrupt)
        r = V.check_consistency(conn, 100, seed=2)
        if r >= worst:
            worst, where = r, name
    return worst <= 1e-11, f"max residual {worst:.2e} ({where}) <= 1e-11"


def equivariance(corrupt: bool = False) -> tuple[bool, str]:
    conn_worst, meth_worst, where = 0.0, 0.0, ""
    for name in EQUIVARIANCE_SPACES:
        space, conn = _connection(name, corrupt)
        conn_worst = max(conn_worst, V.check_equivariance(conn, 100, seed=3))
        for sk in EQUIVARIANCE_METHODS:
            r = V.check_method_equivariance(
                named_skeleton(sk), conn, lambda rng: fields.random_smooth(space, rng),
                100, seed=4, h=0.1)
            if r >= meth_worst:
                meth_worst, where = r, f"{sk} on {name}"
    ok = conn_worst <= 1e-9 and meth_worst <= 1e-9
    return ok, (f"connection {conn_worst:.2e}, method {meth_worst:.2e} ({where}) <= 1e-9")


def manifold_preservation(corrupt: bool = False) -> tuple[bool, str]:
    rng = np.random.default_rng(5)
    skel = named_skeleton("rkmk4")
    space, conn = get_space("stiefel:5,2")
    f = fields.random_smooth(space, rng)
    traj = integrate(skel, space, conn.choice(f, 0.01), space.sample_point(rng), 100)
    orth = max(float(np.linalg.norm(q.T @ q - np.eye(q.shape[1]))) for q in traj)

    iso = isospectral([4.0, 3.0, 2.0, 1.0])
    p0 = iso.sample_point(rng)
    target = np.sort(np.linalg.eigvalsh(p0))
    traj = integrate(skel, iso, lax_choice(toda_generator, 0.01), p0, 100)
    drift = max(float(np.max(np.abs(np.sort(np.linalg.eigvalsh(p)) - target))) for p in traj)

    spd, sconn = get_space("spd:3")
    f = fields.random_smooth(spd, rng)
    traj = integrate(skel, spd, sconn.choice(f, 0.01), spd.sample_point(rng), 100)
    min_eig = min(float(np.linalg.eigvalsh(p)[0]) for p in traj)
    ok = orth <= 1e-10 and drift <= 1e-8 and min_eig > 0
    return ok, (f"Stiefel |Q^TQ-I| {orth:.2e} <= 1e-10, Toda spectrum drift {drift:.2e} "
                f"<= 1e-8, SPD min eigenvalue {min_eig:.3g} > 0")


def order_problem(name: str):
    """Fixed smooth test problem on ``name``: space, connection, field, x0, exact end point."""
    space, conn = get_space(name)
    rng = np.random.default_rng(ORDER_PROBLEM_SEED)
    f = fields.random_smooth(space, rng)
    x0 = space.sample_point(rng)
    return space, conn, f, x0, V.reference_solution(f, x0, ORDER_FINAL_TIME)


def order_steps(method: str) -> list[float]:
    if DESIGN_ORDER[method] <= 2:
        return [0.1, 0.05, 0.025, 0.0125]
    return [0.2, 0.1, 0.05, 0.025]


def convergence_orders(corrupt: bool = False) -> tuple[bool, str]:
    ok, parts = True, []
    for name in ("sphere:3", "so:3"):
        space, conn, f, x0, ref = order_problem(name)
        for sk, (target, tol) in ORDER_BANDS.items():
            rep = V.observed_order(named_skeleton(sk), space, lambda h: conn.choice(f, h),
                                   x0, order_steps(sk), ref, ORDER_FINAL_TIME)
            good = abs(rep.observed_order - target) <= tol
            ok &= good
            parts.append(f"{sk}@{name.split(':')[0]}={rep.observed_order:.2f}"
                         + ("" if good else "!"))
    return ok, " ".join(parts)


def descent(corrupt: bool = False) -> tuple[bool, str]:
    worst = 0.0
    for name, sk in (("sphere:3", "cf4"), ("grassmann:4,2", "rkmk4")):
        space, conn = get_space(name)
        rng = np.random.default_rng(6)
        for _ in range(5):
            f = fields.random_smooth(space, rng)
            worst = max(worst, V.check_descent(named_skeleton(sk), space, conn, f,
                                               space.sample_point(rng), 0.1))
    return worst <= 1e-10, f"max residual {worst:.2e} <= 1e-10"


TABLE = (
    ("affine", lambda: ac.affine_split(3), True, True),
    ("Stiefel(4,2)", lambda: ac.stiefel_split(4, 2), False, False),
    ("sphere", lambda: ac.stiefel_split(3, 1), True, False),
    ("isospectral (2,1,1)", lambda: ac.block_split([2, 1, 1]), False, False),
    ("isospectral (1,1,1)", lambda: ac.block_split([1, 1, 1]), False, True),
    ("Grassmann(4,2)", lambda: ac.block_split([2, 2]), True, False),
    ("SPD(3)", lambda: ac.spd_split(3), True, False),
    ("Maurer-Cartan so(3)", lambda: ac.group_split(3), False, True),
    ("Cartan-Schouten mean", lambda: ac.cartan_schouten_split(3, "mean"), True, False),
    ("Cartan-Schouten plus", lambda: ac.cartan_schouten_split(3, "plus"), False, True),
    ("Cartan-Schouten minus", lambda: ac.cartan_schouten_split(3, "minus"), False, True),
)


def table_reproduction(corrupt: bool = False) -> tuple[bool, str]:
    bad = []
    for label, build, symmetric, flat in TABLE:
        c = ac.classify(build())
        if not c.reductive or c.symmetric != symmetric or c.flat != flat:
            bad.append(f"{label}: {c.row()}")
    return not bad, ("all %d rows match" % len(TABLE)) if not bad else "; ".join(bad)


def nonexistence(corrupt: bool = False) -> tuple[bool, str]:
    g = ac.sl2_basis()
    h = [g[0]]
    verdicts = [ac.find_reductive_complements(g, h).empty]
    rng = np.random.default_rng(8)
    for _ in range(10):
        a = random_general_linear(2, rng)
        ainv = np.linalg.inv(a)
        conj = [a @ b @ ainv for b in g]
        verdicts.append(ac.find_reductive_complements(conj, [conj[0]]).empty)
    return all(verdicts), f"empty in {sum(verdicts)}/{len(verdicts)} bases"


def _rk4_textbook(f, x, h):
    k1 = f(x)
    k2 = f(x + h / 2 * k1)
    k3 = f(x + h / 2 * k2)
    k4 = f(x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def classical_limit(corrupt: bool = False) -> tuple[bool, str]:
    space, conn = affine_space("gl", 3)

    def f(x):
        a, b, c = x.ravel()
        return np.array([[10 * (b - a)], [a * (28 - c) - b], [a * b - 8 / 3 * c]]) / 10

    a = [[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]]
    skel = from_butcher(a, [1 / 6, 1 / 3, 1 / 3, 1 / 6], "rk4")
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(20):
        x = rng.standard_normal((3, 1))
        h = float(rng.uniform(0.01, 0.2))
        got = integrate(skel, space, conn.choice(f, h), x, 1)[-1]
        worst = max(worst, float(np.linalg.norm(got - _rk4_textbook(f, x, h))))
    return worst <= 1e-12, f"max difference {worst:.2e} <= 1e-12"


def negative_controls(corrupt: bool = False) -> tuple[bool, str]:
    _, conn = get_space("stiefel:5,2")
    dropped = V.check_consistency(V.stiefel_without_third_term(conn), 100, seed=2)
    shifted = V.check_equivariance(V.shifted_connection(conn), 100, seed=3)
    sphere, _ = get_space("sphere:3")
    cay = V.order_zero_exactness(named_skeleton("euler_forward", "cayley"), sphere, 20, seed=1)
    ok = dropped > 1e-11 and shifted > 1e-9 and cay > 1e-10
    return ok, (f"dropped-term consistency {dropped:.2e}, shifted equivariance {shifted:.2e}, "
                f"Cayley order zero {cay:.2e} all rejected")


CRITERIA: tuple[tuple[int, str, Callable[[bool], tuple[bool, str]]], ...] = (
    (1, "order-zero exactness", order_zero),
    (2, "connection consistency", consistency),
    (3, "connection and method equivariance", equivariance),
    (4, "manifold preservation", manifold_preservation),
    (5, "observed convergence orders", convergence_orders),
    (6, "descent from the group", descent),
    (7, "reductive/symmetric/flat table", table_reproduction),
    (8, "non-existence of a reductive complement", nonexistence),
    (9, "classical Runge-Kutta limit", classical_limit),
    (10, "negative controls", negative_controls),
)


def run_criterion(number: int, corrupt: bool = False) -> Outcome:
    for num, title, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            try:
                passed, detail = fn(corrupt)
            except Exception as exc:  # a crash is a failure with its message
                passed, detail = False, f"{type(exc).__name__}: {exc}"
            return Outcome(num, title, bool(passed), detail, time.perf_counter() - t0)
    raise ValueError(f"no acceptance criterion {number}")


def run_all(corrupt: bool = False) -> list[Outcome]:
    return [run_criterion(num, corrupt) for num, _, _ in CRITERIA]
