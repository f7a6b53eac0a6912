"""Stage-tree integrators: a skeleton plus an isotropy choice gives a method.

A skeleton is a tree of stages with an initial and a final vertex.  Every
edge ``(i, j)`` carries a transition function ``tau_ij`` of the frozen
algebra elements ``F``; the stage equations are

    X_initial = x0
    X_i = motion(tau_ij(F)) . X_j      for every edge
    F_v = nu(X_v)                      for every used vertex v
    x1 = X_final

The time step never appears here: callers pass an already scaled choice
``nu(x) = h * omega(x, f(x))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .matexp import MOTIONS, commutator

FIXED_POINT_TOL = 1e-13
MAX_ITERATIONS = 200
STAGE_TOL = 1e-6

Combine = Callable[[Mapping[str, np.ndarray]], np.ndarray]
IsotropyChoice = Callable[[np.ndarray], np.ndarray]


class ConvergenceError(RuntimeError):
    """The implicit stage system did not converge."""

    def __init__(self, skeleton: str, iterations: int, residual: float):
        super().__init__(
            f"skeleton {skeleton!r}: fixed-point iteration did not converge after "
            f"{iterations} iterations (last residual {residual:.3g})")
        self.iterations = iterations
        self.residual = residual


class StageError(RuntimeError):
    """A stage left the manifold beyond tolerance."""

    def __init__(self, skeleton: str, vertex: str, distance: float):
        super().__init__(
            f"skeleton {skeleton!r}: stage {vertex!r} left the manifold "
            f"(distance {distance:.3g})")
        self.vertex = vertex
        self.distance = distance


@dataclass(frozen=True)
class TransitionRule:
    """``tau_{target,source}``: so ``X_target = motion(tau) . X_source``.

    ``deps`` lists the labels of ``F`` (or auxiliary variables) read by
    ``combine``.
    """

    target: str
    source: str
    combine: Combine
    deps: tuple[str, ...]
    text: str = ""

    def reversed(self) -> "TransitionRule":
        inner = self.combine

        def negated(F):
            v = inner(F)
            return None if v is None else -v
        return TransitionRule(self.source, self.target, negated, self.deps,
                              f"-({self.text})")


@dataclass(frozen=True)
class StageTree:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    initial: str
    final: str

    def __post_init__(self):
        verts = set(self.vertices)
        if len(verts) != len(self.vertices):
            raise ValueError("duplicate vertex labels")
        if self.initial not in verts or self.final not in verts:
            raise ValueError("initial and final must be vertices")
        if not self.edges:
            raise ValueError("a stage tree needs at least one edge")
        if self.initial == self.final:
            raise ValueError("initial and final vertices must differ")
        if len(self.edges) != len(verts) - 1:
            raise ValueError("not a tree: need exactly |V| - 1 edges")
        seen = {self.initial}
        pending = set(map(frozenset, self.edges))
        if len(pending) != len(self.edges):
            raise ValueError("duplicate edges")
        changed = True
        while changed:
            changed = False
            for e in list(pending):
                a, b = tuple(e)
                if a not in verts or b not in verts:
                    raise ValueError(f"edge {tuple(e)} uses an unknown vertex")
                if (a in seen) != (b in seen):
                    seen |= {a, b}
                    pending.discard(e)
                    changed = True
        if seen != verts:
            raise ValueError("stage graph is not connected")


@dataclass(frozen=True)
class AuxiliarySystem:
    """Implicit auxiliary variables solved alongside the stages.

    ``update(F, aux)`` performs one fixed-point update; ``seed(F)`` gives the
    starting guess.
    """

    names: tuple[str, ...]
    deps: tuple[str, ...]
    update: Callable[[Mapping[str, np.ndarray], Mapping[str, np.ndarray]], dict]
    seed: Callable[[Mapping[str, np.ndarray]], dict]


@dataclass(frozen=True)
class _PlanStep:
    rule: TransitionRule
    forward: bool  # True: source known, target computed
    new_vertex: str
    known_vertex: str
    stale: bool


@dataclass(frozen=True)
class Skeleton:
    name: str
    tree: StageTree
    rules: tuple[TransitionRule, ...]
    motion: str = "exponential"
    auxiliary: Optional[AuxiliarySystem] = None
    used_vertices: frozenset = frozenset()
    plan: tuple[_PlanStep, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.motion not in MOTIONS:
            raise ValueError(f"unknown motion {self.motion!r}; valid: {sorted(MOTIONS)}")
        tree_edges = {frozenset(e) for e in self.tree.edges}
        rule_edges = [frozenset((r.target, r.source)) for r in self.rules]
        if set(rule_edges) != tree_edges or len(rule_edges) != len(tree_edges):
            raise ValueError("every tree edge needs exactly one transition rule")
        aux_names = set(self.auxiliary.names) if self.auxiliary else set()
        referenced = {d for r in self.rules for d in r.deps if d not in aux_names}
        if self.auxiliary:
            referenced |= set(self.auxiliary.deps)
        missing = referenced - set(self.used_vertices)
        if missing:
            raise ValueError(f"rules read F at vertices {sorted(missing)} not marked as used")
        if not set(self.used_vertices) <= set(self.tree.vertices):
            raise ValueError("used_vertices must be vertices of the tree")
        object.__setattr__(self, "plan", self._make_plan())

    def _make_plan(self) -> tuple[_PlanStep, ...]:
        aux_names = set(self.auxiliary.names) if self.auxiliary else set()
        known = {self.tree.initial}
        fresh = {self.tree.initial} & set(self.used_vertices)
        remaining = list(self.rules)
        plan = []
        while remaining:
            frontier = [r for r in remaining if (r.target in known) != (r.source in known)]
            ready = [r for r in frontier
                     if all(d in fresh for d in r.deps if d not in aux_names)
                     and not any(d in aux_names for d in r.deps)]
            rule = ready[0] if ready else frontier[0]
            forward = rule.source in known
            new = rule.target if forward else rule.source
            plan.append(_PlanStep(rule, forward, new, rule.source if forward else rule.target,
                                  stale=not ready))
            known.add(new)
            if new in self.used_vertices:
                fresh.add(new)
            remaining.remove(rule)
        return tuple(plan)

    @property
    def explicit(self) -> bool:
        return self.auxiliary is None and not any(s.stale for s in self.plan)

    def with_motion(self, motion: str) -> "Skeleton":
        return replace(self, motion=motion)

    def flip_edge(self, index: int) -> "Skeleton":
        """Same skeleton with rule ``index`` restated on the reversed edge."""
        rules = list(self.rules)
        rules[index] = rules[index].reversed()
        return replace(self, rules=tuple(rules))


def _sweep(skel: Skeleton, space, nu: IsotropyChoice, x0: np.ndarray,
           F: dict, aux: dict, motion) -> tuple[np.ndarray, dict]:
    X = {skel.tree.initial: x0}
    F = dict(F)
    if skel.tree.initial in skel.used_vertices:
        F[skel.tree.initial] = np.asarray(nu(x0), dtype=float)
    values = {**F, **aux}
    for step in skel.plan:
        tau = step.rule.combine(values)
        if tau is None:
            # empty combination: the zero transition leaves the stage in place
            x_new = np.array(X[step.known_vertex], dtype=float)
        else:
            x_new = space.act(motion(tau if step.forward else -tau), X[step.known_vertex])
        dist = space.membership(x_new)
        if not dist <= STAGE_TOL:
            raise StageError(skel.name, step.new_vertex, dist)
        X[step.new_vertex] = x_new
        if step.new_vertex in skel.used_vertices:
            F[step.new_vertex] = values[step.new_vertex] = np.asarray(nu(x_new), dtype=float)
    return X[skel.tree.final], F


def _max_diff(a: Mapping, b: Mapping) -> float:
    return max((float(np.max(np.abs(a[k] - b[k]))) for k in a), default=0.0)


def step(skel: Skeleton, space, nu: IsotropyChoice, x0) -> np.ndarray:
    """Advance ``x0`` by one step of the method ``skel`` composed with ``nu``.

    Explicit skeletons take a single sweep.  Otherwise the stage system is
    iterated from ``F = nu(x0)`` until successive ``F`` (and auxiliary)
    iterates agree to ``FIXED_POINT_TOL``.

    Raises:
        ConvergenceError: no convergence within ``MAX_ITERATIONS`` sweeps.
        StageError: a stage drifted off the manifold.
    """
    x0 = np.asarray(x0, dtype=float)
    motion = MOTIONS[skel.motion]
    if skel.explicit:
        x1, _ = _sweep(skel, space, nu, x0, {}, {}, motion)
        return x1
    f0 = np.asarray(nu(x0), dtype=float)
    F = {v: f0 for v in skel.used_vertices}
    aux = skel.auxiliary.seed(F) if skel.auxiliary else {}
    residual = np.inf
    for it in range(1, MAX_ITERATIONS + 1):
        x1, F_new = _sweep(skel, space, nu, x0, F, aux, motion)
        aux_new = skel.auxiliary.update(F_new, aux) if skel.auxiliary else {}
        residual = max(_max_diff(F_new, F), _max_diff(aux_new, aux))
        F, aux = F_new, aux_new
        if not np.isfinite(residual):
            break
        if residual <= FIXED_POINT_TOL:
            # one more sweep with the converged F/aux pins the stages to them
            x1, _ = _sweep(skel, space, nu, x0, F, aux, motion)
            return x1
    raise ConvergenceError(skel.name, it, residual)


def integrate(skel: Skeleton, space, nu: IsotropyChoice, x0, steps: int) -> list[np.ndarray]:
    """Trajectory ``[x0, x1, ..., x_steps]``."""
    xs = [np.asarray(x0, dtype=float)]
    for _ in range(steps):
        xs.append(step(skel, space, nu, xs[-1]))
    return xs


# --- construction helpers -------------------------------------------------

def _lin(coeffs: Mapping[str, float]) -> Combine:
    items = tuple(coeffs.items())

    def combine(F):
        # None stands for the zero element when no coefficient is present
        out = None
        for label, c in items:
            term = c * F[label]
            out = term if out is None else out + term
        return out
    return combine


def _rule(target: str, source: str, coeffs: Mapping[str, float], text: str,
          extra: Optional[Combine] = None) -> TransitionRule:
    base = _lin(coeffs)
    if extra is None:
        combine = base
    else:
        def combine(F):
            b = base(F)
            return extra(F) if b is None else b + extra(F)
    deps = tuple(k for k, c in coeffs.items() if c != 0)
    return TransitionRule(target, source, combine, deps, text)


def _build(name: str, rules: Sequence[TransitionRule], initial="initial", final="final",
           auxiliary=None, used=None, extra_deps=()) -> Skeleton:
    vertices = []
    for r in rules:
        for v in (r.source, r.target):
            if v not in vertices:
                vertices.append(v)
    tree = StageTree(tuple(vertices), tuple((r.target, r.source) for r in rules),
                     initial, final)
    aux_names = set(auxiliary.names) if auxiliary else set()
    if used is None:
        used = {d for r in rules for d in r.deps if d not in aux_names} | set(extra_deps)
    return Skeleton(name, tree, tuple(rules), "exponential", auxiliary, frozenset(used))


def from_butcher(a, b, name: str = "butcher") -> Skeleton:
    """Star-shaped skeleton of a classical Runge-Kutta tableau.

    Stage ``i`` is reached from the initial vertex by ``sum_j a_ij F_j`` and
    the final vertex by ``sum_j b_j F_j``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    s = len(b)
    if s < 1 or a.shape != (s, s):
        raise ValueError(f"tableau shape mismatch: a {a.shape}, b {b.shape}")
    labels = [str(i + 1) for i in range(s)]
    rules = []
    for i in range(s):
        coeffs = {labels[j]: float(a[i, j]) for j in range(s) if a[i, j] != 0}
        rules.append(_rule(labels[i], "initial", coeffs, f"sum_j a[{i + 1},j] F_j"))
    coeffs = {labels[j]: float(b[j]) for j in range(s) if b[j] != 0}
    rules.append(_rule("final", "initial", coeffs, "sum_j b_j F_j"))
    return _build(name, rules)


def _bracket(c: float, left: Mapping[str, float], right: Mapping[str, float]) -> Combine:
    lf, rf = _lin(left), _lin(right)

    def extra(F):
        return c * commutator(lf(F), rf(F))
    return extra


def _euler_forward():
    return _build("euler_forward", [_rule("final", "initial", {"initial": 1.0}, "F_initial")])


def _euler_backward():
    return _build("euler_backward", [_rule("final", "initial", {"final": 1.0}, "F_final")])


def _trapezoidal():
    return _build("trapezoidal", [
        _rule("final", "initial", {"initial": 0.5, "final": 0.5}, "(F_initial + F_final)/2")])


def _implicit_midpoint():
    return _build("implicit_midpoint", [
        _rule("star", "initial", {"star": 0.5}, "F_star/2"),
        _rule("final", "star", {"star": 0.5}, "F_star/2"),
    ])


def _cf4():
    return _build("cf4", [
        _rule("1", "initial", {"initial": 0.5}, "F_initial/2"),
        _rule("2", "initial", {"1": 0.5}, "F_1/2"),
        _rule("3", "1", {"initial": -0.5, "2": 1.0}, "-F_initial/2 + F_2"),
        _rule("4'", "initial", {"initial": 3 / 12, "1": 2 / 12, "2": 2 / 12, "3": -1 / 12},
              "(3F_initial + 2(F_1 + F_2) - F_3)/12"),
        _rule("final", "4'", {"initial": -1 / 12, "1": 2 / 12, "2": 2 / 12, "3": 3 / 12},
              "(-F_initial + 2(F_1 + F_2) + 3F_3)/12"),
    ])


def _rkmk3():
    return _build("rkmk3", [
        _rule("1", "initial", {"initial": 0.5}, "F_initial/2"),
        _rule("2", "initial", {"initial": -1.0, "1": 2.0}, "-F_initial + 2F_1"),
        _rule("final", "initial", {"initial": 1 / 6, "1": 4 / 6, "2": 1 / 6},
              "(F_initial + 4F_1 + F_2)/6 + [4F_1 + F_2, F_initial]/36",
              _bracket(1 / 36, {"1": 4.0, "2": 1.0}, {"initial": 1.0})),
    ])


def _rkmk4():
    return _build("rkmk4", [
        _rule("1", "initial", {"initial": 0.5}, "F_initial/2"),
        _rule("2", "initial", {"1": 0.5}, "F_1/2 - [F_initial, F_1]/8",
              _bracket(-1 / 8, {"initial": 1.0}, {"1": 1.0})),
        _rule("3", "initial", {"2": 1.0}, "F_2"),
        _rule("final", "initial", {"initial": 1 / 6, "1": 2 / 6, "2": 2 / 6, "3": 1 / 6},
              "(F_initial + 2(F_1 + F_2) + F_3)/6 - [F_initial, F_3]/12",
              _bracket(-1 / 12, {"initial": 1.0}, {"3": 1.0})),
    ])


def _cg3():
    return _build("cg3", [
        _rule("1", "initial", {"initial": 3 / 4}, "3F_initial/4"),
        _rule("2", "2'", {"1": 17 / 108}, "17F_1/108"),
        _rule("2'", "initial", {"initial": 119 / 216}, "119F_initial/216"),
        _rule("final", "3'", {"2": 24 / 17}, "24F_2/17"),
        _rule("3'", "3''", {"1": -2 / 3}, "-2F_1/3"),
        _rule("3''", "initial", {"initial": 13 / 51}, "13F_initial/51"),
    ])


_S3 = math.sqrt(3.0)


def _gauss4():
    def seed(F):
        return {"+bar": F["+"], "-bar": F["-"]}

    def update(F, aux):
        plus = F["+"] + (_S3 / 12) * commutator(aux["-bar"], F["+"])
        minus = F["-"] - (_S3 / 12) * commutator(plus, F["-"])
        return {"+bar": plus, "-bar": minus}

    aux = AuxiliarySystem(("+bar", "-bar"), ("+", "-"), update, seed)
    return _build("gauss4", [
        _rule("mid", "initial", {"+bar": 0.25, "-bar": 0.25}, "(Fbar_+ + Fbar_-)/4"),
        _rule("final", "mid", {"+bar": 0.25, "-bar": 0.25}, "(Fbar_+ + Fbar_-)/4"),
        _rule("mid", "-", {"+bar": -_S3 / 6}, "-sqrt(3)/6 Fbar_+"),
        _rule("mid", "+", {"-bar": _S3 / 6}, "sqrt(3)/6 Fbar_-"),
    ], auxiliary=aux, used={"+", "-"})


_CATALOG = {
    "euler_forward": _euler_forward,
    "euler_backward": _euler_backward,
    "trapezoidal": _trapezoidal,
    "implicit_midpoint": _implicit_midpoint,
    "rkmk3": _rkmk3,
    "rkmk4": _rkmk4,
    "cg3": _cg3,
    "cf4": _cf4,
    "gauss4": _gauss4,
}

SKELETON_NAMES = tuple(_CATALOG)

DESIGN_ORDER = {
    "euler_forward": 1, "euler_backward": 1, "trapezoidal": 2,
    "implicit_midpoint": 2, "rkmk3": 3, "cg3": 3, "rkmk4": 4, "cf4": 4, "gauss4": 4,
}


def named_skeleton(name: str, motion: str = "exponential") -> Skeleton:
    """One of the catalog skeletons, optionally with the Cayley motion map.

    Design orders only hold for the exponential motion.
    """
    try:
        skel = _CATALOG[name]()
    except KeyError:
        raise ValueError(f"unknown skeleton {name!r}; valid names: "
                         f"{', '.join(SKELETON_NAMES)}") from None
    return skel if motion == "exponential" else skel.with_motion(motion)
