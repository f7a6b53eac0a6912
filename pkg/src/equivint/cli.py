"""Command-line front end.

Subcommands: ``run``, ``orders``, ``classify``, ``acceptance`` and ``list``.
Exit codes: 0 success, 1 failed check or integration, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import acceptance, algebrachk, fields
from . import verify as V
from .skeleton import SKELETON_NAMES, ConvergenceError, StageError, named_skeleton, step
from .spaces import REGISTRY_HELP, get_space

RUN_KEYS = ("space", "method", "field", "step", "steps", "seed", "outputs")
ORDER_KEYS = ("space", "method", "field", "h_list", "final_time", "seed", "outputs")
BASIS_FILES = ("sphere", "sl2_nilpotent", "affine_scalings")


class ConfigError(ValueError):
    """Invalid or incomplete configuration."""


class CheckFailed(RuntimeError):
    """A numerical check or integration failed."""


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def load_config(path, keys: Sequence[str], seed: Optional[int]) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"config is missing required fields: {', '.join(missing)}")
    if seed is not None:
        cfg["seed"] = seed
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if cfg["method"] not in SKELETON_NAMES:
        raise ConfigError(f"unknown method {cfg['method']!r}; valid: {', '.join(SKELETON_NAMES)}")
    if not isinstance(cfg["outputs"], dict):
        raise ConfigError("outputs must map output kinds to file names")
    return cfg


def build_problem(cfg: dict):
    """Space, vector field and a function ``h -> isotropy choice``."""
    try:
        space, conn = get_space(cfg["space"])
        field = fields.make_field(space, cfg["field"], cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if conn is not None:
        return space, field, lambda h: conn.choice(field, h)
    if field.generator is None:
        raise ConfigError(f"{space.name} has no connection; use a field with a "
                          "generator (toda, constant_rotation, smooth, coefficients)")
    gen = field.generator
    return space, field, lambda h: (lambda x: h * gen(x))


def initial_point(space, cfg: dict) -> np.ndarray:
    """``cfg["x0"]`` when given, otherwise a point drawn from the seed."""
    if cfg.get("x0") is not None:
        return np.asarray(cfg["x0"], dtype=float)
    return space.sample_point(np.random.default_rng(cfg["seed"] + 1))


def _output(cfg: dict, kind: str, out_dir: Path) -> Path:
    name = cfg["outputs"].get(kind)
    if not name:
        raise ConfigError(f"outputs.{kind} is required")
    path = out_dir / name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def cmd_run(cfg: dict, out_dir: Path) -> int:
    h, steps = cfg["step"], cfg["steps"]
    if not (isinstance(h, (int, float)) and h > 0):
        raise ConfigError("step must be a positive number")
    if not (isinstance(steps, int) and steps >= 1):
        raise ConfigError("steps must be an integer >= 1")
    space, _, nu_of_h = build_problem(cfg)
    skel = named_skeleton(cfg["method"])
    nu = nu_of_h(float(h))
    x = space.require_point(initial_point(space, cfg), "x0")
    path = _output(cfg, "trajectory", out_dir)
    shape = x.shape
    header = ["step", "time"] + [f"x_{i}_{j}" for i in range(shape[0]) for j in range(shape[1])]
    header.append(space.invariant_name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(steps + 1):
            if k > 0:
                try:
                    x = step(skel, space, nu, x)
                except (ConvergenceError, StageError) as exc:
                    raise CheckFailed(f"step {k}: {exc}") from exc
            w.writerow([k, _fmt(k * h)] + [_fmt(v) for v in x.ravel()]
                       + [_fmt(space.invariant_value(x))])
    print(f"wrote {steps + 1} rows to {path}")
    return 0


def cmd_orders(cfg: dict, out_dir: Path) -> int:
    h_list, T = cfg["h_list"], cfg["final_time"]
    if not (isinstance(T, (int, float)) and T > 0):
        raise ConfigError("final_time must be a positive number")
    space, field, nu_of_h = build_problem(cfg)
    x0 = space.require_point(initial_point(space, cfg), "x0")
    ref = field.exact(T, x0) if field.exact else V.reference_solution(field, x0, T)
    try:
        rep = V.observed_order(named_skeleton(cfg["method"]), space, nu_of_h, x0, h_list,
                               ref, float(T))
    except V.ExactToPrecisionError as exc:
        raise CheckFailed(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    except (ConvergenceError, StageError) as exc:
        raise CheckFailed(str(exc)) from exc
    path = _output(cfg, "table", out_dir)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "error", "local_slope"])
        for hh, err, slope in rep.rows():
            w.writerow([_fmt(hh), _fmt(err), "" if np.isnan(slope) else _fmt(slope)])
    if cfg["outputs"].get("report"):
        report = {"method": cfg["method"], "space": space.name, "fitted_order": rep.observed_order,
                  "step_sizes": rep.step_sizes, "errors": rep.errors}
        _output(cfg, "report", out_dir).write_text(json.dumps(report, indent=2))
    print(f"fitted order {rep.observed_order:.4f} ({cfg['method']} on {space.name})")
    return 0


def load_basis(source: str) -> tuple[str, algebrachk.SubalgebraSplit]:
    """Read a basis file, or a shipped one by bare name (e.g. ``sphere``)."""
    if source in BASIS_FILES:
        text = resources.files("equivint.data").joinpath(f"{source}.json").read_text()
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read basis file {source}: {exc}") from exc
    try:
        data = json.loads(text)
        mats = {k: np.asarray(v, dtype=float) for k, v in data["matrices"].items()}
        pick = lambda names: [mats[n] for n in names]
        split = algebrachk.SubalgebraSplit(
            pick(data["g"]), pick(data["h"]),
            pick(data["m"]) if data.get("m") is not None else None,
            [np.asarray(c, dtype=float) for c in data.get("components", [])])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed basis file {source}: {exc!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid basis in {source}: {exc}") from exc
    return data.get("name", source), split


def cmd_classify(source: str) -> int:
    name, split = load_basis(source)
    print(name)
    if split.m_basis is not None:
        c = algebrachk.classify(split)
        print(c.row())
        print("residuals: reductive %.2e symmetric %.2e flat %.2e (%s criterion)"
              % (*c.residuals, c.criterion))
    found = algebrachk.find_reductive_complements(split.g_basis, split.h_basis,
                                                  components=split.components)
    print(found.describe())
    return 0


def cmd_acceptance(corrupt: bool, out_dir: Optional[Path]) -> int:
    outcomes = []
    for num, _, _ in acceptance.CRITERIA:
        o = acceptance.run_criterion(num, corrupt)
        print(o.line(), flush=True)
        outcomes.append(o)
    failed = [o for o in outcomes if not o.passed]
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        records = [{"criterion": o.number, "title": o.title, "passed": o.passed,
                    "detail": o.detail, "seconds": o.seconds, "corrupt": corrupt}
                   for o in outcomes]
        (out_dir / "acceptance.json").write_text(json.dumps(records, indent=2))
    print(f"{len(outcomes) - len(failed)}/{len(outcomes)} criteria passed")
    return 1 if failed else 0


def cmd_list() -> int:
    print("spaces:")
    for k, v in REGISTRY_HELP.items():
        print(f"  {k:38s} {v}")
    print("methods:\n  " + ", ".join(SKELETON_NAMES))
    print("fields:\n  " + ", ".join(fields.FIELD_NAMES))
    print("shipped basis files:\n  " + ", ".join(BASIS_FILES))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="equivint", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "integrate and write a trajectory CSV"),
                           ("orders", "measure the convergence order")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True, help="JSON config file")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--out", default=".", help="output directory")
    s = sub.add_parser("classify", help="classify a splitting from a basis file")
    s.add_argument("basis", help=f"basis JSON file or one of: {', '.join(BASIS_FILES)}")
    s = sub.add_parser("acceptance", help="run the acceptance suite")
    s.add_argument("--corrupt", action="store_true",
                   help="inject a broken Stiefel connection (the suite must fail)")
    s.add_argument("--out", help="directory for acceptance.json")
    sub.add_parser("list", help="list spaces, methods, fields and basis files")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return cmd_run(load_config(args.config, RUN_KEYS, args.seed), Path(args.out))
        if args.command == "orders":
            return cmd_orders(load_config(args.config, ORDER_KEYS, args.seed), Path(args.out))
        if args.command == "classify":
            return cmd_classify(args.basis)
        if args.command == "acceptance":
            return cmd_acceptance(args.corrupt, Path(args.out) if args.out else None)
        return cmd_list()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
