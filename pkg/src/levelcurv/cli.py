"""Command line entry point: ``levelcurv <command> [--config FILE] [--set k=v ...]``.

Commands: catenoid, radial, ring2d, verify, convergence, lemma32.

Exit status is 0 when every check passes, 2 when a mathematical check
fails and 1 on configuration or runtime errors. Outputs go to ``--out``,
else to ``$LEVELCURV_OUTPUT/<instance>``, else to ``./levelcurv-output/<instance>``.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import experiments as ex
from . import radial as rd
from . import ring2d as rg
from .errors import LevelCurvError, NoConvergence
from .io import load_config, parse_boundary, write_csv, write_json

log = logging.getLogger("levelcurv")

OUTPUT_ENV = "LEVELCURV_OUTPUT"
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class ConfigError(ValueError):
    pass


class Params:
    """Typed access to string config values; unknown keys are an error."""

    def __init__(self, values: dict, base_dir=None):
        self.values = dict(values)
        self.used = set()
        self.base_dir = base_dir
        self.effective = {}

    def _raw(self, key, default):
        self.used.add(key)
        return self.values.get(key, default)

    def get(self, key, default, kind=str):
        raw = self._raw(key, default)
        try:
            if kind is bool and isinstance(raw, str):
                low = raw.strip().lower()
                if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                    raise ValueError(raw)
                val = low in ("1", "true", "yes", "on")
            else:
                val = kind(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key!r}: {raw!r}") from exc
        if kind is float and not math.isfinite(val):
            raise ConfigError(f"{key} must be finite")
        self.effective[key] = val
        return val

    def positive(self, key, default, kind=float):
        val = self.get(key, default, kind)
        if not val > 0:
            raise ConfigError(f"{key} must be positive")
        return val

    def finish(self):
        extra = sorted(set(self.values) - self.used)
        if extra:
            raise ConfigError(f"unknown configuration keys: {', '.join(extra)}")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_catenoid(p: Params):
    n = p.get("n", 3, int)
    r_max = p.get("r_max", 40.0, float)
    if n < 2:
        raise ConfigError("n must be >= 2")
    if not r_max > rd.CATENOID_BASE:
        raise ConfigError("r_max must exceed 2")
    return ex.catenoid_experiment(n, r_max, n_t=p.positive("n_t", 128, int),
                                  convention=p.get("convention", "verbatim"),
                                  affine_tol=p.positive("affine_tol", 0.01))


def cmd_radial(p: Params):
    return ex.radial_experiment(p.get("n", 3, int), p.positive("r_outer", 3.0),
                                p.positive("r_inner", 2.0), p.positive("height", 1.0),
                                n_t=p.positive("n_t", 128, int))


def _circle(desc):
    w = desc.split()
    if len(w) == 4 and w[0].lower() == "circle":
        return tuple(float(x) for x in w[1:])
    return None


def ring_problem(p: Params):
    n_theta = p.positive("n_theta", 64, int)
    n_t = p.positive("n_t", 64, int)
    height = p.positive("height", 1.0)
    outer = p.get("outer", f"circle 0 0 {math.cosh(math.acosh(1.2) + 1.0)!r}")
    inner = p.get("inner", "circle 0.2 0 1.2")
    t_order = p.get("t_order", 6, int)
    problem = rg.make_problem(parse_boundary(outer, n_theta, p.base_dir),
                              parse_boundary(inner, n_theta, p.base_dir),
                              n_t, height, t_order)
    oracle = None
    co, ci = _circle(outer), _circle(inner)
    if co and ci and co[:2] == ci[:2]:
        sol = rd.solve_flux(rd.RadialConfig(2, co[2], ci[2], height))
        cx, cy = co[:2]

        def oracle(t, theta, sol=sol):
            return (sol.r_of_t(t)[:, None] + cx * np.cos(theta) + cy * np.sin(theta))
    return problem, oracle


def cmd_ring2d(p: Params):
    problem, oracle = ring_problem(p)
    return ex.ring_experiment(problem, p.get("instance", "ring2d"),
                              tol=p.positive("tol", 1e-10),
                              max_iter=p.positive("max_iter", 40, int),
                              oracle=oracle, d2f_tol=p.positive("d2f_tol", 1e-6),
                              remark_tol=p.positive("remark_tol", 1e-6),
                              ineq_tol=p.positive("ineq_tol", 1e-6),
                              physical=p.get("physical", True, bool))


def cmd_verify(p: Params):
    kind = p.get("kind", "ring2d")
    if kind == "ring2d":
        p.values.setdefault("n_theta", "128")
        p.values.setdefault("n_t", "128")
        problem, _ = ring_problem(p)
        return ex.ring_verify(problem, p.get("instance", "verify-ring2d"),
                              tol=p.positive("tol", 1e-10),
                              eps_cap=p.positive("eps_cap", 1e-5))
    if kind in ("catenoid", "radial"):
        n = p.get("n", 3, int)
        if kind == "catenoid":
            sol = rd.catenoid_solution(n, p.get("r_max", 10.0, float))
        else:
            sol = rd.solve_flux(rd.RadialConfig(n, p.positive("r_outer", 3.0),
                                                p.positive("r_inner", 2.0),
                                                p.positive("height", 1.0)))
        return ex.radial_verify(sol, p.positive("n_t", 128, int),
                                p.get("instance", f"verify-{kind}-n{n}"),
                                eps_cap=p.positive("eps_cap", 1e-5))
    raise ConfigError(f"unknown verify kind {kind!r}")


def cmd_convergence(p: Params):
    study = p.get("study", "ring2d_radial")
    defaults = {"ring2d_radial": (8, 3), "physical": (64, 1), "codazzi": (64, 3)}
    if study not in defaults:
        raise ConfigError(f"unknown study {study!r}")
    base = p.positive("base", defaults[study][0], int)
    doublings = p.get("doublings", defaults[study][1], int)
    if doublings < 1:
        raise ConfigError("need at least one doubling to estimate an order")
    declared = (p.get("declared_order", None, float)
                if "declared_order" in p.values else None)
    return ex.convergence_experiment(study, base, doublings, declared,
                                     t_order=p.get("t_order", 2, int))


def cmd_lemma32(p: Params):
    dims = p.get("dims", "2,3,4,5,6")
    try:
        dims = tuple(int(x) for x in dims.split(","))
    except ValueError as exc:
        raise ConfigError(f"invalid dims {dims!r}") from exc
    if any(d < 1 for d in dims):
        raise ConfigError("dims must be positive")
    return ex.lemma32_experiment(p.positive("trials", 10_000, int), p.get("seed", 0, int),
                                 dims, p.positive("tol", 1e-12))


COMMANDS = {
    "catenoid": cmd_catenoid,
    "radial": cmd_radial,
    "ring2d": cmd_ring2d,
    "verify": cmd_verify,
    "convergence": cmd_convergence,
    "lemma32": cmd_lemma32,
}


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"levelcurv": pkg, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _out_dir(args, instance) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get(OUTPUT_ENV) or "levelcurv-output"
    return Path(root) / instance


def write_outcome(outcome: ex.Outcome, out_dir: Path, manifest: dict) -> list:
    files = []
    for name, (header, rows) in sorted(outcome.tables.items()):
        files.append(write_csv(out_dir / f"{name}.csv", header, rows))
    for name, doc in sorted(outcome.documents.items()):
        files.append(write_json(out_dir / f"{name}.json", doc))
    names = sorted(f.name for f in files) + ["manifest.json"]
    manifest["artifacts"] = names
    write_json(out_dir / "manifest.json", manifest)
    return names


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levelcurv", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="KEY=VALUE", help="override a configuration key")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--timing", action="store_true",
                    help="record wall-clock time in the manifest (breaks byte-identity)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    outcome = None
    try:
        values = load_config(args.config, args.overrides)
        base_dir = Path(args.config).parent if args.config else None
        params = Params(values, base_dir)
        outcome = COMMANDS[args.command](params)
        params.finish()
    except NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(f"solver report: {exc.report.to_dict()}", file=sys.stderr)
        return EXIT_ERROR
    except (ConfigError, LevelCurvError, ValueError, OSError,
            configparser.Error, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR

    code = EXIT_OK if outcome.passed else EXIT_FAIL
    manifest = {
        "command": args.command,
        "instance": outcome.instance,
        "config": params.effective,
        "seed": params.effective.get("seed"),
        "versions": _versions(),
        "checks": [c.to_dict() for c in outcome.checks],
        "passed": outcome.passed,
        "exit_code": code,
    }
    if args.timing:
        manifest["wall_clock_seconds"] = time.perf_counter() - started
    out_dir = _out_dir(args, outcome.instance)
    try:
        write_outcome(outcome, out_dir, manifest)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for c in outcome.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.6g} "
              f"(threshold {c.threshold:.3g}){'  ' + c.detail if c.detail else ''}")
    print(f"outputs in {out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
