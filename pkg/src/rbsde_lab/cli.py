"""Config-driven experiment runner.

    rbsde-lab <command> --config cfg.json [--out DIR] [--seed N] [--check-only]

Commands: solve, oracle, penalize, stop, risk, glcheck, sweep (and schema,
which prints the config schema). The exit status is 1 when any
assertion-class check fails and 2 when the config or a run parameter is invalid.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import io, picard
from .drivers import DRIVERS, frozen_driver, make_driver, zero_driver
from .errors import ConfigInvalid, RbsdeError, TooManyPolicies
from .glcheck import from_solution, random_decomposition, verify_formula
from .lattice import LatticeSpec, Mark, MarkSpace, binary_lattice, build_lattice
from .penalization import convergence_table, solve_penalized
from .process import OBSTACLES, random_obstacle
from .snell import check_solution, oracle_value, policy_count, solve_frozen
from .stopping import check_epsilon_optimality, optimal_time_lusc, risk_measure

COMMANDS = ("solve", "oracle", "penalize", "stop", "risk", "glcheck", "sweep")

_obstacle_schema = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name"],
    "properties": {
        "name": {"enum": sorted(OBSTACLES) + ["random"]},
        "params": {"type": "object"},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["lattice"],
    "properties": {
        "lattice": {
            "type": "object",
            "additionalProperties": False,
            "required": ["N"],
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "branching": {"enum": ["binary", "trinomial"]},
                "grid": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "marks": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["name", "intensity"],
                        "properties": {
                            "name": {"type": "string"},
                            "size": {"type": "number"},
                            "intensity": {"type": "number", "minimum": 0},
                        },
                    },
                },
            },
        },
        "obstacle": _obstacle_schema,
        "obstacle_other": _obstacle_schema,
        "driver": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {"name": {"enum": sorted(DRIVERS)}, "params": {"type": "object"}},
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta": {"type": "number", "minimum": 0},
                "betas": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "epsilon": {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                                      {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}]},
                "n_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "nodes": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "check_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "max_policies": {"type": "integer", "minimum": 1},
                "instances": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
    },
}


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigInvalid(exc.message, path) from None
    return cfg


def load_config(path):
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(str(exc), str(path)) from None
    return validate_config(cfg)


def _lattice(cfg):
    lc = cfg["lattice"]
    marks = MarkSpace(tuple(Mark(m["name"], float(m.get("size", 0.0)), float(m["intensity"]))
                            for m in lc.get("marks", [])))
    grid = tuple(lc["grid"]) if "grid" in lc else None
    return build_lattice(LatticeSpec(N=lc["N"], T=float(lc.get("T", 1.0)),
                                     branching=lc.get("branching", "binary"), marks=marks, grid=grid))


def _obstacle(lat, spec, rng):
    spec = spec or {"name": "constant"}
    params = dict(spec.get("params", {}))
    if spec["name"] == "random":
        return random_obstacle(lat, rng, **params)
    for key in ("jumps", "levels"):
        if key in params:
            params[key] = {int(k): v for k, v in params[key].items()}
    return OBSTACLES[spec["name"]](lat, **params)


def _driver(lat, cfg):
    spec = cfg.get("driver") or {"name": "zero"}
    return make_driver(lat, spec["name"], spec.get("params"))


class Runner:
    def __init__(self, cfg, seed=None):
        self.cfg = cfg
        self.run = cfg.get("run", {})
        self.seed = seed if seed is not None else self.run.get("seed", 0)
        self.rng = np.random.default_rng(self.seed)
        self.lat = _lattice(cfg)
        self.xi = _obstacle(self.lat, cfg.get("obstacle"), self.rng)
        self.driver = _driver(self.lat, cfg)
        self.check_tol = self.run.get("check_tol", 1e-10)
        self.failures = []
        self.artifacts = {}  # file name -> rows (csv) or object (json)

    def fail(self, message):
        self.failures.append(message)

    def solution(self):
        return picard.solve(self.lat, self.driver, self.xi, beta=self.run.get("beta", 1.0),
                            tol=self.run.get("tol", 1e-10), max_iter=self.run.get("max_iter", 200))

    def frozen_f(self):
        """Driver values per node: the driver itself if frozen, else its value at the fixed point."""
        return self.solution()[0].f

    def nodes(self):
        return self.run.get("nodes") or list(range(self.lat.n_nodes))

    def epsilons(self):
        eps = self.run.get("epsilon", [1.0, 0.1, 0.01])
        return eps if isinstance(eps, list) else [eps]

    # -- commands -------------------------------------------------------
    def cmd_solve(self):
        sol, diag = self.solution()
        report = check_solution(self.lat, sol.f, self.xi, sol)
        if not report.ok(self.check_tol):
            self.fail(f"solution conditions violated: worst residual {report.worst:.3e}")
        rows = io.solution_rows(self.lat, sol)
        self.artifacts["solution.csv"] = rows
        self.artifacts["solution.json"] = {"rows": rows, "skorokhod": report, "picard": diag}

    def cmd_oracle(self):
        f = self.frozen_f()
        sol = solve_frozen(self.lat, f, self.xi)
        limit = self.run.get("max_policies", 10**8)
        rows = []
        for S in self.nodes():
            row = {"node": S, "time_index": self.lat.time_index(S), "Y": sol.Y.v[S],
                   "policies": policy_count(self.lat, S)}
            try:
                row["oracle"] = oracle_value(self.lat, f, self.xi, S, max_policies=limit)
                row["abs_diff"] = abs(row["oracle"] - sol.Y.v[S])
                row["status"] = "ok" if row["abs_diff"] <= 1e-12 else "mismatch"
            except TooManyPolicies:
                row["status"] = "skipped"
            if row["status"] == "mismatch":
                self.fail(f"oracle mismatch at node {S}: {row['abs_diff']:.3e}")
            rows.append(row)
        self.artifacts["oracle.csv"] = rows

    def cmd_penalize(self):
        f = self.frozen_f()
        n_list = self.run.get("n_list", [1, 10, 100, 1000, 1e4, 1e5, 1e6])
        try:
            rows = convergence_table(self.lat, f, self.xi, n_list)
        except RbsdeError as exc:
            self.fail(str(exc))
            rows = []
        self.artifacts["penalize.csv"] = rows

    def cmd_stop(self):
        sol = picard.solve(self.lat, self.driver, self.xi, beta=self.run.get("beta", 1.0),
                           tol=self.run.get("tol", 1e-16), max_iter=self.run.get("max_iter", 500))[0]
        rows = []
        for S in self.nodes():
            for eps in self.epsilons():
                r = check_epsilon_optimality(self.lat, self.driver, self.xi, S, eps, sol=sol)
                rows.append({"S": S, "kind": "epsilon", "epsilon": eps, "stops": r.stops, "Y_S": r.Y_S,
                             "value": r.value, "gap": r.gap, "empirical_C": r.empirical_C})
                if not r.holds:
                    self.fail(f"epsilon-optimality gap {r.gap:.3e} > {eps} at node {S}")
            try:
                _, r = optimal_time_lusc(self.lat, sol, self.xi, S, driver=self.driver)
                rows.append({"S": S, "kind": "first_hit", "stops": r.stops, "Y_S": r.Y_S,
                             "value": r.value, "gap": r.gap})
                if not r.holds:
                    self.fail(f"first hitting time not optimal at node {S}: gap {r.gap:.3e}")
            except RbsdeError as exc:
                rows.append({"S": S, "kind": "first_hit", "note": type(exc).__name__})
        self.artifacts["stop.csv"] = rows

    def cmd_risk(self):
        other = self.cfg.get("obstacle_other")
        xi2 = _obstacle(self.lat, other, self.rng) if other else None
        rep = risk_measure(self.lat, self.driver, self.xi, xi2)
        rows = []
        for n in range(self.lat.n_nodes):
            row = {"node": n, "time_index": self.lat.time_index(n), "v": rep.v[n]}
            if xi2 is not None:
                row["v_other"] = rep.v_other[n]
            rows.append(row)
        if rep.violations:
            self.fail(f"risk measure not antimonotone at {rep.violations} nodes")
        self.artifacts["risk.csv"] = rows
        self.artifacts["risk.json"] = {"ordered": rep.ordered, "violations": rep.violations,
                                       "max_violation": rep.max_violation}

    def cmd_glcheck(self):
        sol = self.solution()[0]
        dec = from_solution(self.lat, sol)
        rows = []
        for beta in self.run.get("betas", [0.0, 1.0, 5.0]):
            try:
                r = verify_formula(self.lat, dec, beta)
                rows.append({"beta": beta, "max_discrepancy": r.max_discrepancy, "worst_path": r.worst_path,
                             "status": "ok"})
            except RbsdeError as exc:
                self.fail(str(exc))
                rows.append({"beta": beta, "status": type(exc).__name__})
        self.artifacts["glcheck.csv"] = rows

    def cmd_sweep(self):
        """Randomized property suite over small binary lattices, with and without a mark."""
        rows = []
        rng = self.rng
        for i in range(self.run.get("instances", 20)):
            marks = [Mark("u", -0.3, 0.2)] if i % 2 else []
            lat = binary_lattice(1 + i % 3, 1.0, marks)
            xi = random_obstacle(lat, rng)
            f = rng.uniform(-1, 1, lat.n_nodes)
            sol = solve_frozen(lat, f, xi)
            checks = {}
            gap = max(abs(oracle_value(lat, f, xi, S, max_policies=10**8) - sol.Y.v[S])
                      for S in range(lat.n_nodes))
            checks["oracle"] = (gap, gap <= 1e-12)
            worst = check_solution(lat, f, xi, sol).worst
            checks["skorokhod"] = (worst, worst <= 1e-12)
            ap = picard.apriori_check(lat, f, rng.uniform(-1, 1, lat.n_nodes), xi, epsilon=0.5)
            checks["apriori"] = (ap.lhs - ap.rhs, ap.holds)
            gl = max(verify_formula(lat, from_solution(lat, sol), b, tol=np.inf).max_discrepancy
                     for b in (0.0, 1.0, 5.0))
            gl = max(gl, verify_formula(lat, random_decomposition(lat, rng), 1.0, tol=np.inf).max_discrepancy)
            checks["glcheck"] = (gl, gl <= 1e-10)
            z = solve_frozen(lat, 0.0, xi)
            worst = max(check_epsilon_optimality(lat, zero_driver(), xi, S, e, sol=z).gap - e
                        for S in range(lat.n_nodes) for e in (1.0, 0.1, 0.01))
            checks["epsilon"] = (worst, worst <= 1e-12)
            upper = xi.shift(float(rng.uniform(0, 1)))
            risk = risk_measure(lat, frozen_driver(f), xi, upper)
            checks["risk"] = (risk.max_violation, risk.violations == 0)
            for name, (value, ok) in checks.items():
                rows.append({"instance": i, "check": name, "value": value, "passed": bool(ok)})
                if not ok:
                    self.fail(f"sweep instance {i}: {name} failed ({value:.3e})")
        self.artifacts["sweep.csv"] = rows
        self.artifacts["sweep.json"] = {"rows": rows}

    def execute(self, command):
        getattr(self, f"cmd_{command}")()
        return not self.failures

    def write(self, out_dir, command):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, content in self.artifacts.items():
            if name.endswith(".csv"):
                io.write_csv(out / name, content)
            else:
                io.write_json(out / name, content)
        io.write_json(out / f"{command}_summary.json",
                      {"command": command, "seed": self.seed, "config": self.cfg,
                       "failures": self.failures, "passed": not self.failures})


def build_parser():
    p = argparse.ArgumentParser(prog="rbsde-lab", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS + ("schema",))
    p.add_argument("--config", help="path to the JSON experiment config")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized obstacles and sweeps")
    p.add_argument("--check-only", action="store_true", help="run the checks without writing files")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        sys.stdout.write(io.dumps(CONFIG_SCHEMA))
        return 0
    try:
        if not args.config:
            raise ConfigInvalid("--config is required")
        runner = Runner(load_config(args.config), seed=args.seed)
    except (ConfigInvalid, RbsdeError, ValueError) as exc:
        print(f"ConfigInvalid: {exc}", file=sys.stderr)
        return 2
    try:
        ok = runner.execute(args.command)
    except RbsdeError as exc:
        runner.fail(f"{type(exc).__name__}: {exc}")
        ok = False
    except ValueError as exc:
        print(f"invalid run parameters: {exc}", file=sys.stderr)
        return 2
    if not args.check_only:
        runner.write(args.out, args.command)
    for msg in runner.failures:
        print(f"FAIL: {msg}", file=sys.stderr)
    print(f"{args.command}: {'passed' if ok else 'FAILED'}")
    return 0 if ok else 1
