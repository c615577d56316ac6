"""Command-line entry point: config loading, experiment execution, solver
invocation, and report emission.

Exit codes: 0 success, 1 usage/validation error (with a usage message),
2 runtime failure (non-convergence, I/O) with a diagnostic naming the module.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import abm, dp, equilibrium, report
from .config import (
    ConfigError,
    Controls,
    SimConfig,
    StaticParams,
    apply_profile,
    serialize_config,
    validate_config,
)

STRATEGY_CHOICES = ("GMV", "SW", "HYBRID")
DEFAULT_SEED = 42


class UsageError(ValueError):
    pass


def _load_config(path: str | None, profile: str | None) -> SimConfig:
    raw = {}
    if path and path != "default":
        source = Path(path)
        try:
            raw = json.loads(source.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config file {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {source} is not valid JSON: {exc}") from exc
    cfg = validate_config(raw)
    if profile:
        cfg = apply_profile(cfg, profile)
    return cfg


def _resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env_seed = os.environ.get("PLATFORM_SIM_SEED")
    if env_seed is not None:
        try:
            return int(env_seed)
        except ValueError as exc:
            raise UsageError(
                f"PLATFORM_SIM_SEED must be an integer, got {env_seed!r}"
            ) from exc
    return DEFAULT_SEED


def _parse_strategies(spec: str) -> list[str]:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    bad = [s for s in names if s not in STRATEGY_CHOICES]
    if bad or not names:
        raise UsageError(
            f"invalid strategy list {spec!r}; valid strategies: "
            f"{{{', '.join(STRATEGY_CHOICES)}}}"
        )
    return names


def _parse_objectives(spec: str) -> list[str]:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    bad = [s for s in names if s not in equilibrium.OBJECTIVES]
    if bad or not names:
        raise UsageError(
            f"invalid objective list {spec!r}; valid objectives: "
            f"{{{', '.join(equilibrium.OBJECTIVES)}}}"
        )
    return names


def _parse_grid(spec: str) -> tuple[tuple[float, float, int], ...]:
    """Parse a state-grid spec 'lo:hi:n,lo:hi:n,lo:hi:n,lo:hi:n' (R,C,W,Phi)."""
    parts = spec.split(",")
    if len(parts) != 4:
        raise UsageError(
            f"grid spec needs 4 comma-separated lo:hi:n triples (R,C,W,Phi), got {spec!r}"
        )
    dims = []
    for part in parts:
        pieces = part.split(":")
        if len(pieces) != 3:
            raise UsageError(f"grid dimension {part!r} is not of the form lo:hi:n")
        try:
            lo, hi, n = float(pieces[0]), float(pieces[1]), int(pieces[2])
        except ValueError as exc:
            raise UsageError(f"grid dimension {part!r} is not numeric") from exc
        dims.append((lo, hi, n))
    return tuple(dims)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_static(args: argparse.Namespace) -> int:
    if args.params and args.params != "canonical":
        source = Path(args.params)
        try:
            raw = json.loads(source.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read params file {source}: {exc}") from exc
        try:
            params = StaticParams(**raw)
        except TypeError as exc:
            raise UsageError(f"bad static params: {exc}") from exc
    else:
        params = StaticParams(
            theta=100.0,
            eta=2.0,
            delta=1.0,
            beta_time=0.5,
            gamma=2.0,
            v=60.0,
            fixed_cost=150.0,
            delivery_time=10.0,
        )
    cfg = _load_config(args.config, None)
    bounds = cfg.control_bounds()
    objectives = _parse_objectives(args.objective)

    record: dict = {"params": dataclasses.asdict(params), "optima": {}}
    for objective in objectives:
        controls = equilibrium.solve_static(objective, params, bounds)
        outcome = equilibrium.static_outcome(controls, params)
        record["optima"][objective] = {
            "controls": dataclasses.asdict(controls),
            "outcome": dataclasses.asdict(outcome),
            "surplus": dataclasses.asdict(equilibrium.surplus_report(controls, params)),
        }
    if set(objectives) == set(equilibrium.OBJECTIVES):
        lemma = equilibrium.check_lemma_orderings(params, bounds)
        record["lemma_orderings"] = {
            "commission_ordering": lemma.commission_ordering,
            "fee_ordering": lemma.fee_ordering,
            "wage_ordering": lemma.wage_ordering,
            "sw_dominance": lemma.sw_dominance,
            "sw_at_sw": lemma.sw_at_sw,
            "sw_at_gmv": lemma.sw_at_gmv,
        }
    _emit(record, args.out)
    return 0


def _cmd_dp(args: argparse.Namespace) -> int:
    dpc, tp, params, s0 = dp.canonical_instance()
    overrides: dict = {}
    if args.grid:
        overrides["grid"] = _parse_grid(args.grid)
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.max_iter is not None:
        overrides["max_iter"] = args.max_iter
    if overrides:
        dpc = dataclasses.replace(dpc, **overrides)
    objectives = _parse_objectives(args.objective)
    model = dp.DpModel(dpc, tp, params)

    record: dict = {"discount": dpc.discount, "grid": dpc.grid, "objectives": {}}
    solved: dict[str, tuple[dp.ValueFunction, dp.PolicyGrid]] = {}
    for objective in objectives:
        vf, policy = model.value_iteration(objective)
        solved[objective] = (vf, policy)
        values = vf.values.reshape(-1)
        record["objectives"][objective] = {
            "iterations": len(vf.residual_history),
            "final_residual": vf.residual_history[-1],
            "residual_history": vf.residual_history,
            "value_stats": {
                "min": float(values.min()),
                "mean": float(values.mean()),
                "max": float(values.max()),
            },
            "value_at_start": model.value_at(values, s0),
            "policy_at_start": dataclasses.asdict(model.policy_controls_at(policy, s0)),
        }
        if args.dump_values:
            _dump_value_table(model, vf, policy, objective, args.out_dir)
    if args.check_theorems:
        if set(objectives) != set(equilibrium.OBJECTIVES):
            raise UsageError("--check-theorems requires --objective GMV,SW")
        vf_sw, pol_sw = solved["SW"]
        _, pol_gmv = solved["GMV"]
        a1 = model.check_theorem_a1(s0, policy_sw=pol_sw, policy_gmv=pol_gmv, vf_sw=vf_sw)
        a2 = model.check_theorem_a2(s0, policy_sw=pol_sw, policy_gmv=pol_gmv)
        record["theorem_a1"] = dataclasses.asdict(a1)
        record["theorem_a2"] = dataclasses.asdict(a2)
    _emit(record, args.out)
    return 0


def _dump_value_table(
    model: dp.DpModel,
    vf: dp.ValueFunction,
    policy: dp.PolicyGrid,
    objective: str,
    out_dir: str | None,
) -> None:
    directory = Path(out_dir or ".")
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / f"dp_values_{objective.lower()}.csv"
    nodes = model.tables.nodes
    values = vf.values.reshape(-1)
    lines = ["R,C,W,Phi,value,alpha,D,p"]
    for i in range(nodes.shape[0]):
        row = [format(x, ".6g") for x in nodes[i]]
        row.append(format(values[i], ".6g"))
        row += [format(x, ".6g") for x in policy.controls[i]]
        lines.append(",".join(row))
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config, args.profile)
    strategies = _parse_strategies(args.strategy)
    seed = _resolve_seed(args)
    runs = args.runs if args.runs is not None else cfg.default_runs
    periods = args.periods if args.periods is not None else cfg.n_periods
    out_dir = Path(args.out)

    results: list[abm.RunResult] = []
    for strategy in strategies:
        strat_cfg = dataclasses.replace(cfg, platform_strategy=strategy)
        results.extend(
            abm.run_simulation(strat_cfg, seed=seed, runs=runs, periods=periods, jobs=args.jobs)
        )
    agg = report.aggregate_runs(results)
    written = report.export(agg, results, out_dir, fmt=args.format)
    report.save_runs(results, out_dir / "runs.json")
    manifest = {
        "seed": seed,
        "runs": runs,
        "periods": periods,
        "strategies": strategies,
        "config": serialize_config(cfg),
        "files": [p.name for p in written] + ["runs.json"],
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    results = report.load_runs(args.runs_file)
    agg = report.aggregate_runs(results)
    report.export(agg, results, args.out, fmt=args.format)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits with 2; we use 1
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="deliverysim",
        description=(
            "Two-sided food-delivery platform economics: static equilibrium "
            "solver, dynamic-programming planner, and multi-agent strategy "
            "simulation."
        ),
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_static = sub.add_parser(
        "static",
        help="solve the one-period model and report optima, surplus, orderings",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_static.add_argument("--params", default="canonical", help="JSON file of model parameters, or 'canonical'")
    p_static.add_argument("--config", default="default", help="config file supplying control bounds")
    p_static.add_argument("--objective", default="GMV,SW", help="comma-separated objectives to solve")
    p_static.add_argument("--out", default=None, help="write the JSON record here instead of stdout")
    p_static.set_defaults(func=_cmd_static)

    p_dp = sub.add_parser(
        "dp",
        help="run value iteration on the dynamic model",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_dp.add_argument("--objective", default="GMV,SW", help="comma-separated objectives")
    p_dp.add_argument("--tol", type=float, default=None, help="sup-norm convergence tolerance (default 1e-06)")
    p_dp.add_argument("--max-iter", type=int, default=None, help="iteration cap (default 1000)")
    p_dp.add_argument("--grid", default=None, help="state grid spec lo:hi:n,lo:hi:n,lo:hi:n,lo:hi:n for R,C,W,Phi")
    p_dp.add_argument("--check-theorems", action="store_true", help="run the welfare-dominance and efficiency checks")
    p_dp.add_argument("--dump-values", action="store_true", help="dump the full value/policy table as CSV")
    p_dp.add_argument("--out", default=None, help="write the JSON record here instead of stdout")
    p_dp.add_argument("--out-dir", default=".", help="directory for value-table dumps")
    p_dp.set_defaults(func=_cmd_dp)

    p_run = sub.add_parser(
        "run",
        help="execute the multi-agent simulation and export reports",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_run.add_argument("--config", default="default", help="JSON config file or 'default'")
    p_run.add_argument("--profile", default=None, help="named preset (paper-experiment: 500 periods, 50 runs)")
    p_run.add_argument("--strategy", default="HYBRID", help="comma-separated strategies to execute under paired seeds")
    p_run.add_argument("--runs", type=int, default=None, help="independent runs per strategy (default from config)")
    p_run.add_argument("--periods", type=int, default=None, help="periods per run (default from config)")
    p_run.add_argument("--seed", type=int, default=None, help="base seed (default 42; env PLATFORM_SIM_SEED overrides)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv", help="report format")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel worker processes for runs")
    p_run.set_defaults(func=_cmd_run)

    p_report = sub.add_parser(
        "report",
        help="re-aggregate saved run artifacts",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_report.add_argument("runs_file", help="runs.json produced by the run command")
    p_report.add_argument("--out", required=True, help="output directory")
    p_report.add_argument("--format", choices=("csv", "json"), default="csv", help="report format")
    p_report.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return 1
    except dp.DpConvergenceError as exc:
        print(f"error (dynamic_program): {exc}", file=sys.stderr)
        return 2
    except equilibrium.SolverError as exc:
        print(f"error (static_equilibrium): {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
