"""Batch experiment runner: strict JSON configs, deterministic metrics files,
comparison tables, and parameter sweeps.

Config files are nested key-value tables; unknown keys are rejected with the
offending path. Metrics are written as JSON lines (one record per iteration
recorded), summaries and tables as CSV. All outputs except the wall-time
column of the summary are byte-identical across reruns of the same config.
"""
from __future__ import annotations

import argparse
import copy
import inspect
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .core import NoiseModel
from .diagnostics import exact_penalty_margin
from .lagrangian import RunResult, SolverConfig, StepSchedule, run
from .methods import MethodConfig
from .problems import RECIPES, ProblemRecipe, make_recipe


class ConfigError(ValueError):
    """Invalid configuration file; maps to exit code 2."""


_TOP_KEYS = {"problem", "solver", "output_path", "record_every", "repetitions", "kkt_probe"}
_SOLVER_KEYS = {
    "method",
    "rho",
    "beta",
    "theta",
    "eta",
    "tracker",
    "dual",
    "noise",
    "max_iters",
    "seed",
}
_METHOD_KEYS = {"kind", "tau", "alpha", "tau1", "tau2", "eps"}
_SCHEDULE_KEYS = {"kind", "c", "epoch_len", "exponent"}
_TRACKER_KEYS = {"kind", "tau_tilde"}
_DUAL_KEYS = {"kind", "beta_tilde", "sigma", "theta_tilde", "inner_steps"}
_NOISE_KEYS = {"kind", "bound", "seed"}


@dataclass(frozen=True)
class RunConfig:
    problem: dict
    solver: SolverConfig
    output_path: str = "out"
    record_every: int = 10
    repetitions: int = 1
    kkt_probe: float | None = 1e-3

    def __post_init__(self):
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")


def _check_keys(table: dict, allowed: set, path: str):
    if not isinstance(table, dict):
        raise ConfigError(f"{path}: expected a key-value table")
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")


def _schedule(table, path: str, default: StepSchedule) -> StepSchedule:
    if table is None:
        return default
    _check_keys(table, _SCHEDULE_KEYS, path)
    try:
        return StepSchedule(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(raw: dict) -> RunConfig:
    _check_keys(raw, _TOP_KEYS, "config")
    if "problem" not in raw:
        raise ConfigError("config: missing required key 'problem'")
    problem = raw["problem"]
    if not isinstance(problem, dict) or "kind" not in problem:
        raise ConfigError("problem: needs a 'kind' key")
    if problem["kind"] not in RECIPES:
        raise ConfigError(
            f"problem.kind: unknown kind {problem['kind']!r}; known: {sorted(RECIPES)}"
        )
    sig = inspect.signature(RECIPES[problem["kind"]])
    extra = set(problem) - {"kind"} - set(sig.parameters)
    if extra:
        raise ConfigError(f"problem: unknown keys {sorted(extra)} for kind {problem['kind']!r}")

    solver_raw = dict(raw.get("solver", {}))
    _check_keys(solver_raw, _SOLVER_KEYS, "solver")
    method_raw = solver_raw.pop("method", {"kind": "prox_sgd"})
    _check_keys(method_raw, _METHOD_KEYS, "solver.method")
    try:
        method = MethodConfig(**method_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver.method: {exc}") from exc

    theta = _schedule(solver_raw.pop("theta", None), "solver.theta", StepSchedule("constant", 0.5))
    eta = _schedule(solver_raw.pop("eta", None), "solver.eta", StepSchedule("inv_sqrt_epoch", 0.1))

    tracker_raw = solver_raw.pop("tracker", {"kind": "exact"})
    if isinstance(tracker_raw, str):
        tracker_raw = {"kind": tracker_raw}
    _check_keys(tracker_raw, _TRACKER_KEYS, "solver.tracker")
    dual_raw = solver_raw.pop("dual", {"kind": "regu"})
    if isinstance(dual_raw, str):
        dual_raw = {"kind": dual_raw}
    _check_keys(dual_raw, _DUAL_KEYS, "solver.dual")
    noise_raw = solver_raw.pop("noise", {"kind": "none"})
    _check_keys(noise_raw, _NOISE_KEYS, "solver.noise")
    try:
        noise = NoiseModel(**noise_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver.noise: {exc}") from exc

    try:
        solver = SolverConfig(
            method=method,
            rho=float(solver_raw.pop("rho", 0.0)),
            beta=float(solver_raw.pop("beta", 1.0)),
            theta=theta,
            eta=eta,
            tracker=tracker_raw.get("kind", "exact"),
            tau_tilde=float(tracker_raw.get("tau_tilde", 1.0)),
            dual=dual_raw.get("kind", "regu"),
            beta_tilde=float(dual_raw.get("beta_tilde", 1.0)),
            sigma=float(dual_raw.get("sigma", 2.0)),
            theta_tilde=float(dual_raw.get("theta_tilde", 1.0)),
            inner_steps=int(dual_raw.get("inner_steps", 1)),
            noise=noise,
            max_iters=int(solver_raw.pop("max_iters", 1000)),
            seed=int(solver_raw.pop("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc

    kkt_probe = raw.get("kkt_probe", 1e-3)
    return RunConfig(
        problem=dict(problem),
        solver=solver,
        output_path=str(raw.get("output_path", "out")),
        record_every=int(raw.get("record_every", 10)),
        repetitions=int(raw.get("repetitions", 1)),
        kkt_probe=None if kkt_probe is None else float(kkt_probe),
    )


def parse_config(path) -> RunConfig:
    """Load and fully validate a config file; raises ConfigError with context."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    return config_from_dict(raw)


def serialize_config(cfg: RunConfig) -> dict:
    """Canonical dict with every default filled; parsing it back round-trips."""
    s = cfg.solver
    return {
        "problem": dict(cfg.problem),
        "solver": {
            "method": {
                "kind": s.method.kind,
                "tau": s.method.tau,
                "alpha": s.method.alpha,
                "tau1": s.method.tau1,
                "tau2": s.method.tau2,
                "eps": s.method.eps,
            },
            "rho": s.rho,
            "beta": s.beta,
            "theta": {
                "kind": s.theta.kind,
                "c": s.theta.c,
                "epoch_len": s.theta.epoch_len,
                "exponent": s.theta.exponent,
            },
            "eta": {
                "kind": s.eta.kind,
                "c": s.eta.c,
                "epoch_len": s.eta.epoch_len,
                "exponent": s.eta.exponent,
            },
            "tracker": {"kind": s.tracker, "tau_tilde": s.tau_tilde},
            "dual": {
                "kind": s.dual,
                "beta_tilde": s.beta_tilde,
                "sigma": s.sigma,
                "theta_tilde": s.theta_tilde,
                "inner_steps": s.inner_steps,
            },
            "noise": {"kind": s.noise.kind, "bound": s.noise.bound, "seed": s.noise.seed},
            "max_iters": s.max_iters,
            "seed": s.seed,
        },
        "output_path": cfg.output_path,
        "record_every": cfg.record_every,
        "repetitions": cfg.repetitions,
        "kkt_probe": cfg.kkt_probe,
    }


def build_recipe(cfg: RunConfig) -> ProblemRecipe:
    params = {k: v for k, v in cfg.problem.items() if k != "kind"}
    try:
        return make_recipe(cfg.problem["kind"], **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"problem: {exc}") from exc


def run_repetition(cfg: RunConfig, recipe: ProblemRecipe, rep: int, base_seed=None) -> RunResult:
    seed = (cfg.solver.seed if base_seed is None else base_seed) + rep
    solver = replace(cfg.solver, seed=seed)
    return run(
        recipe.instance,
        solver,
        x0=recipe.start,
        record_every=cfg.record_every,
        kkt_probe=cfg.kkt_probe,
    )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def cmd_run(cfg: RunConfig, out=None, seed=None, quiet=False) -> int:
    out_dir = Path(out if out is not None else cfg.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    recipe = build_recipe(cfg)
    accuracy = recipe.metadata.get("accuracy")
    mean_prob = recipe.instance.mean if hasattr(recipe.instance, "mean") else recipe.instance
    margin = exact_penalty_margin(mean_prob, cfg.solver.beta)
    if margin is not None and not quiet:
        print(f"penalty exactness margin beta - M/nu = {margin:.4g}")
    any_aborted = False
    rows = []
    for rep in range(cfg.repetitions):
        result = run_repetition(cfg, recipe, rep, base_seed=seed)
        any_aborted = any_aborted or result.aborted
        metrics_path = out_dir / f"metrics_rep{rep:03d}.jsonl"
        with open(metrics_path, "w") as fh:
            for rec in result.records:
                fh.write(rec.to_json_line() + "\n")
        final = result.final
        rows.append(
            {
                "rep": rep,
                "seed": (cfg.solver.seed if seed is None else seed) + rep,
                "final_f": final.f_val,
                "final_feas": final.feas,
                "final_kkt_residual": final.kkt_residual,
                "initial_feas": result.records[0].feas,
                "aborted": int(result.aborted),
                "wall_time_s": result.wall_time_s,
                "final_accuracy": accuracy(result.state.x) if accuracy else None,
            }
        )
        if not quiet:
            status = "aborted" if result.aborted else "done"
            print(
                f"rep {rep}: {status}  f={final.f_val:.6g}  ||c||={final.feas:.3g}  "
                f"kkt={final.kkt_residual:.3g}"
            )
    header = [
        "rep",
        "seed",
        "final_f",
        "final_feas",
        "final_kkt_residual",
        "initial_feas",
        "aborted",
        "wall_time_s",
        "final_accuracy",
    ]
    with open(out_dir / "summary.csv", "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[k]) for k in header) + "\n")
    if not quiet:
        print(f"wrote {cfg.repetitions} metrics file(s) and summary.csv to {out_dir}")
    return 1 if any_aborted else 0


def _label(cfg: RunConfig, idx: int, seen: dict) -> str:
    base = f"{cfg.solver.method.kind}_{cfg.solver.dual}"
    if base in seen:
        seen[base] += 1
        return f"{base}_{seen[base]}"
    seen[base] = 0
    return base


def cmd_compare(configs: list, out=None, quiet=False, seed=None) -> int:
    if not configs:
        raise ConfigError("compare needs at least one config")
    first_problem = configs[0].problem
    for cfg in configs[1:]:
        if cfg.problem != first_problem:
            raise ConfigError("compare: configs must reference the same problem")
    out_dir = Path(out if out is not None else configs[0].output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    seen: dict = {}
    labels = [_label(c, i, seen) for i, c in enumerate(configs)]
    recipe = build_recipe(configs[0])
    columns = {}
    aborted = False
    for label, cfg in zip(labels, configs):
        result = run_repetition(cfg, recipe, 0, base_seed=seed)
        aborted = aborted or result.aborted
        columns[label] = {rec.k: rec for rec in result.records}
    steps = sorted(set().union(*(col.keys() for col in columns.values())))
    header = ["step"]
    for label in labels:
        header += [f"{label}_loss", f"{label}_feas", f"{label}_kkt"]
    lines = [",".join(header)]
    for k in steps:
        row = [str(k)]
        for label in labels:
            rec = columns[label].get(k)
            if rec is None:
                row += ["", "", ""]
            else:
                row += [repr(rec.f_val), repr(rec.feas), repr(rec.kkt_residual)]
        lines.append(",".join(row))
    (out_dir / "compare.csv").write_text("\n".join(lines) + "\n")
    if not quiet:
        widths = [max(len(h), 12) for h in header]
        shown = steps if len(steps) <= 12 else steps[:6] + steps[-6:]
        print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        for k in shown:
            row = [str(k)]
            for label in labels:
                rec = columns[label].get(k)
                row += (
                    [f"{rec.f_val:.5g}", f"{rec.feas:.4g}", f"{rec.kkt_residual:.4g}"]
                    if rec is not None
                    else ["", "", ""]
                )
            print("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        print(f"wrote compare.csv to {out_dir}")
    return 1 if aborted else 0


def _set_dotted(table: dict, dotted: str, value):
    keys = dotted.split(".")
    node = table
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"sweep: unknown parameter path {dotted!r}")
        node = node[key]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"sweep: unknown parameter path {dotted!r}")
    node[keys[-1]] = value


def cmd_sweep(cfg: RunConfig, parameter: str, values: list, out=None, quiet=False, seed=None) -> int:
    if not values:
        raise ConfigError("sweep: empty value list")
    out_dir = Path(out if out is not None else cfg.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    aborted = False
    for value in values:
        raw = copy.deepcopy(serialize_config(cfg))
        _set_dotted(raw, parameter, value)
        cfg_v = config_from_dict(raw)
        recipe = build_recipe(cfg_v)
        result = run_repetition(cfg_v, recipe, 0, base_seed=seed)
        aborted = aborted or result.aborted
        initial_feas = result.records[0].feas
        final = result.final
        admissible = final.feas <= 0.5 * initial_feas
        rows.append(
            {
                "value": value,
                "final_f": final.f_val,
                "final_feas": final.feas,
                "initial_feas": initial_feas,
                "admissible": int(admissible),
                "aborted": int(result.aborted),
            }
        )
    best = None
    for i, row in enumerate(rows):
        if row["admissible"] and not row["aborted"]:
            if best is None or row["final_f"] < rows[best]["final_f"]:
                best = i
    header = ["value", "final_f", "final_feas", "initial_feas", "admissible", "selected", "aborted"]
    lines = [",".join(header)]
    for i, row in enumerate(rows):
        row = dict(row, selected=int(i == best))
        lines.append(",".join(_fmt(row[k]) for k in header))
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")
    if not quiet:
        for i, row in enumerate(rows):
            mark = " <- selected" if i == best else ""
            print(
                f"{parameter}={row['value']}: f={row['final_f']:.6g} "
                f"feas={row['final_feas']:.3g} admissible={row['admissible']}{mark}"
            )
        print(f"wrote sweep.csv to {out_dir}")
    return 1 if aborted else 0


def cmd_list_problems() -> int:
    for kind in sorted(RECIPES):
        sig = inspect.signature(RECIPES[kind])
        params = ", ".join(
            f"{name}={p.default!r}" if p.default is not inspect.Parameter.empty else name
            for name, p in sig.parameters.items()
        )
        print(f"{kind}({params})")
    return 0


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sslalm", description="Single-loop stochastic Lagrangian solver experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config, write metrics and a summary")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--quiet", action="store_true")

    p_cmp = sub.add_parser("compare", help="run several configs on one problem, emit a table")
    p_cmp.add_argument("--config", action="append", required=True)
    p_cmp.add_argument("--out", default=None)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--quiet", action="store_true")

    p_swp = sub.add_parser("sweep", help="run one config across parameter values")
    p_swp.add_argument("--config", required=True)
    p_swp.add_argument("--param", required=True)
    p_swp.add_argument("--values", required=True, help="comma-separated values")
    p_swp.add_argument("--out", default=None)
    p_swp.add_argument("--seed", type=int, default=None)
    p_swp.add_argument("--quiet", action="store_true")

    sub.add_parser("list-problems", help="print the built-in problem recipes")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(parse_config(args.config), args.out, args.seed, args.quiet)
        if args.command == "compare":
            cfgs = [parse_config(p) for p in args.config]
            return cmd_compare(cfgs, args.out, args.quiet, args.seed)
        if args.command == "sweep":
            values = [_parse_value(v) for v in args.values.split(",") if v != ""]
            return cmd_sweep(
                parse_config(args.config), args.param, values, args.out, args.quiet, args.seed
            )
        if args.command == "list-problems":
            return cmd_list_problems()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
