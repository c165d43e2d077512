"""Command-line front end.

Subcommands: `simulate` (Monte Carlo over a parameter grid), `solve` (exact
values and the optimality-gap report for one instance), `sweep` (one
figure-ready CSV per sweep axis), `verify` (numeric self-check suite).

Exit codes: 0 success, 1 config/usage error (I/O problems included),
2 verification failure, 3 state-space cap exceeded.  AOI_SCHED_THREADS caps
grid-point parallelism: unset = sequential, 0 = one worker per CPU.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

from .config import (
    FORMATS,
    RR_MODES,
    ConfigError,
    GridPoint,
    SweepConfig,
    _policy_list,
    expand_q,
    grid_point_seed,
    grid_points,
    load_config,
    resolve_initial_state,
    validate_q_spec,
)
from .dp import (
    StateSpaceTooLarge,
    bound_constants,
    dump_table,
    evaluate_policy,
    solve_optimal,
)
from .model import ModelParams, format_state, norm_inf, set_fault_mode, success_probs
from .policies import DeltaPolicy, make_policy
from .simulate import compare_policies, run_experiment
from .verify import run_suite

SIM_COLUMNS = (
    "N", "d", "p", "T", "q_spec", "policy", "replications",
    "mean_total_cost", "stderr", "mean_sum_aaoi", "seed",
    "improvement_of_first_pct",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoi-sched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "Monte Carlo runs over the configured grid"),
        ("solve", "exact DP values and gap report for one instance"),
        ("sweep", "one-dimensional sweeps, one CSV per axis"),
        ("verify", "run the numeric self-check suite"),
    ):
        sp = sub.add_parser(name, help=help_text)
        _add_common_flags(sp)
        if name == "solve":
            sp.add_argument("--dump-tables", metavar="PATH",
                            help="also write the optimal value table as text")
        if name == "verify":
            sp.add_argument("--inject-fault", nargs="?", const="age-drift",
                            choices=["age-drift", "drop-event"],
                            help="negative control: corrupt the transition law "
                                 "and confirm the suite catches it")
    return parser


def _add_common_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", metavar="PATH", help="INI config file")
    sp.add_argument("--out", metavar="PATH", help="output path ('-' = stdout)")
    sp.add_argument("--seed", type=int, help="base seed (default 42)")
    sp.add_argument("--format", dest="fmt", choices=list(FORMATS))
    sp.add_argument("--no-header-timestamp", action="store_true",
                    help="suppress the generated-at header for byte-stable output")
    sp.add_argument("--policies", help="comma-separated; first is the baseline")
    sp.add_argument("--rr-mode", dest="rr_mode", choices=list(RR_MODES))
    sp.add_argument("--n-sources", type=int)
    sp.add_argument("--n-channels", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", help="uniform:<v> or explicit vector v1,v2,...")
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--replications", type=int)
    sp.add_argument("--initial-state", help='"fresh" or a g=[...];h=[...] literal')
    sp.add_argument("--state-cap", type=int)
    sp.add_argument("--p-grid", type=float, nargs="+")
    sp.add_argument("--n-grid", type=int, nargs="+")
    sp.add_argument("--d-grid", type=int, nargs="+")
    sp.add_argument("--t-grid", type=int, nargs="+")
    sp.add_argument("--q-grid", nargs="+")


def resolve_config(args: argparse.Namespace) -> SweepConfig:
    """File config (if any) with CLI flags layered on top."""
    cfg = load_config(args.config) if args.config else SweepConfig()
    if args.n_sources is not None:
        cfg.n_sources = args.n_sources
    if args.n_channels is not None:
        cfg.n_channels = args.n_channels
    if args.p is not None:
        cfg.p = args.p
    if args.q is not None:
        try:
            validate_q_spec(args.q)
        except ValueError as exc:
            raise ConfigError(f"--q {args.q!r}: {exc}") from None
        cfg.q_spec = args.q
    if args.horizon is not None:
        cfg.horizon = args.horizon
    if args.replications is not None:
        cfg.replications = args.replications
    if args.initial_state is not None:
        cfg.initial_state = args.initial_state
    if args.state_cap is not None:
        cfg.state_cap = args.state_cap
    if args.p_grid is not None:
        cfg.p_grid = tuple(args.p_grid)
    if args.n_grid is not None:
        cfg.n_grid = tuple(args.n_grid)
    if args.d_grid is not None:
        cfg.d_grid = tuple(args.d_grid)
    if args.t_grid is not None:
        cfg.t_grid = tuple(args.t_grid)
    if args.q_grid is not None:
        for spec in args.q_grid:
            try:
                validate_q_spec(spec)
            except ValueError as exc:
                raise ConfigError(f"--q-grid {spec!r}: {exc}") from None
        cfg.q_grid = tuple(args.q_grid)
    if args.policies is not None:
        try:
            cfg.policies = _policy_list(args.policies)
        except ValueError as exc:
            raise ConfigError(f"--policies {args.policies!r}: {exc}") from None
    if args.rr_mode is not None:
        cfg.rr_mode = args.rr_mode
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.fmt is not None:
        cfg.fmt = args.fmt
    if args.no_header_timestamp:
        cfg.timestamp = False
    if args.out is not None:
        cfg.out = args.out
    return cfg


def _thread_count() -> int:
    raw = os.environ.get("AOI_SCHED_THREADS")
    if raw is None:
        return 1
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(f"AOI_SCHED_THREADS={raw!r} is not an integer") from None
    if v < 0:
        raise ConfigError(f"AOI_SCHED_THREADS must be >= 0, got {v}")
    return (os.cpu_count() or 1) if v == 0 else v


def _map_jobs(fn, jobs):
    workers = _thread_count()
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))  # order-preserving


def _run_point(job: tuple) -> list[dict]:
    """Worker for one grid point; module-level so process pools can pickle it."""
    point, policy_names, rr_mode, replications, seed, init_spec, cap = job
    params = point.params()
    x0 = resolve_initial_state(init_spec, params.n_sources)
    table = None
    policies = []
    for name in policy_names:
        if name == "optimal" and table is None:
            table = solve_optimal(params, x0, cap=cap)
        policies.append(make_policy(name, params, table=table, rr_mode=rr_mode))
    if len(policies) >= 2:
        comp = compare_policies(policies, params, x0, replications, seed)
        summaries, improvements = comp.summaries, comp.improvements_vs_first
    else:
        summaries = (run_experiment(policies[0], params, x0, replications, seed),)
        improvements = (0.0,)
    rows = []
    for summary, imp in zip(summaries, improvements):
        rows.append({
            "N": point.n_sources,
            "d": point.n_channels,
            "p": point.p,
            "T": point.horizon,
            "q_spec": point.q_spec,
            "policy": summary.policy,
            "replications": replications,
            "mean_total_cost": summary.mean_total_cost,
            "stderr": summary.stderr_total_cost,
            "mean_sum_aaoi": summary.mean_sum_aaoi,
            "seed": seed,
            "improvement_of_first_pct": imp,
        })
    return rows


def _jobs_for_points(cfg: SweepConfig, points: list[GridPoint]) -> list[tuple]:
    return [
        (
            pt,
            cfg.policies,
            cfg.rr_mode,
            cfg.replications,
            grid_point_seed(cfg.base_seed, pt),
            cfg.initial_state,
            cfg.state_cap,
        )
        for pt in points
    ]


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _render_csv(cfg: SweepConfig, columns, rows, header_comment: str | None = None) -> str:
    buf = io.StringIO()
    if cfg.timestamp:
        buf.write(f"# generated {_now_iso()}\n")
    if header_comment:
        buf.write(header_comment + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt_cell(row[c]) for c in columns])
    return buf.getvalue()


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_simulate(cfg: SweepConfig) -> None:
    if not cfg.policies:
        raise ConfigError("no policies configured")
    points = grid_points(cfg)
    results = _map_jobs(_run_point, _jobs_for_points(cfg, points))
    rows = [row for point_rows in results for row in point_rows]
    if cfg.fmt == "json":
        obj: dict = {}
        if cfg.timestamp:
            obj["generated"] = _now_iso()
        obj["rows"] = rows
        _write_text(cfg.out, json.dumps(obj, indent=2) + "\n")
    else:
        _write_text(cfg.out, _render_csv(cfg, SIM_COLUMNS, rows))


def cmd_solve(cfg: SweepConfig, dump_path: str | None = None) -> None:
    if not cfg.policies:
        raise ConfigError("no policies configured")
    params = ModelParams(
        cfg.n_sources,
        cfg.n_channels,
        cfg.base_p,
        expand_q(cfg.q_spec, cfg.n_sources),
        cfg.horizon,
    )
    x0 = resolve_initial_state(cfg.initial_state, params.n_sources)
    opt = solve_optimal(params, x0, cap=cfg.state_cap)
    v_star = opt.root_value()
    policy_values = {}
    for name in cfg.policies:
        pol = make_policy(name, params, table=opt, rr_mode=cfg.rr_mode)
        policy_values[name] = evaluate_policy(pol, params, x0, cap=cfg.state_cap).root_value()
    v_delta = evaluate_policy(
        DeltaPolicy(params.n_channels), params, x0, cap=cfg.state_cap
    ).root_value()
    diff = v_delta - v_star
    pd = success_probs(params, 0).batch
    p_pd = params.p * pd
    z = diff / p_pd if params.p > 0.0 else None
    if params.horizon >= 3:
        bc = bound_constants(params.horizon - 1, params.p, params.n_channels)
        bound = p_pd * (bc.d1 * norm_inf(x0) + bc.d2)
        constants = {"k": bc.k, "c1": bc.c1, "c2": bc.c2, "d1": bc.d1, "d2": bc.d2}
    else:
        bound, constants = 0.0, None
    report: dict = {}
    if cfg.timestamp:
        report["generated"] = _now_iso()
    report.update({
        "N": params.n_sources,
        "d": params.n_channels,
        "p": params.p,
        "T": params.horizon,
        "q": list(params.q),
        "x0": format_state(x0),
        "v_star": v_star,
        "v_delta": v_delta,
        "policy_values": policy_values,
        "diff": diff,
        "p_pd": p_pd,
        "z": z,
        "bound": bound,
        "bound_holds": bool(diff <= bound + 1e-9),
        "bound_constants": constants,
        "states_total": sum(len(stage) for stage in opt.stages),
    })
    if dump_path:
        dump_table(opt, dump_path)
    _write_text(cfg.out, json.dumps(report, indent=2) + "\n")


def cmd_sweep(cfg: SweepConfig) -> None:
    if not cfg.policies:
        raise ConfigError("no policies configured")
    if cfg.fmt == "json":
        raise ConfigError("sweep emits figure-ready CSV only; drop --format json")
    if cfg.out is None or cfg.out == "-":
        raise ConfigError("sweep derives one file per axis; give a real --out path")
    axes: list[tuple[str, list]] = []
    if cfg.p_grid:
        axes.append(("p", list(cfg.p_grid)))
    if cfg.n_grid:
        axes.append(("N", list(cfg.n_grid)))
    if cfg.d_grid:
        axes.append(("d", list(cfg.d_grid)))
    if cfg.t_grid:
        axes.append(("T", list(cfg.t_grid)))
    if cfg.q_grid:
        axes.append(("q_spec", list(cfg.q_grid)))
    if not axes:
        raise ConfigError("sweep needs at least one grid ([sweep] section or --*-grid)")
    base = GridPoint(cfg.n_sources, cfg.n_channels, cfg.base_p, cfg.horizon, cfg.q_spec)
    root, ext = os.path.splitext(cfg.out)
    for axis, values in axes:
        points = [_point_on_axis(base, axis, v) for v in values]
        results = _map_jobs(_run_point, _jobs_for_points(cfg, points))
        first = cfg.policies[0]
        columns = [axis]
        for name in cfg.policies:
            columns += [f"mean_total_cost_{name}", f"stderr_{name}", f"mean_sum_aaoi_{name}"]
        for name in cfg.policies[1:]:
            columns.append(f"improvement_of_{first}_over_{name}_pct")
        rows = []
        for value, point_rows in zip(values, results):
            row: dict = {axis: value}
            by_policy = {r["policy"]: r for r in point_rows}
            for name in cfg.policies:
                r = by_policy[name]
                row[f"mean_total_cost_{name}"] = r["mean_total_cost"]
                row[f"stderr_{name}"] = r["stderr"]
                row[f"mean_sum_aaoi_{name}"] = r["mean_sum_aaoi"]
            for name in cfg.policies[1:]:
                row[f"improvement_of_{first}_over_{name}_pct"] = (
                    by_policy[name]["improvement_of_first_pct"]
                )
            rows.append(row)
        axis_label = "q" if axis == "q_spec" else axis
        held = {
            "N": str(base.n_sources),
            "d": str(base.n_channels),
            "p": f"{base.p:.6g}",
            "T": str(base.horizon),
            "q": base.q_spec,
        }
        held.pop(axis_label)
        fixed = (
            "# fixed: "
            + " ".join(f"{k}={v}" for k, v in held.items())
            + f" replications={cfg.replications} base_seed={cfg.base_seed}"
        )
        _write_text(f"{root}_{axis_label}{ext or '.csv'}",
                    _render_csv(cfg, columns, rows, header_comment=fixed))


def _point_on_axis(base: GridPoint, axis: str, value) -> GridPoint:
    if axis == "p":
        return GridPoint(base.n_sources, base.n_channels, value, base.horizon, base.q_spec)
    if axis == "N":
        return GridPoint(value, base.n_channels, base.p, base.horizon, base.q_spec)
    if axis == "d":
        return GridPoint(base.n_sources, value, base.p, base.horizon, base.q_spec)
    if axis == "T":
        return GridPoint(base.n_sources, base.n_channels, base.p, value, base.q_spec)
    if axis == "q_spec":
        return GridPoint(base.n_sources, base.n_channels, base.p, base.horizon, value)
    raise ValueError(f"unknown axis {axis}")


def cmd_verify(cfg: SweepConfig, inject_fault: str | None) -> int:
    if cfg.p_grid:
        scaling_grid = tuple(cfg.p_grid)
    elif cfg.p is not None:
        scaling_grid = (cfg.p,)
    else:
        scaling_grid = (0.02, 0.04, 0.08, 0.16)
    try:
        if inject_fault:
            set_fault_mode(inject_fault)
        checks = run_suite(seed=cfg.base_seed, scaling_p_grid=scaling_grid)
    finally:
        set_fault_mode(None)
    report: dict = {}
    if cfg.timestamp:
        report["generated"] = _now_iso()
    report["fault_mode"] = inject_fault
    report["checks"] = [
        {"name": c.name, "status": c.status, "detail": c.detail, "measured": c.measured}
        for c in checks
    ]
    failed = [c.name for c in checks if c.failed]
    report["failed"] = failed
    _write_text(cfg.out, json.dumps(report, indent=2) + "\n")
    return 2 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "solve":
            cmd_solve(cfg, args.dump_tables)
        elif args.command == "sweep":
            cmd_sweep(cfg)
        elif args.command == "verify":
            return cmd_verify(cfg, args.inject_fault)
        return 0
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    except StateSpaceTooLarge as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
