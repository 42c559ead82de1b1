"""Command line entry point: run, compare, gen-demand and validate.

Reports go to ``--out`` or, when omitted, to ``$EVFLEET_OUT`` (default ``./runs``).
Exit codes: 0 ok, 1 runtime or I/O failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import STRATEGIES, ConfigError, load_config
from .demand import generate_demand, read_od_weights, write_demand
from .network import NetworkError, generate_grid, load_network
from .report import comparison_table, read_report, write_report
from .simulator import build_scenario, run

OUT_ENV = "EVFLEET_OUT"


def _fail(msg: str, code: int) -> int:
    print(f"evfleet: error: {msg}", file=sys.stderr)
    return code


def _one_run(job):
    cfg, seed, out, audit = job
    rep = run(cfg, seed=seed, audit=audit)
    stem = f"{cfg.strategy}_seed{seed}"
    return [str(p) for p in write_report(rep, out, stem)], rep.monetary_profit


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.strategy:
            cfg = cfg.replace(strategy=args.strategy).validate()
    except ConfigError as exc:
        return _fail(str(exc), 2)
    out = Path(args.out or os.environ.get(OUT_ENV) or "runs")
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".evfleet_write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        return _fail(f"output directory {out} is not writable ({exc.strerror})", 1)

    seeds = args.seed or [cfg.seed]
    jobs = [(cfg, s, out, args.audit) for s in seeds]
    try:
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_one_run, jobs))
        else:
            results = [_one_run(j) for j in jobs]
    except (ConfigError, NetworkError, ValueError) as exc:
        return _fail(str(exc), 2)
    for seed, (paths, profit) in zip(seeds, results):
        print(f"seed {seed}: monetary profit {profit:.2f} -> {paths[0]}")
    return 0


def cmd_compare(args) -> int:
    try:
        reports = [read_report(p) for p in args.reports]
        table = comparison_table(reports, args.labels)
    except (OSError, ValueError) as exc:
        return _fail(str(exc), 1)
    if args.out:
        Path(args.out).write_text(table)
    sys.stdout.write(table)
    return 0


def _parse_rates(values: list[str]) -> tuple[float, ...]:
    if len(values) == 1 and Path(values[0]).is_file():
        values = Path(values[0]).read_text().replace(",", " ").split()
    rates = tuple(float(x) for x in values)
    if len(rates) == 1:
        rates = rates * 24
    if len(rates) != 24:
        raise ValueError(f"expected 1 or 24 hourly rates, got {len(rates)}")
    return rates


def cmd_gen_demand(args) -> int:
    try:
        if args.grid:
            rows, cols, t = args.grid
            net = generate_grid(int(rows), int(cols), t)
        else:
            net = load_network(args.network)
        rates = _parse_rates(args.rates)
        od = read_od_weights(args.od) if args.od else None
        reqs = generate_demand(net, rates, args.horizon, args.seed, od, start_s=args.start)
    except (ValueError, NetworkError, OSError) as exc:
        return _fail(str(exc), 2)
    write_demand(args.out, reqs)
    print(f"{len(reqs)} requests -> {args.out}")
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
        sc = build_scenario(cfg)
    except (ConfigError, NetworkError, ValueError, OSError) as exc:
        return _fail(str(exc), 2)
    print(f"ok: {len(sc.network)} nodes, {sc.network.n_edges} edges, {len(sc.requests)} requests, "
          f"{len(sc.chargers)} chargers, {cfg.fleet.total_drivers} drivers, strategy {cfg.strategy}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evfleet", description="EV e-hailing market simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario for one or more seeds")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, action="append", help="repeat for several seeds")
    r.add_argument("--strategy", choices=STRATEGIES)
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./runs)")
    r.add_argument("--jobs", type=int, default=1, help="parallel processes across seeds")
    r.add_argument("--audit", action="store_true", help="check state invariants after every event")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="side-by-side table of run reports")
    c.add_argument("reports", nargs="+")
    c.add_argument("--labels", nargs="+")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("gen-demand", help="write a synthetic Poisson demand CSV")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--network")
    src.add_argument("--grid", nargs=3, type=float, metavar=("ROWS", "COLS", "EDGE_S"))
    g.add_argument("--rates", nargs="+", required=True,
                   help="requests/hour: one value, 24 values, or a file of 24")
    g.add_argument("--horizon", type=float, default=86400.0)
    g.add_argument("--start", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--od", help="CSV of origin_node,dest_node,weight")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_demand)

    v = sub.add_parser("validate", help="check a config and the files it references")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
