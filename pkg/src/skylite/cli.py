"""Command line interface.

A workspace directory persists the simulated deployment (object store
contents, key-value items, and the table catalog) between invocations,
so generated data and cached query results carry across processes:

    skylite datagen --sf 0.01 --workspace ws
    skylite run --workspace ws --tpch 6
    skylite run --workspace ws --tpch 6      # served from the result cache
    skylite cache list --workspace ws
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import Optional

from . import workspace
from .bench.datagen import generate
from .bench.oracle import load_table, rows_from_batch, run_oracle
from .bench.queries import QUERIES
from .bench.reports import accrue_storage, report
from .bench.sweep import DEFAULT_QUERIES, DEFAULT_SFS, sweep
from .engine.coordinator import Coordinator, read_result
from .engine.registry import ResultRegistry
from .errors import SkyliteError
from .formats.schema import TableSchema
from .frontend.binder import bind, days_to_date
from .frontend.parser import parse
from .planner.rules import optimize
from .sim.config import load_config
from .sim.faults import FaultPlan
from .sim.simulator import Simulator

_FAULT_KEYS = {
    "straggler": "straggler_fraction",
    "slowdown": "straggler_slowdown",
    "crash": "crash_fraction",
    "scope": "scope",
    "seed": "rng_seed",
}


def parse_fault_plan(spec: str) -> FaultPlan:
    """Parse 'straggler=0.3,slowdown=8,crash=0.1,scope=both,seed=7'."""
    kwargs: dict = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        key, sep, val = part.partition("=")
        if not sep or key.strip() not in _FAULT_KEYS:
            raise SkyliteError(f"bad fault plan component {part!r}")
        field = _FAULT_KEYS[key.strip()]
        try:
            if field == "scope":
                kwargs[field] = val.strip()
            elif field == "rng_seed":
                kwargs[field] = int(val)
            else:
                kwargs[field] = float(val)
        except ValueError as exc:
            raise SkyliteError(f"bad fault plan value {part!r}") from exc
    try:
        return replace(FaultPlan(), **kwargs)
    except ValueError as exc:
        raise SkyliteError(str(exc)) from exc


def _resolve_sql(args) -> str:
    if args.tpch is not None:
        return QUERIES[args.tpch]
    if args.sql is not None:
        return args.sql
    text = sys.stdin.read() if args.query_json == "-" else \
        open(args.query_json).read()
    envelope = json.loads(text)
    if not isinstance(envelope, dict) or "query" not in envelope:
        raise SkyliteError("query JSON must be an object with a 'query' key")
    return envelope["query"]


def _render(value, dtype) -> str:
    if value is None:
        return "NULL"
    if dtype.kind == "decimal":
        scaled = int(value)
        sign = "-" if scaled < 0 else ""
        whole, frac = divmod(abs(scaled), 10 ** dtype.scale)
        return f"{sign}{whole}.{frac:0{dtype.scale}d}" if dtype.scale \
            else f"{sign}{whole}"
    if dtype.kind == "date":
        return days_to_date(value)
    if dtype.kind == "bool":
        return "true" if value else "false"
    return str(value)


def _print_rows(schema: TableSchema, rows: list[dict],
                out=sys.stdout) -> None:
    names = schema.names()
    print("\t".join(names), file=out)
    for row in rows:
        print("\t".join(_render(row[c.name], c.dtype)
                        for c in schema.columns), file=out)


def _json_rows(schema: TableSchema, rows: list[dict]) -> list[dict]:
    return [{c.name: _render(row[c.name], c.dtype) for c in schema.columns}
            for row in rows]


def _load_workspace(args):
    config = load_config(getattr(args, "config", None))
    sim, catalog = workspace.load(args.workspace, seed=args.seed,
                                  config=config)
    if catalog is None:
        raise SkyliteError(
            f"workspace {args.workspace!r} has no catalog; "
            f"run 'skylite datagen' first")
    return sim, catalog


def cmd_datagen(args) -> int:
    config = load_config(args.config)
    sim = Simulator(seed=args.seed, config=config)
    catalog = generate(sim, args.sf, seed=args.seed)
    accrue_storage(sim)
    workspace.save(args.workspace, sim, catalog)
    for name in catalog.table_names():
        _, manifest = catalog.resolve(name)
        print(f"{name}: {manifest.total_rows} rows in "
              f"{len(manifest.objects)} objects "
              f"({manifest.total_bytes / 2**20:.1f} MiB)")
    print(f"catalog version {catalog.version[:16]} -> {args.workspace}")
    return 0


def cmd_run(args) -> int:
    sim, catalog = _load_workspace(args)
    if args.fault_plan:
        sim.set_fault_plan(parse_fault_plan(args.fault_plan))
    sql = _resolve_sql(args)

    n = max(1, args.concurrency)
    coords = [Coordinator(sim, catalog, use_cache=not args.no_cache,
                          force_w=args.force_w) for _ in range(n)]
    # contexts are created up front so concurrent coordinators start at
    # the same virtual time
    ctxs = [sim.new_context(f"cli-coord-{i}") for i in range(n)]
    # continue numbering past queries recorded by earlier processes so
    # result object keys never collide across workspace sessions
    next_qn = len(sim.kv.scan_keys("query/")) + 1

    reports = []
    rows_json = None
    for _ in range(max(1, args.repeat)):
        results = []
        for coord, ctx in zip(coords, ctxs):
            results.append(coord.run(sql, query_id=f"q{next_qn:04d}",
                                     ctx=ctx))
            next_qn += 1
        for result in results:
            rep = report(sim, result)
            reports.append(rep)
            batch = read_result(sim, result, ctx=ctxs[0])
            rows = rows_from_batch(batch)
            if args.json:
                rows_json = _json_rows(result.schema, rows)
            else:
                _print_rows(result.schema, rows)
                print(f"# query {result.query_id}: {len(rows)} rows, "
                      f"{rep.latency_us / 1000:.1f} ms, "
                      f"{rep.cost_cents:.4f} cents, "
                      f"{rep.invocations} invocations, "
                      f"cache hits {rep.cache_hits}, "
                      f"retriggers {rep.retriggers}, splits {rep.splits}",
                      file=sys.stderr)
    accrue_storage(sim)
    workspace.save(args.workspace, sim, catalog)
    if args.json:
        print(json.dumps({"rows": rows_json,
                          "runs": [r.to_json() for r in reports]}, indent=2))
    return 0


def cmd_oracle(args) -> int:
    sim, catalog = _load_workspace(args)
    sql = _resolve_sql(args)
    tables = {name: load_table(sim, catalog, name)
              for name in catalog.table_names()}
    rows = run_oracle(sql, catalog, tables)
    schema = optimize(bind(parse(sql), catalog), catalog).output_schema
    if args.json:
        print(json.dumps({"rows": _json_rows(schema, rows)}, indent=2))
    else:
        _print_rows(schema, rows)
    return 0


def cmd_sweep(args) -> int:
    sfs = tuple(float(v) for v in args.sfs.split(","))
    queries = tuple(int(v) for v in args.queries.split(","))
    config = load_config(args.config)
    points = sweep(sfs, queries, seed=args.seed, config=config)
    if args.json:
        print(json.dumps({"points": [p.to_json() for p in points]},
                         indent=2))
    else:
        for p in points:
            print(f"sf {p.sf:<8g} {p.latency_us / 1000:10.1f} ms  "
                  f"{p.cost_cents:10.4f} cents  "
                  f"{p.invocations:5d} invocations")
        ratio = max(p.latency_us for p in points) / \
            max(1, min(p.latency_us for p in points))
        print(f"latency max/min ratio: {ratio:.2f}")
    return 0


def cmd_cache(args) -> int:
    sim, catalog = _load_workspace(args)
    registry = ResultRegistry(sim.kv)
    if args.action == "list":
        for key in registry.list_entries():
            print(key)
    else:
        print(f"cleared {registry.clear()} entries")
        workspace.save(args.workspace, sim, catalog)
    return 0


def _add_workspace(p, required: bool = True) -> None:
    p.add_argument("--workspace", required=required,
                   help="directory persisting the simulated deployment")


def _add_common(p) -> None:
    p.add_argument("--seed", type=int, default=0,
                   help="simulator RNG seed (default 0)")
    p.add_argument("--config", default=None,
                   help="config file (default $SKYLITE_CONFIG or built-ins)")


def _add_query_source(p) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--tpch", type=int, choices=sorted(QUERIES),
                   help="run a built-in benchmark query")
    g.add_argument("--sql", help="SQL text to run")
    g.add_argument("--query-json", metavar="FILE",
                   help="JSON file ('-' for stdin) with a 'query' key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skylite",
        description="serverless SQL query processor on a simulated cloud")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="generate benchmark tables")
    p.add_argument("--sf", type=float, required=True, help="scale factor")
    _add_workspace(p)
    _add_common(p)
    p.set_defaults(fn=cmd_datagen)

    p = sub.add_parser("run", help="run a query")
    _add_workspace(p)
    _add_query_source(p)
    _add_common(p)
    p.add_argument("--repeat", type=int, default=1,
                   help="run the query this many times in sequence")
    p.add_argument("--concurrency", type=int, default=1,
                   help="independent coordinators started together")
    p.add_argument("--no-cache", action="store_true",
                   help="skip the result cache")
    p.add_argument("--force-w", type=int, default=None,
                   help="override the sizing model's fragment count")
    p.add_argument("--fault-plan", default=None, metavar="SPEC",
                   help="e.g. straggler=0.3,slowdown=8,crash=0.1,seed=7")
    p.add_argument("--json", action="store_true",
                   help="emit rows and reports as JSON")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("oracle",
                       help="run the reference evaluator on a query")
    _add_workspace(p)
    _add_query_source(p)
    _add_common(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("sweep", help="latency sweep across scale factors")
    p.add_argument("--sfs", default=",".join(str(s) for s in DEFAULT_SFS))
    p.add_argument("--queries",
                   default=",".join(str(q) for q in DEFAULT_QUERIES))
    _add_common(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("cache", help="inspect or clear the result cache")
    p.add_argument("action", choices=["list", "clear"])
    _add_workspace(p)
    _add_common(p)
    p.set_defaults(fn=cmd_cache)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SkyliteError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
