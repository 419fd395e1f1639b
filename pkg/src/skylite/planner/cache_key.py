"""Result cache key: content hash of the canonicalized logically-optimized
plan plus the manifest versions of every scanned table. Physical choices
(worker counts, partitioning, operator modes) never influence the key."""

from __future__ import annotations

import hashlib
import json

from ..formats.catalog import Catalog
from ..frontend.logical import (BLogical, LAggregate, LCrossJoin, LFilter,
                                LJoin, LLimit, LogicalPlan, LProject, LScan,
                                LSort, expr_to_json, plan_tables)


def _canon_expr(d: dict) -> dict:
    """Sort commutative conjunct/disjunct lists by serialized form."""
    if not isinstance(d, dict):
        return d
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out[k] = _canon_expr(v)
        elif isinstance(v, list):
            out[k] = [_canon_expr(i) if isinstance(i, (dict, list)) else i
                      for i in v]
        else:
            out[k] = v
    if out.get("node") == "logical":
        out["args"] = sorted(out["args"],
                             key=lambda a: json.dumps(a, sort_keys=True))
    return out


def _canon_plan(plan: LogicalPlan) -> dict:
    if isinstance(plan, LScan):
        return {"node": "scan", "table": plan.table,
                "projected": sorted(plan.projected)}
    if isinstance(plan, LFilter):
        conjuncts = [_canon_expr(expr_to_json(plan.predicate))]
        if conjuncts[0].get("node") == "logical" and \
                conjuncts[0]["op"] == "and":
            conjuncts = conjuncts[0]["args"]
        conjuncts = sorted(conjuncts,
                           key=lambda c: json.dumps(c, sort_keys=True))
        return {"node": "filter", "child": _canon_plan(plan.child),
                "conjuncts": conjuncts}
    if isinstance(plan, LProject):
        return {"node": "project", "child": _canon_plan(plan.child),
                "exprs": [_canon_expr(expr_to_json(e)) for e in plan.exprs],
                "names": list(plan.names)}
    if isinstance(plan, LAggregate):
        return {"node": "aggregate", "child": _canon_plan(plan.child),
                "keys": [k.name for k in plan.keys],
                "aggs": [{"func": a.func, "alias": a.alias,
                          "arg": _canon_expr(expr_to_json(a.arg))
                                 if a.arg is not None else None}
                         for a in plan.aggs]}
    if isinstance(plan, LJoin):
        pairs = sorted(zip(plan.left_keys, plan.right_keys))
        return {"node": "join",
                "left": _canon_plan(plan.left),
                "right": _canon_plan(plan.right),
                "keys": [list(p) for p in pairs],
                "residual": _canon_expr(expr_to_json(plan.residual))
                            if plan.residual is not None else None}
    if isinstance(plan, LCrossJoin):
        return {"node": "cross", "left": _canon_plan(plan.left),
                "right": _canon_plan(plan.right)}
    if isinstance(plan, LSort):
        return {"node": "sort", "child": _canon_plan(plan.child),
                "keys": [[c, asc] for c, asc in plan.keys]}
    if isinstance(plan, LLimit):
        return {"node": "limit", "child": _canon_plan(plan.child),
                "limit": plan.limit}
    raise TypeError(type(plan).__name__)


def cache_key(plan: LogicalPlan, catalog: Catalog) -> str:
    payload = {
        "plan": _canon_plan(plan),
        "manifests": {t: catalog.table_version(t)
                      for t in sorted(set(plan_tables(plan)))},
    }
    blob = json.dumps(payload, sort_keys=True,
                      separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
