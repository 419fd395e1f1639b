"""Result registry: durable map from (logical cache key, pipeline id) to the
pipeline's materialized output objects, stored in the simulated key-value
store. Entries are written after every stage; reads are gated by the
query's cache setting."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from ..sim.clock import SimContext
from ..sim.storage import KVStore


@dataclass(frozen=True)
class RegistryEntry:
    cache_key: str
    pipeline_id: int
    outputs: list[dict]  # OutputRecord dicts of every fragment
    creator_query_id: str
    created_at_us: int


def _pipeline_key(cache_key: str, pipeline_id: int) -> str:
    return f"reg/{cache_key}/p{pipeline_id}"


def _query_key(query_id: str) -> str:
    return f"query/{query_id}"


class ResultRegistry:
    def __init__(self, kv: KVStore):
        self.kv = kv

    def put_pipeline(self, ctx: SimContext, cache_key: str, pipeline_id: int,
                     outputs: list[dict], query_id: str) -> None:
        entry = {"cache_key": cache_key, "pipeline_id": pipeline_id,
                 "outputs": outputs, "creator_query_id": query_id,
                 "created_at_us": ctx.now_us}
        self.kv.put(ctx, _pipeline_key(cache_key, pipeline_id),
                    json.dumps(entry, sort_keys=True).encode())

    def get_pipeline(self, ctx: SimContext, cache_key: str,
                     pipeline_id: int) -> Optional[RegistryEntry]:
        raw = self.kv.get(ctx, _pipeline_key(cache_key, pipeline_id))
        if raw is None:
            return None
        d = json.loads(raw.decode())
        return RegistryEntry(d["cache_key"], d["pipeline_id"], d["outputs"],
                             d["creator_query_id"], d["created_at_us"])

    def put_query(self, ctx: SimContext, query_id: str, record: dict) -> None:
        self.kv.put(ctx, _query_key(query_id),
                    json.dumps(record, sort_keys=True).encode())

    def get_query(self, ctx: SimContext, query_id: str) -> Optional[dict]:
        raw = self.kv.get(ctx, _query_key(query_id))
        return json.loads(raw.decode()) if raw is not None else None

    def clear(self) -> int:
        return self.kv.delete_prefix("reg/") + self.kv.delete_prefix("query/")

    def list_entries(self) -> list[str]:
        return self.kv.scan_keys("reg/")
