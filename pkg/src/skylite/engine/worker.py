"""Worker runtime: the function entrypoint that deserializes a fragment
spec, streams its input through the operator chain, materializes exactly
one output object per (fragment, partition), and reports back through the
response queue.

Workers are stateless: everything they need arrives in the payload, and
everything they produce leaves through storage or the queue. Compute time
is modeled deterministically as bytes touched divided by a configurable
per-core scan rate."""

from __future__ import annotations

import json
from typing import Optional, Union

from ..errors import (CorruptFile, FetchFailed, NotSupported, OutOfBudget,
                      RangeUnsatisfiable, RequestFailed, SchemaMismatch,
                      TypeMismatch, UnknownColumn)
from ..formats.io_handlers import IoStats, read_object_batches
from ..formats.ranges import ColumnBounds
from ..formats.schema import RecordBatch, TableSchema, concat_batches
from ..planner.fragments import (BroadcastInput, CollectOutputSpec,
                                 ExchangeInput, ExchangeOutputSpec,
                                 FragmentSpec, ObjectRef, ScanInput)
from ..planner.physical import chain_output_schema
from ..sim.clock import SimContext, US_PER_S
from ..sim.platform import FunctionSpec
from ..sim.simulator import Simulator
from .operators import (CollectWriter, DEFAULT_MEMORY_BUDGET, ExchangeWriter,
                        compile_chain)

CODE_ERRORS = (CorruptFile, SchemaMismatch, UnknownColumn, TypeMismatch,
               NotSupported, RangeUnsatisfiable, ValueError, KeyError,
               json.JSONDecodeError)
TRANSIENT_ERRORS = (FetchFailed, RequestFailed)


def response_queue(query_id: str) -> str:
    return f"resp/{query_id}"


def classify_error(exc: BaseException) -> str:
    if isinstance(exc, OutOfBudget):
        return "data_skew"
    if isinstance(exc, CODE_ERRORS):
        return "code_error"
    return "transient"


class WorkerRuntime:
    """Factory for the platform entrypoint shared by all workers of one
    simulated deployment."""

    def __init__(self, sim: Simulator,
                 function: Optional[FunctionSpec] = None):
        self.sim = sim
        self.function = function or FunctionSpec("skylite-worker")
        raw = sim.config.extra.get("exec.memory_budget_bytes")
        self.memory_budget = int(float(raw[0])) if raw \
            else DEFAULT_MEMORY_BUDGET

    # -- entrypoint --

    def entrypoint(self, payload: bytes, ctx: SimContext) -> None:
        msg = json.loads(payload.decode())
        fragments = msg["fragments"]
        if len(fragments) > 1:
            # two-level root: invoke slice peers, then run own fragment
            parent_id = _invocation_id(ctx)
            for spec in fragments[1:]:
                body = json.dumps({"fragments": [spec]}).encode()
                self.sim.platform.invoke(ctx, self.function, body,
                                         self.entrypoint,
                                         parent_id=parent_id)
        self.execute(FragmentSpec.from_json(fragments[0]), ctx)

    # -- fragment execution --

    def execute(self, spec: FragmentSpec, ctx: SimContext) -> None:
        start_us = ctx.now_us
        stats = IoStats()
        try:
            outputs, rows_in, rows_out = self._run(spec, ctx, stats)
            self._account_cpu(ctx, stats)
            body = {
                "query_id": spec.query_id,
                "pipeline_id": spec.pipeline_id,
                "fragment_id": spec.fragment_id,
                "ok": True,
                "error": None,
                "error_class": None,
                "outputs": outputs,
                "stats": {
                    "rows_in": rows_in,
                    "rows_out": rows_out,
                    "bytes_read": stats.bytes_fetched,
                    "bytes_written": stats.bytes_written,
                    "requests": stats.requests,
                    "wall_us": ctx.now_us - start_us,
                },
            }
        except Exception as exc:
            body = {
                "query_id": spec.query_id,
                "pipeline_id": spec.pipeline_id,
                "fragment_id": spec.fragment_id,
                "ok": False,
                "error": f"{type(exc).__name__}: {exc}",
                "error_class": classify_error(exc),
                "outputs": [],
                "stats": {"wall_us": ctx.now_us - start_us},
            }
        self.sim.queues.send_message(ctx, response_queue(spec.query_id),
                                     json.dumps(body).encode())

    def _run(self, spec: FragmentSpec, ctx: SimContext,
             stats: IoStats) -> tuple[list[dict], int, int]:
        input_schema = _source_schema(spec.source)
        build = None
        if spec.build is not None:
            build = self._read_all(spec.build, ctx, stats)
        writer = self._make_writer(spec, input_schema, ctx, stats)
        head = compile_chain(spec.ops, input_schema, writer, build=build,
                             memory_budget=self.memory_budget)
        rows_in = 0
        for batch in self._source_batches(spec.source, ctx, stats):
            rows_in += batch.row_count
            head.push(batch)
        head.finish()
        outputs = [o.to_json() for o in writer.outputs]
        rows_out = sum(o.rows for o in writer.outputs)
        return outputs, rows_in, rows_out

    def _source_batches(self, source: Union[ScanInput, ExchangeInput],
                        ctx: SimContext, stats: IoStats):
        store = self.sim.store
        if isinstance(source, ScanInput):
            bounds = [ColumnBounds(b["column"], b["low"], b["high"],
                                   b["low_inclusive"], b["high_inclusive"])
                      for b in source.bounds]
            for ref in source.objects:
                yield from read_object_batches(
                    ctx, store, ref.bucket, ref.key,
                    projected=list(source.projected),
                    bounds=bounds or None, stats=stats)
        else:
            for ref in source.producers:
                yield from read_object_batches(ctx, store, ref.bucket,
                                               ref.key, stats=stats)

    def _read_all(self, src: Union[BroadcastInput, ExchangeInput],
                  ctx: SimContext, stats: IoStats) -> RecordBatch:
        refs = src.objects if isinstance(src, BroadcastInput) \
            else src.producers
        batches = []
        for ref in refs:
            batches.extend(read_object_batches(ctx, self.sim.store,
                                               ref.bucket, ref.key,
                                               stats=stats))
        return concat_batches(src.schema, batches)

    def _make_writer(self, spec: FragmentSpec, input_schema: TableSchema,
                     ctx: SimContext, stats: IoStats):
        out_schema = chain_output_schema(list(spec.ops), input_schema)
        if isinstance(spec.output, ExchangeOutputSpec):
            return ExchangeWriter(out_schema, ctx, self.sim.store,
                                  spec.output.bucket, spec.output.key_prefix,
                                  spec.output.partition_count,
                                  spec.output.hash_keys,
                                  spec.output.storage_class, stats,
                                  self.memory_budget)
        return CollectWriter(out_schema, ctx, self.sim.store,
                             spec.output.bucket, spec.output.key,
                             spec.output.storage_class, stats,
                             self.memory_budget)

    def _account_cpu(self, ctx: SimContext, stats: IoStats) -> None:
        limits = self.sim.limits
        touched = stats.bytes_fetched + stats.bytes_written
        cpu_us = touched / limits.cpu_bytes_per_s * \
            limits.cpu_calibration * US_PER_S
        ctx.advance(int(round(cpu_us)))


def _source_schema(source: Union[ScanInput, ExchangeInput]) -> TableSchema:
    if isinstance(source, ScanInput):
        return source.schema.select(source.projected)
    return source.schema


def _invocation_id(ctx: SimContext) -> Optional[int]:
    # worker contexts are labeled "inv-<id>" by the platform
    if ctx.label.startswith("inv-"):
        try:
            return int(ctx.label[4:])
        except ValueError:
            return None
    return None
