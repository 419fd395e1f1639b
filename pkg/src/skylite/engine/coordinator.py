"""Stage-by-stage query coordinator.

The coordinator is a long-lived agent (billed by wall time, not an
invocation of its own). Per pipeline it consults the result registry,
fans fragments out directly or through a two-level invocation tree,
polls the response queue, retriggers stragglers, splits skewed scan
fragments, and registers the stage's outputs for later reuse."""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
import statistics
from dataclasses import dataclass, field
from typing import Optional

from ..errors import QueryAborted
from ..formats.catalog import Catalog
from ..formats.io_handlers import read_object_batches
from ..formats.schema import RecordBatch, TableSchema, concat_batches
from ..frontend.binder import bind
from ..frontend.parser import parse
from ..planner.cache_key import cache_key as compute_cache_key
from ..planner.fragments import (BroadcastInput, ExchangeInput, FragmentSpec,
                                 ObjectRef, ScanInput, exchange_fragments,
                                 scan_fragments, split_scan_fragment)
from ..planner.physical import (PhysicalQueryPlan, PipelinePlan, ScanSource,
                                plan_physical)
from ..planner.rules import optimize
from ..planner.sizing import SizingModel
from ..sim.clock import SimContext, ms_to_us, s_to_us
from ..sim.simulator import Simulator
from .registry import ResultRegistry
from .worker import WorkerRuntime, response_queue

POLL_INTERVAL_MS = 100
# a fragment is overdue past max(floor, factor x median round trip); the
# floor clears the worst-case cold start plus dispatch chain so fault-free
# stages never duplicate work, while an injected 8x slowdown still trips
STRAGGLER_FLOOR_MS = 1000
STRAGGLER_FACTOR = 3.0
INITIAL_TIMEOUT_MS = 10_000
# pre-response timeout allowance per assigned input object: a fragment
# over n objects legitimately spends n serial footer probes and reads
PER_OBJECT_TIMEOUT_MS = 200
STAGE_TIMEOUT_S = 600
MAX_ATTEMPTS = 3
SKEW_BYTES_FACTOR = 4.0
COORDINATOR_MEMORY_MIB = 2048
RECEIVE_BATCH = 64


@dataclass
class RunResult:
    query_id: str
    cache_key: str
    schema: TableSchema
    outputs: list[dict]          # sink pipeline's output object records
    started_us: int
    finished_us: int
    invocations: int
    cache_hits: list[int] = field(default_factory=list)  # pipeline ids
    retriggers: int = 0
    splits: int = 0
    ledger_mark: int = 0    # ledger index window [mark, end) of this run
    ledger_end: int = 0

    @property
    def latency_us(self) -> int:
        return self.finished_us - self.started_us


@dataclass
class _FragState:
    spec: FragmentSpec
    assigned_bytes: int
    attempts: int = 0
    submit_t_us: int = 0
    done: bool = False


class Coordinator:
    def __init__(self, sim: Simulator, catalog: Catalog,
                 bucket: str = "skylite-tmp", use_cache: bool = True,
                 sizing: Optional[SizingModel] = None,
                 force_w: Optional[int] = None,
                 runtime: Optional[WorkerRuntime] = None,
                 two_level_threshold: Optional[int] = None,
                 abort_after_pipeline: Optional[int] = None):
        self.sim = sim
        self.catalog = catalog
        self.bucket = bucket
        self.use_cache = use_cache
        self.sizing = sizing if sizing is not None else SizingModel()
        self.force_w = force_w
        self.runtime = runtime or WorkerRuntime(sim)
        self.registry = ResultRegistry(sim.kv)
        self.two_level_threshold = two_level_threshold \
            if two_level_threshold is not None \
            else self.sizing.two_level_threshold
        self.abort_after_pipeline = abort_after_pipeline
        self._qseq = itertools.count(1)

    # -- public API --

    def run(self, sql: str, query_id: Optional[str] = None,
            ctx: Optional[SimContext] = None,
            read_cache: Optional[bool] = None) -> RunResult:
        if query_id is None:
            query_id = f"q{next(self._qseq):04d}"
        if ctx is None:
            ctx = self.sim.new_context(f"coord-{query_id}")
        if read_cache is None:
            read_cache = self.use_cache

        # compile before any billable work: bad SQL costs nothing
        pqp, key = self._compile(sql)

        mark = self.sim.ledger.mark()
        log_mark = len(self.sim.log)
        t0 = ctx.now_us
        self.registry.put_query(ctx, query_id,
                                {"sql": sql, "cache_key": key})
        self.sim.log.record(t0, "query_start", query_id=query_id,
                            cache_key=key)

        result = RunResult(query_id, key, self._sink_schema(pqp), [],
                           t0, t0, 0, ledger_mark=mark)
        outputs_by_pipeline: dict[int, list[dict]] = {}
        status = "finished"
        try:
            for pipeline in pqp.pipelines:
                hit = self._cached_outputs(ctx, key, pipeline.id) \
                    if read_cache else None
                if hit is not None:
                    outputs_by_pipeline[pipeline.id] = hit
                    result.cache_hits.append(pipeline.id)
                    self.sim.log.record(ctx.now_us, "pipeline",
                                        query_id=query_id,
                                        pipeline=pipeline.id,
                                        status="cache_hit")
                else:
                    outs = self._run_stage(ctx, query_id, pipeline,
                                           outputs_by_pipeline, result)
                    outputs_by_pipeline[pipeline.id] = outs
                    self.registry.put_pipeline(ctx, key, pipeline.id, outs,
                                               query_id)
                    self.sim.log.record(ctx.now_us, "pipeline",
                                        query_id=query_id,
                                        pipeline=pipeline.id,
                                        status="executed")
                if self.abort_after_pipeline == pipeline.id:
                    raise QueryAborted(
                        f"aborted after pipeline {pipeline.id}")
            result.outputs = outputs_by_pipeline[pqp.sink]
        except BaseException:
            status = "aborted"
            raise
        finally:
            result.finished_us = ctx.now_us
            self.sim.platform.bill_compute(
                ctx.now_us, COORDINATOR_MEMORY_MIB, ctx.now_us - t0,
                note=f"coordinator:{query_id}")
            self.sim.clock.observe(ctx.now_us)
            result.ledger_end = self.sim.ledger.mark()
            result.invocations = sum(
                1 for ev in list(self.sim.log)[log_mark:]
                if ev.kind == "invocation")
            self.sim.log.record(ctx.now_us, "query_end", query_id=query_id,
                                status=status,
                                latency_us=ctx.now_us - t0)
        return result

    def resume(self, query_id: str,
               ctx: Optional[SimContext] = None) -> RunResult:
        """Re-drive an interrupted query; finished stages are picked up
        from the registry instead of being re-invoked."""
        probe = ctx or self.sim.new_context(f"coord-{query_id}")
        record = self.registry.get_query(probe, query_id)
        if record is None:
            raise QueryAborted(f"no record of query {query_id!r}")
        return self.run(record["sql"], query_id=query_id, ctx=probe,
                        read_cache=True)

    # -- compilation --

    def _compile(self, sql: str) -> tuple[PhysicalQueryPlan, str]:
        plan = optimize(bind(parse(sql), self.catalog), self.catalog)
        key = compute_cache_key(plan, self.catalog)
        pqp = plan_physical(plan, self.catalog, self.sizing, self.force_w)
        return pqp, key

    def _sink_schema(self, pqp: PhysicalQueryPlan) -> TableSchema:
        return pqp.pipeline(pqp.sink).output_schema

    # -- cache --

    def _cached_outputs(self, ctx: SimContext, key: str,
                        pipeline_id: int) -> Optional[list[dict]]:
        entry = self.registry.get_pipeline(ctx, key, pipeline_id)
        if entry is None:
            return None
        for o in entry.outputs:
            if not self.sim.store.exists(o["bucket"], o["key"]):
                return None
        return entry.outputs

    # -- stage execution --

    def _run_stage(self, ctx: SimContext, query_id: str,
                   pipeline: PipelinePlan,
                   outputs_by_pipeline: dict[int, list[dict]],
                   result: RunResult) -> list[dict]:
        specs = self._stage_fragments(pipeline, query_id,
                                      outputs_by_pipeline)
        frags = {s.fragment_id: _FragState(s, b) for s, b in specs}
        sizes = [f.assigned_bytes for f in frags.values()]
        median_bytes = statistics.median(sizes) if sizes else 0

        queue = response_queue(query_id)
        stage_start = ctx.now_us
        rtts: list[int] = []  # submit-to-receive round trips
        outputs: list[dict] = []
        self._submit_stage(ctx, [f.spec for f in frags.values()], frags)

        poll_us = ms_to_us(POLL_INTERVAL_MS)
        deadline = stage_start + s_to_us(STAGE_TIMEOUT_S)
        while any(not f.done for f in frags.values()):
            if ctx.now_us > deadline:
                raise QueryAborted(
                    f"stage p{pipeline.id} exceeded {STAGE_TIMEOUT_S}s")
            # drain everything already visible before judging stragglers,
            # or queued-but-unread responses look like missing workers
            while True:
                msgs = self.sim.queues.receive_messages(ctx, queue,
                                                        RECEIVE_BATCH)
                for msg in msgs:
                    self._handle_response(ctx,
                                          json.loads(msg.body.decode()),
                                          pipeline, frags, rtts, outputs,
                                          median_bytes, result)
                if len(msgs) < RECEIVE_BATCH:
                    break
            self._retrigger_overdue(ctx, pipeline, frags, rtts,
                                    median_bytes, result)
            if any(not f.done for f in frags.values()):
                ctx.advance(poll_us)
        outputs.sort(key=lambda o: o["key"])
        return outputs

    def _stage_fragments(self, pipeline: PipelinePlan, query_id: str,
                         outputs_by_pipeline: dict[int, list[dict]],
                         ) -> list[tuple[FragmentSpec, int]]:
        broadcast, build_keys = self._build_input(pipeline,
                                                  outputs_by_pipeline)
        if isinstance(pipeline.source, ScanSource):
            _, manifest = self.catalog.resolve(pipeline.source.table)
            return scan_fragments(pipeline, manifest, query_id, self.bucket,
                                  build=broadcast)
        producer_keys = _group_partitions(
            outputs_by_pipeline[pipeline.source.producer])
        specs = exchange_fragments(pipeline, query_id, self.bucket,
                                   producer_keys, build_keys)
        if broadcast is not None:
            specs = [dataclasses.replace(s, build=broadcast) for s in specs]
        return [(s, 0) for s in specs]

    def _build_input(self, pipeline: PipelinePlan,
                     outputs_by_pipeline: dict[int, list[dict]],
                     ) -> tuple[Optional[BroadcastInput],
                                Optional[dict[int, list[ObjectRef]]]]:
        b = pipeline.build
        if b is None:
            return None, None
        produced = outputs_by_pipeline[b.producer]
        if b.kind == "broadcast":
            refs = tuple(ObjectRef(o["bucket"], o["key"])
                         for o in sorted(produced, key=lambda o: o["key"]))
            return BroadcastInput(refs, b.schema), None
        return None, _group_partitions(produced)

    # -- submission --

    def _submit_stage(self, ctx: SimContext, specs: list[FragmentSpec],
                      frags: dict[str, _FragState]) -> None:
        if len(specs) > self.two_level_threshold:
            roots = math.ceil(math.sqrt(len(specs)))
            for chunk in _near_equal_slices(specs, roots):
                self._invoke(ctx, chunk)
                for spec in chunk:
                    self._mark_submitted(ctx, frags[spec.fragment_id])
        else:
            for spec in specs:
                self._invoke(ctx, [spec])
                self._mark_submitted(ctx, frags[spec.fragment_id])

    def _invoke(self, ctx: SimContext, specs: list[FragmentSpec]) -> None:
        payload = json.dumps(
            {"fragments": [s.to_json() for s in specs]}).encode()
        self.sim.platform.invoke(ctx, self.runtime.function, payload,
                                 self.runtime.entrypoint)

    def _mark_submitted(self, ctx: SimContext, frag: _FragState) -> None:
        frag.attempts += 1
        frag.submit_t_us = ctx.now_us

    def _resubmit(self, ctx: SimContext, frag: _FragState, reason: str,
                  result: RunResult, count_attempt: bool = True) -> None:
        if count_attempt and frag.attempts >= MAX_ATTEMPTS:
            raise QueryAborted(
                f"fragment {frag.spec.fragment_id} failed after "
                f"{frag.attempts} attempts ({reason})")
        self._invoke(ctx, [frag.spec])
        if count_attempt:
            frag.attempts += 1
        frag.submit_t_us = ctx.now_us
        result.retriggers += 1
        self.sim.log.record(ctx.now_us, "retrigger",
                            query_id=frag.spec.query_id,
                            pipeline=frag.spec.pipeline_id,
                            fragment=frag.spec.fragment_id,
                            attempt=frag.attempts, reason=reason)

    def _split(self, ctx: SimContext, frag: _FragState,
               frags: dict[str, _FragState], result: RunResult) -> None:
        halves = split_scan_fragment(frag.spec, self.bucket)
        frag.done = True
        del frags[frag.spec.fragment_id]
        share = frag.assigned_bytes // 2
        for spec in halves:
            child = _FragState(spec, share)
            frags[spec.fragment_id] = child
            self._invoke(ctx, [spec])
            self._mark_submitted(ctx, child)
        result.splits += 1
        self.sim.log.record(ctx.now_us, "split_fragment",
                            query_id=frag.spec.query_id,
                            pipeline=frag.spec.pipeline_id,
                            fragment=frag.spec.fragment_id)

    # -- response and straggler handling --

    def _handle_response(self, ctx: SimContext, body: dict,
                         pipeline: PipelinePlan,
                         frags: dict[str, _FragState], rtts: list[int],
                         outputs: list[dict], median_bytes: float,
                         result: RunResult) -> None:
        fid = body["fragment_id"]
        if body["pipeline_id"] != pipeline.id:
            return  # stale message from an earlier stage
        frag = frags.get(fid)
        if frag is None or frag.done:
            return  # duplicate of an already-satisfied fragment
        if body["ok"]:
            frag.done = True
            rtts.append(ctx.now_us - frag.submit_t_us)
            outputs.extend(body["outputs"])
            return
        if body["error_class"] == "code_error":
            raise QueryAborted(
                f"fragment {fid} hit a permanent error: {body['error']}")
        if self._skewed(frag, body["error_class"], median_bytes):
            self._split(ctx, frag, frags, result)
        else:
            self._resubmit(ctx, frag, body["error_class"], result)

    def _retrigger_overdue(self, ctx: SimContext, pipeline: PipelinePlan,
                           frags: dict[str, _FragState], rtts: list[int],
                           median_bytes: float, result: RunResult) -> None:
        # the yardstick is the full submit-to-receive round trip, so
        # dispatch, cold start, and queue dwell are all calibrated away
        median_rtt = statistics.median(rtts) if rtts else None
        for frag in list(frags.values()):
            if median_rtt is not None:
                threshold = max(ms_to_us(STRAGGLER_FLOOR_MS),
                                int(STRAGGLER_FACTOR * median_rtt))
            else:
                threshold = ms_to_us(
                    INITIAL_TIMEOUT_MS
                    + PER_OBJECT_TIMEOUT_MS * _input_objects(frag.spec))
            if frag.done or ctx.now_us - frag.submit_t_us <= threshold:
                continue
            if self._skewed(frag, "overdue", median_bytes):
                self._split(ctx, frag, frags, result)
            else:
                # duplicates are idempotent: first response wins, the
                # loser's byte-identical outputs simply overwrite
                self._resubmit(ctx, frag, "straggler", result,
                               count_attempt=False)

    def _skewed(self, frag: _FragState, error_class: str,
                median_bytes: float) -> bool:
        src = frag.spec.source
        if not isinstance(src, ScanInput) or len(src.objects) < 2:
            return False
        if error_class == "data_skew":
            return True
        return median_bytes > 0 and \
            frag.assigned_bytes > SKEW_BYTES_FACTOR * median_bytes


def _input_objects(spec: FragmentSpec) -> int:
    src = spec.source
    if isinstance(src, ScanInput):
        n = len(src.objects)
    elif isinstance(src, ExchangeInput):
        n = len(src.producers)
    else:
        n = 1
    if spec.build is not None:
        n += len(spec.build.objects)
    return n


def _group_partitions(outputs: list[dict]) -> dict[int, list[ObjectRef]]:
    """Partition index -> that partition's objects across all producers."""
    grouped: dict[int, list[ObjectRef]] = {}
    for o in sorted(outputs, key=lambda o: o["key"]):
        grouped.setdefault(o["partition"],
                           []).append(ObjectRef(o["bucket"], o["key"]))
    return grouped


def _near_equal_slices(items: list, n: int) -> list[list]:
    base, rem = divmod(len(items), n)
    out = []
    i = 0
    for s in range(n):
        size = base + (1 if s < rem else 0)
        if size:
            out.append(items[i:i + size])
        i += size
    return out


def read_result(sim: Simulator, result: RunResult,
                ctx: Optional[SimContext] = None) -> RecordBatch:
    """Materialize a run's sink objects as one record batch."""
    if ctx is None:
        ctx = SimContext(now_us=result.finished_us, label="driver")
    batches = []
    for o in result.outputs:
        batches.extend(read_object_batches(ctx, sim.store, o["bucket"],
                                           o["key"]))
    return concat_batches(result.schema, batches)
