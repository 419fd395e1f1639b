"""Worker-side storage I/O: the range-fetching input handler with aggressive
straggler retriggering, and the buffering output handler.

fetch() runs a deterministic miniature schedule of the worker's concurrent
range requests: up to `parallelism` requests in flight, transfers serialized
on the function's network link, and any request outliving
max(50 ms, 3 x running median completion time) reissued; the first completed
attempt wins and duplicates are discarded (but still billed).
"""

from __future__ import annotations

import bisect
import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..errors import FetchFailed, NoSuchKey, RequestFailed
from ..sim.clock import SimContext, ms_to_us
from ..sim.storage import ObjectStore, transfer_us
from .columnar import (ColumnarFileWriter, Footer, decode_row_group,
                       iter_batches, read_footer)
from .ranges import ChunkRef, ColumnBounds, PlannedRange, RangeRequestPlan
from .schema import DEFAULT_BATCH_ROWS, RecordBatch, TableSchema

DEFAULT_FETCH_PARALLELISM = 8
DEFAULT_MAX_ATTEMPTS = 4
TIMEOUT_FLOOR_US = ms_to_us(50)
TIMEOUT_MEDIAN_FACTOR = 3


@dataclass
class IoStats:
    requests: int = 0
    bytes_fetched: int = 0
    bytes_written: int = 0

    def merge(self, other: "IoStats") -> None:
        self.requests += other.requests
        self.bytes_fetched += other.bytes_fetched
        self.bytes_written += other.bytes_written


@dataclass(order=True)
class _Attempt:
    end_us: int
    seq: int
    range_index: int = field(compare=False)
    issue_us: int = field(compare=False)
    crashed: bool = field(compare=False)
    nbytes: int = field(compare=False)
    retriggered: bool = field(compare=False, default=False)


def _median(sorted_vals: list[int]) -> Optional[int]:
    n = len(sorted_vals)
    if n == 0:
        return None
    mid = n // 2
    if n % 2:
        return sorted_vals[mid]
    return (sorted_vals[mid - 1] + sorted_vals[mid]) // 2


def fetch(ctx: SimContext, store: ObjectStore, bucket: str, key: str,
          plan: RangeRequestPlan, stats: Optional[IoStats] = None,
          parallelism: int = DEFAULT_FETCH_PARALLELISM,
          max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> dict[ChunkRef, bytes]:
    """Fetch all planned ranges of one object into per-chunk buffers."""
    try:
        storage_class = store.storage_class_of(bucket, key)
    except NoSuchKey as exc:
        raise FetchFailed(f"object vanished: {bucket}/{key}") from exc
    stats = stats if stats is not None else IoStats()

    ranges = plan.ranges
    n = len(ranges)
    base_us = ctx.now_us
    scale = ctx.time_scale

    def t_abs(rel_us: int) -> int:
        return base_us + int(round(rel_us * scale))

    pending: deque[int] = deque(range(n))
    active: list[_Attempt] = []
    seq = itertools.count()
    attempts_used = [0] * n
    inflight = [0] * n
    done = [False] * n
    payloads: list[Optional[bytes]] = [None] * n
    durations: list[int] = []  # sorted completion durations
    nic_free = 0  # relative time the function NIC frees up
    now = 0

    def issue(ri: int, at_us: int) -> None:
        nonlocal nic_free
        r = ranges[ri]
        decision = store.faults.decide("storage_request")
        base_lat = int(round(store.sample_latency_us(storage_class, "read")
                             * decision.slowdown))
        if decision.crash:
            end = at_us + base_lat
        else:
            xfer_start = max(at_us + base_lat, nic_free)
            end = xfer_start + transfer_us(r.length)
            nic_free = end
        attempts_used[ri] += 1
        inflight[ri] += 1
        heapq.heappush(active, _Attempt(end, next(seq), ri, at_us,
                                        decision.crash, r.length))

    def current_timeout() -> Optional[int]:
        med = _median(durations)
        if med is None:
            return None
        return max(TIMEOUT_FLOOR_US, TIMEOUT_MEDIAN_FACTOR * med)

    while not all(done):
        while pending and sum(inflight) < parallelism:
            issue(pending.popleft(), now)
        if not active:
            missing = [ranges[i] for i in range(n) if not done[i]]
            raise FetchFailed(
                f"{len(missing)} ranges of {bucket}/{key} exhausted "
                f"{max_attempts} attempts")

        # retrigger the earliest overdue in-flight attempt, if any fires
        # before the next completion
        timeout = current_timeout()
        next_completion = active[0].end_us
        event_time = next_completion
        overdue: Optional[_Attempt] = None
        if timeout is not None:
            for att in active:
                if (done[att.range_index] or att.retriggered
                        or attempts_used[att.range_index] >= max_attempts):
                    continue
                deadline = att.issue_us + timeout
                if deadline < event_time:
                    event_time = deadline
                    overdue = att

        if overdue is not None:
            now = event_time
            overdue.retriggered = True
            issue(overdue.range_index, now)
            continue

        att = heapq.heappop(active)
        now = max(now, att.end_us)
        ri = att.range_index
        inflight[ri] -= 1
        stats.requests += 1
        store.bill_request(t_abs(att.end_us), storage_class, "read", note=key)
        if att.crashed:
            if done[ri]:
                continue
            if attempts_used[ri] < max_attempts:
                issue(ri, now)
            elif inflight[ri] == 0:
                raise FetchFailed(
                    f"range {ranges[ri].offset}+{ranges[ri].length} of "
                    f"{bucket}/{key} exhausted {max_attempts} attempts")
            continue
        stats.bytes_fetched += att.nbytes
        store.bill_transfer(t_abs(att.end_us), storage_class, "read",
                            att.nbytes, note=key)
        if done[ri]:
            continue  # duplicate result discarded
        r = ranges[ri]
        payloads[ri] = store.read_raw(bucket, key, r.offset, r.length)
        done[ri] = True
        bisect.insort(durations, att.end_us - att.issue_us)

    ctx.advance(now)

    # slice chunk buffers out of the (possibly coalesced) ranges
    order = sorted(range(n), key=lambda i: ranges[i].offset)
    buffers: dict[ChunkRef, bytes] = {}
    for chunk, (coff, clen) in plan.chunk_extents.items():
        cend = coff + clen
        pieces = []
        for i in order:
            r = ranges[i]
            rend = r.offset + r.length
            if rend <= coff or r.offset >= cend:
                continue
            lo, hi = max(coff, r.offset), min(cend, rend)
            pieces.append(payloads[i][lo - r.offset:hi - r.offset])
        buffers[chunk] = b"".join(pieces)  # type: ignore[arg-type]
    return buffers


def read_object_batches(ctx: SimContext, store: ObjectStore, bucket: str,
                        key: str, projected: Optional[list[str]] = None,
                        bounds: Optional[list[ColumnBounds]] = None,
                        batch_rows: int = DEFAULT_BATCH_ROWS,
                        stats: Optional[IoStats] = None,
                        max_request_bytes: Optional[int] = None,
                        parallelism: int = DEFAULT_FETCH_PARALLELISM,
                        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                        ) -> Iterator[RecordBatch]:
    """Footer probe, range plan, fetch, and lazy batchwise decode of one
    stored columnar object."""
    from .ranges import plan_ranges  # local to avoid cycle at import time

    stats = stats if stats is not None else IoStats()
    size = store.object_size(bucket, key)

    def billed_read(offset: int, length: int) -> bytes:
        # footer probes retry injected request failures like the range
        # fetcher does; every attempt is billed
        for attempt in range(1, max_attempts + 1):
            stats.requests += 1
            try:
                data = store.get_object_range(ctx, bucket, key, offset,
                                              length)
            except RequestFailed:
                if attempt == max_attempts:
                    raise
                continue
            stats.bytes_fetched += length
            return data
        raise AssertionError("unreachable")

    footer = read_footer(billed_read, size)
    cols = projected if projected is not None else footer.schema.names()
    kwargs = {}
    if max_request_bytes is not None:
        kwargs["max_request_bytes"] = max_request_bytes
    plan = plan_ranges(footer, cols, bounds, **kwargs)
    buffers = fetch(ctx, store, bucket, key, plan, stats,
                    parallelism=parallelism, max_attempts=max_attempts)
    for rg in plan.row_groups:
        chunk_bytes = {name: buffers[(rg, name)] for name in cols}
        group = decode_row_group(footer, rg, chunk_bytes, cols)
        yield from iter_batches(group, batch_rows)


class OutputHandler:
    """Serializes, compresses, and buffers batches as they arrive; finalize
    writes exactly one object whose bytes are a pure function of the input."""

    def __init__(self, ctx: SimContext, store: ObjectStore, bucket: str,
                 key: str, schema: TableSchema, storage_class: str = "standard",
                 row_group_rows: int = 65536, compression: str = "zlib",
                 stats: Optional[IoStats] = None):
        self.ctx = ctx
        self.store = store
        self.bucket = bucket
        self.key = key
        self.storage_class = storage_class
        self.stats = stats if stats is not None else IoStats()
        self.rows = 0
        self._writer = ColumnarFileWriter(schema, row_group_rows, compression)

    def append(self, batch: RecordBatch) -> None:
        self._writer.append(batch)
        self.rows += batch.row_count

    def finalize(self) -> str:
        data = self._writer.finish()
        for attempt in range(1, DEFAULT_MAX_ATTEMPTS + 1):
            self.stats.requests += 1
            try:
                self.store.put_object(self.ctx, self.bucket, self.key, data,
                                      self.storage_class)
                break
            except RequestFailed:
                if attempt == DEFAULT_MAX_ATTEMPTS:
                    raise
        self.stats.bytes_written += len(data)
        return self.key
