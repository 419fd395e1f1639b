"""Range planning over a columnar footer: projection, row-group pruning,
and splitting of oversized chunks into bounded sub-ranges."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import UnknownColumn
from .columnar import Footer

DEFAULT_MAX_REQUEST_BYTES = 16 * 1024 * 1024
# adjacent chunks closer than this ride in one request; the gap bytes are
# fetched and discarded, trading transfer for round trips
DEFAULT_COALESCE_GAP_BYTES = 256 * 1024

ChunkRef = tuple[int, str]  # (row group index, column name)


@dataclass(frozen=True)
class ColumnBounds:
    """Closed/open interval constraint usable against chunk min/max stats."""
    column: str
    low: Optional[object] = None
    high: Optional[object] = None
    low_inclusive: bool = True
    high_inclusive: bool = True

    def may_match(self, lo, hi) -> bool:
        """Whether a chunk with stats [lo, hi] can contain a qualifying row.
        Missing stats always survive."""
        if lo is None or hi is None:
            return True
        if self.low is not None:
            if self.low_inclusive:
                if hi < self.low:
                    return False
            elif hi <= self.low:
                return False
        if self.high is not None:
            if self.high_inclusive:
                if lo > self.high:
                    return False
            elif lo >= self.high:
                return False
        return True


@dataclass(frozen=True)
class PlannedRange:
    offset: int
    length: int


@dataclass
class RangeRequestPlan:
    ranges: list[PlannedRange] = field(default_factory=list)
    row_groups: list[int] = field(default_factory=list)
    # absolute (offset, length) of every requested chunk; the fetcher
    # reassembles chunk buffers from whichever ranges cover them
    chunk_extents: dict[ChunkRef, tuple[int, int]] = field(
        default_factory=dict)
    max_request_bytes: int = DEFAULT_MAX_REQUEST_BYTES

    @property
    def total_bytes(self) -> int:
        return sum(r.length for r in self.ranges)


def _coalesce(segments: list[tuple[int, int]], gap_bytes: int,
              max_bytes: int) -> list[PlannedRange]:
    """Merge nearby (offset, length) spans, then split oversized ones."""
    merged: list[list[int]] = []
    for offset, length in sorted(segments):
        if merged:
            start, end = merged[-1]
            if offset - end <= gap_bytes and offset + length - start \
                    <= max_bytes:
                merged[-1][1] = max(end, offset + length)
                continue
        merged.append([offset, offset + length])
    out = []
    for start, end in merged:
        pos = start
        while pos < end:
            size = min(max_bytes, end - pos)
            out.append(PlannedRange(pos, size))
            pos += size
    return out


def plan_ranges(footer: Footer, projected_columns: list[str],
                bounds: Optional[list[ColumnBounds]] = None,
                max_request_bytes: int = DEFAULT_MAX_REQUEST_BYTES,
                coalesce_gap_bytes: int = DEFAULT_COALESCE_GAP_BYTES,
                ) -> RangeRequestPlan:
    known = set(footer.schema.names())
    for name in projected_columns:
        if name not in known:
            raise UnknownColumn(name)
    bounds = [b for b in (bounds or []) if b.column in known]

    plan = RangeRequestPlan(max_request_bytes=max_request_bytes)
    segments: list[tuple[int, int]] = []
    for rg in range(len(footer.row_groups)):
        survives = True
        for b in bounds:
            meta = footer.column_meta(rg, b.column)
            if not b.may_match(meta["min"], meta["max"]):
                survives = False
                break
        if not survives:
            continue
        plan.row_groups.append(rg)
        for name in projected_columns:
            meta = footer.column_meta(rg, name)
            plan.chunk_extents[(rg, name)] = (meta["offset"], meta["length"])
            segments.append((meta["offset"], meta["length"]))
    plan.ranges = _coalesce(segments, coalesce_gap_bytes, max_request_bytes)
    return plan
