"""Binary columnar file format with a tail footer.

Layout (little-endian throughout):

    magic "SKYC1"
    row group 0: column 0 chunk, column 1 chunk, ...
    row group 1: ...
    footer (JSON): schema + per-row-group, per-column chunk metadata
    footer_length: uint32
    magic "SKYC1"

Each chunk holds one column of one row group: an optional validity bitmap
(nullable columns only), then plain fixed-width values or length-prefixed
strings, optionally zlib-compressed as a block.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from ..errors import CorruptFile, SchemaMismatch
from .schema import (Column, DataType, DEFAULT_BATCH_ROWS, RecordBatch,
                     TableSchema, concat_batches)

MAGIC = b"SKYC1"
TRAILER_LEN = len(MAGIC) + 4 + len(MAGIC)  # leading magic not part of trailer
FOOTER_PROBE_BYTES = 64 * 1024
DEFAULT_COMPRESSION = "zlib"
ZLIB_LEVEL = 1

_FIXED = {"int64": "<i8", "float64": "<f8", "date": "<i8", "decimal": "<i8"}


def _encode_values(arr: np.ndarray, dtype: DataType) -> bytes:
    kind = dtype.kind
    if kind in _FIXED:
        return np.ascontiguousarray(arr, dtype=_FIXED[kind]).tobytes()
    if kind == "bool":
        return np.ascontiguousarray(arr, dtype=np.uint8).tobytes()
    if kind == "string":
        parts = []
        pack = struct.Struct("<I").pack
        for s in arr:
            b = s.encode("utf-8")
            parts.append(pack(len(b)))
            parts.append(b)
        return b"".join(parts)
    raise ValueError(kind)


def _decode_values(data: bytes, dtype: DataType, rows: int) -> np.ndarray:
    kind = dtype.kind
    if kind in _FIXED:
        return np.frombuffer(data, dtype=_FIXED[kind], count=rows).copy()
    if kind == "bool":
        return np.frombuffer(data, dtype=np.uint8, count=rows).astype(bool)
    if kind == "string":
        out = np.empty(rows, dtype=object)
        pos = 0
        unpack = struct.Struct("<I").unpack_from
        for i in range(rows):
            (n,) = unpack(data, pos)
            pos += 4
            out[i] = data[pos:pos + n].decode("utf-8")
            pos += n
        return out
    raise ValueError(kind)


def _stats(arr: np.ndarray, validity: Optional[np.ndarray],
           dtype: DataType):
    vals = arr if validity is None else arr[validity]
    if len(vals) == 0:
        return None, None
    if dtype.kind == "string":
        return min(vals), max(vals)
    if dtype.kind == "bool":
        return bool(vals.min()), bool(vals.max())
    if dtype.kind == "float64":
        return float(vals.min()), float(vals.max())
    return int(vals.min()), int(vals.max())


def _encode_chunk(arr: np.ndarray, validity: Optional[np.ndarray],
                  col: Column, compression: str) -> tuple[bytes, dict]:
    rows = len(arr)
    body = b""
    if col.nullable:
        mask = validity if validity is not None else np.ones(rows, dtype=bool)
        body += np.packbits(mask.astype(np.uint8)).tobytes()
    body += _encode_values(arr, col.dtype)
    raw_len = len(body)
    if compression == "zlib":
        body = zlib.compress(body, ZLIB_LEVEL)
    lo, hi = _stats(arr, validity, col.dtype)
    meta = {
        "name": col.name,
        "encoding": "varstr" if col.dtype.kind == "string" else "plain",
        "compression": compression,
        "raw_length": raw_len,
        "min": lo,
        "max": hi,
    }
    return body, meta


def decode_chunk(data: bytes, col: Column, rows: int, compression: str,
                 ) -> tuple[np.ndarray, Optional[np.ndarray]]:
    try:
        if compression == "zlib":
            data = zlib.decompress(data)
        validity = None
        if col.nullable:
            nbytes = (rows + 7) // 8
            bits = np.unpackbits(
                np.frombuffer(data[:nbytes], dtype=np.uint8))[:rows]
            validity = bits.astype(bool)
            data = data[nbytes:]
        values = _decode_values(data, col.dtype, rows)
    except (zlib.error, ValueError, struct.error, UnicodeDecodeError) as exc:
        raise CorruptFile(f"chunk decode failed for {col.name}: {exc}") from exc
    if len(values) != rows:
        raise CorruptFile(f"chunk for {col.name} decoded {len(values)} of "
                          f"{rows} rows")
    return values, validity


class ColumnarFileWriter:
    """Streaming writer: serializes and compresses row groups as batches
    arrive, assembling the single-object file at finish()."""

    def __init__(self, schema: TableSchema,
                 row_group_rows: int = 65536,
                 compression: str = DEFAULT_COMPRESSION):
        if row_group_rows < 1:
            raise ValueError("row_group_rows must be >= 1")
        if compression not in ("none", "zlib"):
            raise ValueError(f"unsupported compression {compression!r}")
        self.schema = schema
        self.row_group_rows = row_group_rows
        self.compression = compression
        self._pending: list[RecordBatch] = []
        self._pending_rows = 0
        self._chunks: list[bytes] = []
        self._row_groups: list[dict] = []
        self._data_offset = len(MAGIC)
        self._total_rows = 0
        self._finished = False

    def append(self, batch: RecordBatch) -> None:
        if batch.schema.names() != self.schema.names():
            raise SchemaMismatch(
                f"batch columns {batch.schema.names()} != "
                f"schema {self.schema.names()}")
        for got, want in zip(batch.schema.columns, self.schema.columns):
            if got.dtype != want.dtype:
                raise SchemaMismatch(
                    f"column {want.name}: {got.dtype} != {want.dtype}")
        if batch.row_count == 0:
            return
        self._pending.append(batch)
        self._pending_rows += batch.row_count
        while self._pending_rows >= self.row_group_rows:
            self._flush_group(self.row_group_rows)

    def _take_rows(self, n: int) -> RecordBatch:
        merged = concat_batches(self.schema, self._pending)
        taken = merged.slice(0, n)
        rest = merged.slice(n, merged.row_count)
        self._pending = [rest] if rest.row_count else []
        self._pending_rows = rest.row_count
        return taken

    def _flush_group(self, n: int) -> None:
        group = self._take_rows(n)
        cols_meta = []
        for i, col in enumerate(self.schema.columns):
            body, meta = _encode_chunk(group.columns[i], group.validity[i],
                                       col, self.compression)
            meta["offset"] = self._data_offset
            meta["length"] = len(body)
            self._data_offset += len(body)
            self._chunks.append(body)
            cols_meta.append(meta)
        self._row_groups.append({"rows": group.row_count,
                                 "columns": cols_meta})
        self._total_rows += group.row_count

    def finish(self) -> bytes:
        if self._finished:
            raise RuntimeError("writer already finished")
        if self._pending_rows:
            self._flush_group(self._pending_rows)
        self._finished = True
        footer = {
            "schema": self.schema.to_dict(),
            "row_groups": self._row_groups,
            "total_rows": self._total_rows,
            "version": 1,
        }
        footer_bytes = json.dumps(footer, sort_keys=True,
                                  separators=(",", ":")).encode()
        return b"".join([MAGIC, *self._chunks, footer_bytes,
                         struct.pack("<I", len(footer_bytes)), MAGIC])


def write_columnar_file(batches: Iterable[RecordBatch], schema: TableSchema,
                        row_group_rows: int = 65536,
                        compression: str = DEFAULT_COMPRESSION) -> bytes:
    writer = ColumnarFileWriter(schema, row_group_rows, compression)
    for batch in batches:
        writer.append(batch)
    return writer.finish()


@dataclass(frozen=True)
class Footer:
    schema: TableSchema
    row_groups: list[dict]
    total_rows: int

    def column_meta(self, rg: int, name: str) -> dict:
        for meta in self.row_groups[rg]["columns"]:
            if meta["name"] == name:
                return meta
        raise KeyError(name)

    @classmethod
    def from_json(cls, data: bytes) -> "Footer":
        try:
            d = json.loads(data)
            return cls(TableSchema.from_dict(d["schema"]), d["row_groups"],
                       d["total_rows"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorruptFile(f"bad footer: {exc}") from exc


RangeReader = Callable[[int, int], bytes]


def read_footer(get_range: RangeReader, file_size: int,
                probe_bytes: int = FOOTER_PROBE_BYTES) -> Footer:
    """Parse the footer with at most two range reads: a fixed tail probe,
    then the remainder of the footer if it did not fit the probe."""
    if file_size < len(MAGIC) + TRAILER_LEN:
        raise CorruptFile(f"object of {file_size} bytes is too small")
    probe_len = min(probe_bytes, file_size)
    tail = get_range(file_size - probe_len, probe_len)
    if tail[-len(MAGIC):] != MAGIC:
        raise CorruptFile("bad trailing magic")
    (footer_len,) = struct.unpack("<I", tail[-9:-5])
    footer_end = file_size - 9
    footer_start = footer_end - footer_len
    if footer_start < len(MAGIC):
        raise CorruptFile("footer length exceeds file size")
    if footer_len + 9 <= probe_len:
        footer_bytes = tail[probe_len - 9 - footer_len:probe_len - 9]
    else:
        footer_bytes = get_range(footer_start, footer_len)
    return Footer.from_json(footer_bytes)


def decode_row_group(footer: Footer, rg: int,
                     chunk_bytes: dict[str, bytes],
                     projected: list[str]) -> RecordBatch:
    schema = footer.schema.select(projected)
    rows = footer.row_groups[rg]["rows"]
    cols, vals = [], []
    for col in schema.columns:
        meta = footer.column_meta(rg, col.name)
        arr, validity = decode_chunk(chunk_bytes[col.name], col, rows,
                                     meta["compression"])
        cols.append(arr)
        vals.append(validity)
    return RecordBatch(schema, cols, vals)


def iter_batches(batch: RecordBatch,
                 batch_rows: int = DEFAULT_BATCH_ROWS) -> Iterator[RecordBatch]:
    for start in range(0, batch.row_count, batch_rows):
        yield batch.slice(start, min(start + batch_rows, batch.row_count))
    if batch.row_count == 0:
        return
