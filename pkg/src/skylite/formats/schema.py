"""Data types, table schemas, and in-memory column batches.

Columns live as numpy arrays: int64 for integers, scaled int64 for decimals,
days-since-epoch int64 for dates, float64, bool, and object arrays for
strings. A batch optionally carries one validity mask per nullable column
(True = value present).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from ..errors import SchemaMismatch

KINDS = ("int64", "float64", "decimal", "string", "date", "bool")

MAX_DECIMAL_PRECISION = 18
DEFAULT_BATCH_ROWS = 4096


@dataclass(frozen=True)
class DataType:
    kind: str
    precision: int = 0
    scale: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown type kind {self.kind!r}")
        if self.kind == "decimal":
            if not (0 <= self.scale <= self.precision <= MAX_DECIMAL_PRECISION):
                raise ValueError(
                    f"decimal({self.precision},{self.scale}) out of range")

    @property
    def is_numeric(self) -> bool:
        return self.kind in ("int64", "float64", "decimal")

    @property
    def is_orderable(self) -> bool:
        return self.kind != "bool"

    def __str__(self) -> str:
        if self.kind == "decimal":
            return f"decimal({self.precision},{self.scale})"
        return self.kind


INT64 = DataType("int64")
FLOAT64 = DataType("float64")
STRING = DataType("string")
DATE = DataType("date")
BOOL = DataType("bool")


def decimal(precision: int, scale: int) -> DataType:
    return DataType("decimal", precision, scale)


NUMPY_DTYPES = {
    "int64": np.int64,
    "float64": np.float64,
    "decimal": np.int64,
    "date": np.int64,
    "bool": np.bool_,
    "string": object,
}


@dataclass(frozen=True)
class Column:
    name: str
    dtype: DataType
    nullable: bool = False


@dataclass(frozen=True)
class TableSchema:
    table: str
    columns: tuple[Column, ...]

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in {self.table}")

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(name)

    def select(self, names: Sequence[str]) -> "TableSchema":
        return TableSchema(self.table, tuple(self.column(n) for n in names))

    def to_dict(self) -> dict:
        return {
            "table": self.table,
            "columns": [
                {"name": c.name, "kind": c.dtype.kind,
                 "precision": c.dtype.precision, "scale": c.dtype.scale,
                 "nullable": c.nullable}
                for c in self.columns
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TableSchema":
        cols = tuple(
            Column(c["name"],
                   DataType(c["kind"], c.get("precision", 0),
                            c.get("scale", 0)),
                   c.get("nullable", False))
            for c in d["columns"])
        return cls(d["table"], cols)


def as_column_array(values: Any, dtype: DataType) -> np.ndarray:
    np_dtype = NUMPY_DTYPES[dtype.kind]
    arr = np.asarray(values, dtype=np_dtype)
    if arr.ndim != 1:
        raise ValueError("column arrays must be one-dimensional")
    return arr


@dataclass
class RecordBatch:
    schema: TableSchema
    columns: list[np.ndarray]
    validity: list[Optional[np.ndarray]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.validity:
            self.validity = [None] * len(self.columns)
        if len(self.columns) != len(self.schema.columns):
            raise SchemaMismatch(
                f"{len(self.columns)} columns for "
                f"{len(self.schema.columns)}-column schema")
        lengths = {len(c) for c in self.columns}
        if len(self.columns) and len(lengths) > 1:
            raise SchemaMismatch(f"ragged column lengths {sorted(lengths)}")

    @property
    def row_count(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.schema.index(name)]

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(zip(self.schema.names(), self.columns))

    def slice(self, start: int, stop: int) -> "RecordBatch":
        return RecordBatch(
            self.schema,
            [c[start:stop] for c in self.columns],
            [v[start:stop] if v is not None else None for v in self.validity])

    def to_rows(self) -> list[tuple]:
        """Python-value rows (strings stay str, numerics become int/float)."""
        cols = [c.tolist() for c in self.columns]
        return list(zip(*cols)) if cols else []


def batch_from_arrays(schema: TableSchema, arrays: Sequence[Any],
                      validity: Optional[Sequence[Optional[np.ndarray]]] = None,
                      ) -> RecordBatch:
    cols = [as_column_array(a, c.dtype)
            for a, c in zip(arrays, schema.columns)]
    val = list(validity) if validity is not None else [None] * len(cols)
    return RecordBatch(schema, cols, val)


def empty_batch(schema: TableSchema) -> RecordBatch:
    return batch_from_arrays(schema, [[] for _ in schema.columns])


def concat_batches(schema: TableSchema,
                   batches: Sequence[RecordBatch]) -> RecordBatch:
    if not batches:
        return empty_batch(schema)
    cols = []
    vals = []
    for i, col in enumerate(schema.columns):
        parts = [b.columns[i] for b in batches]
        cols.append(np.concatenate(parts) if parts else
                    as_column_array([], col.dtype))
        masks = [b.validity[i] for b in batches]
        if any(m is not None for m in masks):
            full = [m if m is not None
                    else np.ones(len(p), dtype=bool)
                    for m, p in zip(masks, parts)]
            vals.append(np.concatenate(full))
        else:
            vals.append(None)
    return RecordBatch(schema, cols, vals)
