"""Shared fixtures and small table-building helpers."""

from __future__ import annotations

import numpy as np
import pytest

from skylite.formats.catalog import Catalog, ManifestObject, TableManifest
from skylite.formats.io_handlers import OutputHandler
from skylite.formats.schema import TableSchema, batch_from_arrays
from skylite.sim.simulator import Simulator


@pytest.fixture
def sim() -> Simulator:
    return Simulator(seed=7)


def put_table(sim: Simulator, schema: TableSchema, arrays,
              bucket: str = "data", key: str | None = None,
              row_group_rows: int = 65536) -> ManifestObject:
    """Write one columnar object from plain arrays, return its manifest."""
    key = key or f"tbl/{schema.table}/00000.skyc"
    ctx = sim.new_context("loader")
    handler = OutputHandler(ctx, sim.store, bucket, key, schema,
                            row_group_rows=row_group_rows)
    batch = batch_from_arrays(schema, arrays)
    handler.append(batch)
    handler.finalize()
    return ManifestObject(bucket, key, sim.store.object_size(bucket, key),
                          batch.row_count)


def catalog_of(sim: Simulator, *tables) -> Catalog:
    """Build a catalog from (schema, arrays) pairs, one object per table."""
    cat = Catalog(generation={"tool": "test", "n": len(tables)})
    for schema, arrays in tables:
        obj = put_table(sim, schema, arrays)
        cat.add_table(schema, TableManifest(schema.table, [obj]))
    return cat


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)
