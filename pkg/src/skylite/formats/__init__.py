from .catalog import Catalog, ManifestObject, TableManifest
from .columnar import (ColumnarFileWriter, Footer, read_footer,
                       write_columnar_file)
from .io_handlers import IoStats, OutputHandler, fetch, read_object_batches
from .ranges import ColumnBounds, RangeRequestPlan, plan_ranges
from .schema import (BOOL, DATE, FLOAT64, INT64, STRING, Column, DataType,
                     RecordBatch, TableSchema, batch_from_arrays,
                     concat_batches, decimal, empty_batch)

__all__ = [
    "Catalog", "ManifestObject", "TableManifest", "ColumnarFileWriter",
    "Footer", "read_footer", "write_columnar_file", "IoStats",
    "OutputHandler", "fetch", "read_object_batches", "ColumnBounds",
    "RangeRequestPlan", "plan_ranges", "BOOL", "DATE", "FLOAT64", "INT64",
    "STRING", "Column", "DataType", "RecordBatch", "TableSchema",
    "batch_from_arrays", "concat_batches", "decimal", "empty_batch",
]
