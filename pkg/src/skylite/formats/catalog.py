"""Table catalog: schemas plus manifests of the objects backing each table."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import UnknownTable
from ..sim.storage import ObjectStore
from .schema import TableSchema


@dataclass(frozen=True)
class ManifestObject:
    bucket: str
    key: str
    file_bytes: int
    row_count: int

    def to_dict(self) -> dict:
        return {"bucket": self.bucket, "key": self.key,
                "file_bytes": self.file_bytes, "row_count": self.row_count}


@dataclass
class TableManifest:
    table: str
    objects: list[ManifestObject] = field(default_factory=list)

    @property
    def total_bytes(self) -> int:
        return sum(o.file_bytes for o in self.objects)

    @property
    def total_rows(self) -> int:
        return sum(o.row_count for o in self.objects)


@dataclass
class Catalog:
    """Maps table names to (schema, manifest). `version` changes whenever the
    underlying data changes, which keys the result cache."""

    tables: dict[str, tuple[TableSchema, TableManifest]] = field(
        default_factory=dict)
    generation: dict = field(default_factory=dict)  # datagen provenance

    def add_table(self, schema: TableSchema, manifest: TableManifest) -> None:
        self.tables[schema.table] = (schema, manifest)

    def resolve(self, table: str) -> tuple[TableSchema, TableManifest]:
        try:
            return self.tables[table]
        except KeyError:
            raise UnknownTable(table) from None

    def table_names(self) -> list[str]:
        return sorted(self.tables)

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "tables": [
                {
                    "schema": schema.to_dict(),
                    "objects": [o.to_dict() for o in manifest.objects],
                }
                for _, (schema, manifest) in sorted(self.tables.items())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Catalog":
        cat = cls(generation=d.get("generation", {}))
        for t in d["tables"]:
            schema = TableSchema.from_dict(t["schema"])
            manifest = TableManifest(
                schema.table,
                [ManifestObject(o["bucket"], o["key"], o["file_bytes"],
                                o["row_count"]) for o in t["objects"]])
            cat.add_table(schema, manifest)
        return cat

    @property
    def version(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    def table_version(self, table: str) -> str:
        schema, manifest = self.resolve(table)
        payload = json.dumps(
            {"schema": schema.to_dict(),
             "objects": [o.to_dict() for o in manifest.objects],
             "generation": self.generation},
            sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2,
                                         sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "Catalog":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def verify_objects(self, store: ObjectStore) -> list[str]:
        """Keys listed in manifests but absent from the store."""
        missing = []
        for _, (_, manifest) in sorted(self.tables.items()):
            for o in manifest.objects:
                if not store.exists(o.bucket, o.key):
                    missing.append(f"{o.bucket}/{o.key}")
        return missing
