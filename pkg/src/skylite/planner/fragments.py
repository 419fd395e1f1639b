"""Fragment specs: the JSON worker request format, plus input assignment
(greedy largest-first bin packing of table objects over W fragments and
partition assignment for exchange consumers)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

from ..formats.catalog import ManifestObject, TableManifest
from ..formats.schema import TableSchema
from .physical import (BuildInput, CollectOutput, ExchangeOutput,
                       ExchangeSource, PhysOp, PipelinePlan, ScanSource,
                       op_from_json, op_to_json)


@dataclass(frozen=True)
class ObjectRef:
    bucket: str
    key: str

    def to_json(self) -> list:
        return [self.bucket, self.key]


@dataclass(frozen=True)
class ScanInput:
    table: str
    schema: TableSchema
    projected: tuple[str, ...]
    bounds: tuple[dict, ...]
    objects: tuple[ObjectRef, ...]


@dataclass(frozen=True)
class ExchangeInput:
    partition: int
    producers: tuple[ObjectRef, ...]  # this partition's objects, all producers
    schema: TableSchema


@dataclass(frozen=True)
class BroadcastInput:
    objects: tuple[ObjectRef, ...]
    schema: TableSchema


@dataclass(frozen=True)
class ExchangeOutputSpec:
    bucket: str
    key_prefix: str  # final key: {prefix}/part{partition}
    partition_count: int
    hash_keys: tuple[str, ...]
    storage_class: str


@dataclass(frozen=True)
class CollectOutputSpec:
    bucket: str
    key: str
    storage_class: str


@dataclass(frozen=True)
class FragmentSpec:
    query_id: str
    pipeline_id: int
    fragment_id: str
    source: Union[ScanInput, ExchangeInput]
    ops: tuple[PhysOp, ...]
    output: Union[ExchangeOutputSpec, CollectOutputSpec]
    build: Optional[Union[BroadcastInput, ExchangeInput]] = None

    def to_json(self) -> dict:
        d = {
            "query_id": self.query_id,
            "pipeline_id": self.pipeline_id,
            "fragment_id": self.fragment_id,
            "source": _input_to_json(self.source),
            "ops": [op_to_json(o) for o in self.ops],
            "output": _output_to_json(self.output),
            "build": _input_to_json(self.build)
                     if self.build is not None else None,
        }
        return d

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True,
                          separators=(",", ":")).encode()

    @classmethod
    def from_json(cls, d: dict) -> "FragmentSpec":
        build = _input_from_json(d["build"]) if d["build"] is not None \
            else None
        return cls(d["query_id"], d["pipeline_id"], d["fragment_id"],
                   _input_from_json(d["source"]),
                   tuple(op_from_json(o) for o in d["ops"]),
                   _output_from_json(d["output"]),
                   build)  # type: ignore[arg-type]

    @classmethod
    def from_bytes(cls, data: bytes) -> "FragmentSpec":
        return cls.from_json(json.loads(data.decode()))


def _refs_to_json(refs: tuple[ObjectRef, ...]) -> list:
    return [r.to_json() for r in refs]


def _refs_from_json(items: list) -> tuple[ObjectRef, ...]:
    return tuple(ObjectRef(b, k) for b, k in items)


def _input_to_json(src: Union[ScanInput, ExchangeInput,
                              BroadcastInput]) -> dict:
    if isinstance(src, ScanInput):
        return {"kind": "scan", "table": src.table,
                "schema": src.schema.to_dict(),
                "projected": list(src.projected),
                "bounds": list(src.bounds),
                "objects": _refs_to_json(src.objects)}
    if isinstance(src, ExchangeInput):
        return {"kind": "exchange", "partition": src.partition,
                "producers": _refs_to_json(src.producers),
                "schema": src.schema.to_dict()}
    if isinstance(src, BroadcastInput):
        return {"kind": "broadcast",
                "objects": _refs_to_json(src.objects),
                "schema": src.schema.to_dict()}
    raise TypeError(type(src).__name__)


def _input_from_json(d: dict) -> Union[ScanInput, ExchangeInput,
                                       BroadcastInput]:
    kind = d["kind"]
    if kind == "scan":
        return ScanInput(d["table"], TableSchema.from_dict(d["schema"]),
                         tuple(d["projected"]),
                         tuple(d["bounds"]),
                         _refs_from_json(d["objects"]))
    if kind == "exchange":
        return ExchangeInput(d["partition"], _refs_from_json(d["producers"]),
                             TableSchema.from_dict(d["schema"]))
    if kind == "broadcast":
        return BroadcastInput(_refs_from_json(d["objects"]),
                              TableSchema.from_dict(d["schema"]))
    raise ValueError(f"unknown input kind {kind!r}")


def _output_to_json(out: Union[ExchangeOutputSpec, CollectOutputSpec]) -> dict:
    if isinstance(out, ExchangeOutputSpec):
        return {"kind": "exchange", "bucket": out.bucket,
                "key_prefix": out.key_prefix,
                "partition_count": out.partition_count,
                "hash_keys": list(out.hash_keys),
                "storage_class": out.storage_class}
    return {"kind": "collect", "bucket": out.bucket, "key": out.key,
            "storage_class": out.storage_class}


def _output_from_json(d: dict) -> Union[ExchangeOutputSpec,
                                        CollectOutputSpec]:
    if d["kind"] == "exchange":
        return ExchangeOutputSpec(d["bucket"], d["key_prefix"],
                                  d["partition_count"],
                                  tuple(d["hash_keys"]), d["storage_class"])
    return CollectOutputSpec(d["bucket"], d["key"], d["storage_class"])


# --- input assignment ---

def pack_objects(objects: list[ManifestObject],
                 w: int) -> list[list[ManifestObject]]:
    """Greedy largest-first bin packing into w bins; deterministic.
    Ties go to the lowest-indexed lightest bin."""
    bins: list[list[ManifestObject]] = [[] for _ in range(w)]
    weights = [0] * w
    for obj in sorted(objects, key=lambda o: (-o.file_bytes, o.key)):
        i = min(range(w), key=lambda b: (weights[b], b))
        bins[i].append(obj)
        weights[i] += obj.file_bytes
    return bins


def output_key(query_id: str, pipeline_id: int, fragment_id: str,
               partition: Optional[int] = None) -> str:
    base = f"q/{query_id}/p{pipeline_id}/{fragment_id}"
    if partition is None:
        return base
    return f"{base}/part{partition}"


def fragment_output(pipeline: PipelinePlan, query_id: str, fragment_id: str,
                    bucket: str) -> Union[ExchangeOutputSpec,
                                          CollectOutputSpec]:
    if isinstance(pipeline.output, ExchangeOutput):
        return ExchangeOutputSpec(
            bucket, output_key(query_id, pipeline.id, fragment_id),
            pipeline.output.partition_count, pipeline.output.hash_keys,
            pipeline.output.storage_class)
    return CollectOutputSpec(
        bucket, output_key(query_id, pipeline.id, fragment_id),
        pipeline.output.storage_class)


def scan_fragments(pipeline: PipelinePlan, manifest: TableManifest,
                   query_id: str, bucket: str,
                   build: Optional[BroadcastInput] = None,
                   ) -> list[tuple[FragmentSpec, int]]:
    """Fragments of a source pipeline with near-equal byte shares of the
    table's objects. Returns (spec, assigned_bytes) pairs; the byte counts
    feed the coordinator's skew classifier."""
    assert isinstance(pipeline.source, ScanSource)
    src = pipeline.source
    bins = pack_objects(manifest.objects, pipeline.w)
    specs = []
    for i, assigned in enumerate(bins):
        fragment_id = f"f{i}"
        source = ScanInput(src.table, src.schema, src.projected, src.bounds,
                           tuple(ObjectRef(o.bucket, o.key)
                                 for o in assigned))
        spec = FragmentSpec(
            query_id, pipeline.id, fragment_id, source, tuple(pipeline.ops),
            fragment_output(pipeline, query_id, fragment_id, bucket), build)
        specs.append((spec, sum(o.file_bytes for o in assigned)))
    return specs


def split_scan_fragment(spec: FragmentSpec, bucket: str,
                        ) -> list[FragmentSpec]:
    """Skew handling: divide one scan fragment's objects over two
    sub-fragments. Sub-fragment ids extend the parent's id."""
    assert isinstance(spec.source, ScanInput)
    objects = list(spec.source.objects)
    halves = [objects[0::2], objects[1::2]]
    out = []
    for suffix, part in zip(("a", "b"), halves):
        fragment_id = f"{spec.fragment_id}{suffix}"
        source = ScanInput(spec.source.table, spec.source.schema,
                           spec.source.projected, spec.source.bounds,
                           tuple(part))
        out.append(FragmentSpec(
            spec.query_id, spec.pipeline_id, fragment_id, source, spec.ops,
            _retarget_output(spec.output, spec.query_id, spec.pipeline_id,
                             fragment_id, bucket),
            spec.build))
    return out


def _retarget_output(out: Union[ExchangeOutputSpec, CollectOutputSpec],
                     query_id: str, pipeline_id: int, fragment_id: str,
                     bucket: str) -> Union[ExchangeOutputSpec,
                                           CollectOutputSpec]:
    if isinstance(out, ExchangeOutputSpec):
        return ExchangeOutputSpec(
            bucket, output_key(query_id, pipeline_id, fragment_id),
            out.partition_count, out.hash_keys, out.storage_class)
    return CollectOutputSpec(
        bucket, output_key(query_id, pipeline_id, fragment_id),
        out.storage_class)


def exchange_fragments(pipeline: PipelinePlan, query_id: str, bucket: str,
                       producer_keys: dict[int, list[ObjectRef]],
                       build_keys: Optional[dict[int, list[ObjectRef]]] = None,
                       ) -> list[FragmentSpec]:
    """Fragments of an exchange-consuming pipeline. Fragment i consumes
    partition i; producer_keys maps partition -> that partition's objects
    across all producer fragments (built from worker responses). build_keys
    does the same for a repartitioned build side."""
    assert isinstance(pipeline.source, ExchangeSource)
    specs = []
    for i in range(pipeline.w):
        fragment_id = f"f{i}"
        source = ExchangeInput(i, tuple(producer_keys.get(i, ())),
                               pipeline.source.schema)
        build = None
        if build_keys is not None and pipeline.build is not None:
            build = ExchangeInput(i, tuple(build_keys.get(i, ())),
                                  pipeline.build.schema)
        specs.append(FragmentSpec(
            query_id, pipeline.id, fragment_id, source, tuple(pipeline.ops),
            fragment_output(pipeline, query_id, fragment_id, bucket), build))
    return specs
