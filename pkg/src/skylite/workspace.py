"""Workspace persistence: spill a simulated deployment's object store,
key-value items, and catalog to a directory so data and cached results
survive across CLI invocations."""

from __future__ import annotations

import base64
import json
from pathlib import Path
from typing import Optional

from .formats.catalog import Catalog
from .sim.config import SimConfig
from .sim.simulator import Simulator

INDEX_FILE = "index.json"
CATALOG_FILE = "catalog.json"
KV_FILE = "kv.json"
OBJECTS_DIR = "objects"


def save(path: str | Path, sim: Simulator,
         catalog: Optional[Catalog] = None) -> None:
    root = Path(path)
    (root / OBJECTS_DIR).mkdir(parents=True, exist_ok=True)
    index = []
    for obj in sorted(sim.store.objects(), key=lambda o: (o.bucket, o.key)):
        target = root / OBJECTS_DIR / obj.bucket / obj.key
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(obj.data)
        index.append({"bucket": obj.bucket, "key": obj.key,
                      "storage_class": obj.storage_class,
                      "created_at_us": obj.created_at_us})
    (root / INDEX_FILE).write_text(
        json.dumps({"objects": index}, indent=2))
    kv = {k: base64.b64encode(v).decode()
          for k, v in sim.kv.items_raw().items()}
    (root / KV_FILE).write_text(json.dumps(kv, indent=2, sort_keys=True))
    if catalog is not None:
        catalog.save(root / CATALOG_FILE)


def load(path: str | Path, seed: int = 0,
         config: Optional[SimConfig] = None,
         ) -> tuple[Simulator, Optional[Catalog]]:
    root = Path(path)
    sim = Simulator(seed=seed, config=config)
    index_path = root / INDEX_FILE
    if index_path.exists():
        index = json.loads(index_path.read_text())
        for entry in index["objects"]:
            data = (root / OBJECTS_DIR / entry["bucket"] /
                    entry["key"]).read_bytes()
            sim.store.load_raw(entry["bucket"], entry["key"], data,
                               entry["storage_class"],
                               entry["created_at_us"])
    kv_path = root / KV_FILE
    if kv_path.exists():
        items = {k: base64.b64decode(v)
                 for k, v in json.loads(kv_path.read_text()).items()}
        sim.kv.load_raw(items)
    catalog_path = root / CATALOG_FILE
    catalog = Catalog.load(catalog_path) if catalog_path.exists() else None
    return sim, catalog
