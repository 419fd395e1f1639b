from .cache_key import cache_key
from .fragments import (BroadcastInput, CollectOutputSpec, ExchangeInput,
                        ExchangeOutputSpec, FragmentSpec, ObjectRef,
                        exchange_fragments, output_key, pack_objects,
                        scan_fragments, split_scan_fragment)
from .physical import (CollectOutput, ExchangeOutput, ExchangeSource,
                       PhysicalQueryPlan, PipelinePlan, ScanSource,
                       describe_physical, plan_physical)
from .rules import estimate_bytes, optimize
from .sizing import SizingModel

__all__ = [
    "cache_key", "optimize", "estimate_bytes", "SizingModel",
    "plan_physical", "describe_physical", "PhysicalQueryPlan",
    "PipelinePlan", "ScanSource", "ExchangeSource", "ExchangeOutput",
    "CollectOutput", "FragmentSpec", "ObjectRef", "BroadcastInput",
    "ExchangeInput", "ExchangeOutputSpec", "CollectOutputSpec",
    "scan_fragments", "exchange_fragments", "split_scan_fragment",
    "pack_objects", "output_key",
]
