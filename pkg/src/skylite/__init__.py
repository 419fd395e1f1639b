"""skylite: a serverless SQL query processor on a simulated cloud.

SQL goes in the front (parse, bind, optimize), comes out as a staged
physical plan of storage-backed fragment pipelines, and executes on a
simulated function platform with object storage, a result cache, and a
cost ledger priced from public serverless rate cards.
"""

from .engine.coordinator import Coordinator, RunResult, read_result
from .errors import QueryAborted, SkyliteError
from .formats.catalog import Catalog
from .sim.config import SimConfig, load_config
from .sim.faults import FaultPlan
from .sim.simulator import Simulator

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "Coordinator",
    "FaultPlan",
    "QueryAborted",
    "RunResult",
    "SimConfig",
    "Simulator",
    "SkyliteError",
    "load_config",
    "read_result",
    "__version__",
]
