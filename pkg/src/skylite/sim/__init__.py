from .clock import SimClock, SimContext, EventLog, ms_to_us, s_to_us
from .config import SimConfig, load_config, ENV_CONFIG_VAR
from .faults import FaultPlan
from .latency import LatencyModel, LatencySpec
from .ledger import CostLedger, LedgerEntry, total_cost, total_quantity
from .platform import FunctionSpec, Invocation
from .pricing import PriceSheet
from .simulator import Simulator
from .storage import StoredObject, TAIL

__all__ = [
    "SimClock", "SimContext", "EventLog", "ms_to_us", "s_to_us",
    "SimConfig", "load_config", "ENV_CONFIG_VAR", "FaultPlan",
    "LatencyModel", "LatencySpec", "CostLedger", "LedgerEntry",
    "total_cost", "total_quantity", "FunctionSpec", "Invocation",
    "PriceSheet", "Simulator", "StoredObject", "TAIL",
]
