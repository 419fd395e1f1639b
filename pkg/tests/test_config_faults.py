"""Config file parsing and fault injection plans."""

import pytest

from skylite.sim.config import (ENV_CONFIG_VAR, config_from_values,
                                load_config, parse_config_text)
from skylite.sim.faults import FaultInjector, FaultPlan
from skylite.sim.latency import LatencySpec


def test_parse_config_text():
    text = """
    # a comment
    storage.standard.read = 1 2 3 4   # trailing comment
    exec.memory_budget_bytes = 1048576
    """
    values = parse_config_text(text)
    assert values["storage.standard.read"] == ["1", "2", "3", "4"]
    assert values["exec.memory_budget_bytes"] == ["1048576"]


def test_parse_rejects_bad_lines():
    with pytest.raises(ValueError):
        parse_config_text("just words\n")


def test_overrides_reach_their_sections():
    cfg = config_from_values({
        "storage.standard.read": ["1", "2", "3", "4"],
        "price.storage.standard": ["10", "20", "0", "0", "1.5"],
        "price.queue.per_m": ["99"],
        "platform.admission_quota": ["5"],
        "compute.cpu_bytes_per_s": ["1e9"],
        "fault.crash_fraction": ["0.5"],
        "fault.scope": ["both"],
        "exec.memory_budget_bytes": ["123"],
    })
    assert cfg.latencies["storage.standard.read"] == LatencySpec(1, 2, 3, 4)
    assert cfg.prices.storage["standard"].read_cents_per_m == 10
    assert cfg.prices.queue_cents_per_m == 99
    assert cfg.limits.admission_quota == 5
    assert cfg.limits.cpu_bytes_per_s == 1e9
    assert cfg.fault_plan.crash_fraction == 0.5
    assert cfg.fault_plan.scope == "both"
    assert cfg.extra["exec.memory_budget_bytes"] == ["123"]


def test_load_config_from_env(tmp_path, monkeypatch):
    path = tmp_path / "skylite.conf"
    path.write_text("queue.send = 1 1 1 1\n")
    monkeypatch.setenv(ENV_CONFIG_VAR, str(path))
    cfg = load_config()
    assert cfg.latencies["queue.send"] == LatencySpec(1, 1, 1, 1)
    monkeypatch.delenv(ENV_CONFIG_VAR)
    assert load_config().latencies["queue.send"] != LatencySpec(1, 1, 1, 1)


def test_fault_plan_validation():
    with pytest.raises(ValueError):
        FaultPlan(straggler_fraction=1.5)
    with pytest.raises(ValueError):
        FaultPlan(straggler_slowdown=0.5)
    with pytest.raises(ValueError):
        FaultPlan(scope="everything")
    assert FaultPlan().is_neutral
    assert FaultPlan(straggler_fraction=0.5).is_neutral  # slowdown 1 is a no-op
    assert not FaultPlan(crash_fraction=0.1).is_neutral


def test_injector_respects_scope():
    inj = FaultInjector(FaultPlan(crash_fraction=1.0, scope="invocation"))
    assert inj.decide("invocation").crash
    assert not inj.decide("storage_request").crash
    both = FaultInjector(FaultPlan(crash_fraction=1.0, scope="both"))
    assert both.decide("storage_request").crash


def test_injector_is_seed_deterministic():
    plan = FaultPlan(straggler_fraction=0.3, straggler_slowdown=4.0,
                     crash_fraction=0.2, scope="both", rng_seed=11)
    a = FaultInjector(plan)
    b = FaultInjector(plan)
    assert [a.decide("invocation") for _ in range(200)] == \
        [b.decide("invocation") for _ in range(200)]


def test_neutral_plan_never_touches_rng():
    inj = FaultInjector(FaultPlan())
    state = inj._rng.getstate()
    for _ in range(10):
        d = inj.decide("invocation")
        assert not d.crash and d.slowdown == 1.0
    assert inj._rng.getstate() == state
