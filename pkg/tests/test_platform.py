"""FaaS platform: starts, sandbox reuse, depth, quotas, crashes, billing."""

import pytest

from skylite.errors import PayloadTooLarge, QuotaExceeded
from skylite.sim.config import SimConfig, config_from_values
from skylite.sim.faults import FaultPlan
from skylite.sim.platform import FunctionSpec
from skylite.sim.simulator import Simulator


def noop(payload, ctx):
    ctx.advance(1000)


def test_first_invocation_is_cold_then_warm():
    sim = Simulator(seed=1)
    ctx = sim.new_context("driver")
    fn = FunctionSpec("f")
    i1 = sim.platform.invoke(ctx, fn, b"{}", noop)
    # second submit lands after the first finished (caller clock advanced
    # past dispatch only, so jump the context forward)
    ctx.advance(10_000_000)
    i2 = sim.platform.invoke(ctx, fn, b"{}", noop)
    assert sim.platform.invocations[i1].start_kind == "cold"
    assert sim.platform.invocations[i2].start_kind == "warm"


def test_caller_pays_dispatch_only():
    sim = Simulator(seed=2)
    ctx = sim.new_context("driver")
    before = ctx.now_us
    sim.platform.invoke(ctx, FunctionSpec("f"), b"{}", noop)
    dispatch = ctx.now_us - before
    spec = sim.config.latencies["lambda.invoke.dispatch"]
    assert spec.min_ms * 1000 <= dispatch <= spec.max_ms * 1000


def test_invocation_depth_assigned_at_invoke_time():
    sim = Simulator(seed=3)

    def parent(payload, ctx):
        # children spawn while the parent invocation is still running
        pid = int(ctx.label[4:])
        sim.platform.invoke(ctx, FunctionSpec("f"), b"{}", noop,
                            parent_id=pid)

    root = sim.platform.invoke(sim.new_context("d"), FunctionSpec("f"),
                               b"{}", parent)
    depths = {inv.id: inv.depth for inv in sim.platform.invocations.values()}
    assert depths[root] == 1
    assert set(depths.values()) == {1, 2}


def test_payload_limit():
    sim = Simulator(seed=4)
    big = b"x" * (sim.limits.payload_limit_bytes + 1)
    with pytest.raises(PayloadTooLarge):
        sim.platform.invoke(sim.new_context("d"), FunctionSpec("f"), big,
                            noop)


def test_admission_quota():
    config = config_from_values({"platform.admission_quota": ["2"]})
    sim = Simulator(seed=5, config=config)
    ctx = sim.new_context("d")

    def slow(payload, wctx):
        wctx.advance(60_000_000)

    sim.platform.invoke(ctx, FunctionSpec("f"), b"{}", slow)
    sim.platform.invoke(ctx, FunctionSpec("f"), b"{}", slow)
    with pytest.raises(QuotaExceeded):
        sim.platform.invoke(ctx, FunctionSpec("f"), b"{}", slow)


def test_injected_crash_is_recorded_and_unbilled():
    config = SimConfig(fault_plan=FaultPlan(crash_fraction=1.0,
                                            scope="invocation"))
    sim = Simulator(seed=6, config=config)
    mark = sim.ledger.mark()
    iid = sim.platform.invoke(sim.new_context("d"), FunctionSpec("f"),
                              b"{}", noop)
    inv = sim.platform.invocations[iid]
    assert inv.state == "failed"
    assert inv.error == "injected crash"
    assert not sim.ledger.since(mark)


def test_entrypoint_exception_marks_failed():
    sim = Simulator(seed=7)

    def boom(payload, ctx):
        raise RuntimeError("nope")

    iid = sim.platform.invoke(sim.new_context("d"), FunctionSpec("f"),
                              b"{}", boom)
    inv = sim.platform.invocations[iid]
    assert inv.state == "failed"
    assert "RuntimeError" in inv.error


def test_compute_billing_matches_duration():
    sim = Simulator(seed=8)
    fn = FunctionSpec("f", memory_mib=1024)
    mark = sim.ledger.mark()
    iid = sim.platform.invoke(sim.new_context("d"), fn, b"{}", noop)
    inv = sim.platform.invocations[iid]
    dur = inv.end_t_us - inv.start_t_us
    (entry,) = [e for e in sim.ledger.since(mark)
                if e.category == "compute_gib_s"]
    assert entry.quantity == pytest.approx(dur / 1e6)  # 1 GiB
    assert entry.cost_cents == pytest.approx(
        sim.prices.compute_cost_cents(1024, dur))


def test_memory_outside_range_rejected():
    with pytest.raises(ValueError):
        FunctionSpec("f", memory_mib=64)
