"""Result registry persistence and ledger-backed run reports."""

import pytest

from skylite.bench.datagen import generate
from skylite.bench.queries import Q6
from skylite.bench.reports import (accrue_storage, bytes_transferred,
                                   compute_cost_cents, report, run_entries)
from skylite.engine.coordinator import Coordinator
from skylite.engine.registry import ResultRegistry
from skylite.sim.simulator import Simulator


@pytest.fixture
def sim():
    return Simulator(seed=11)


def test_registry_pipeline_roundtrip(sim):
    reg = ResultRegistry(sim.kv)
    ctx = sim.new_context("t")
    outs = [{"bucket": "b", "key": "q/x/p0/f0", "rows": 3}]
    reg.put_pipeline(ctx, "k" * 64, 0, outs, "q1")
    entry = reg.get_pipeline(ctx, "k" * 64, 0)
    assert entry.outputs == outs
    assert entry.creator_query_id == "q1"
    assert entry.created_at_us == ctx.now_us or entry.created_at_us >= 0
    assert reg.get_pipeline(ctx, "k" * 64, 1) is None
    assert reg.get_pipeline(ctx, "m" * 64, 0) is None


def test_registry_query_records_and_clear(sim):
    reg = ResultRegistry(sim.kv)
    ctx = sim.new_context("t")
    reg.put_query(ctx, "q7", {"sql": "select 1", "cache_key": "abc"})
    assert reg.get_query(ctx, "q7") == {"sql": "select 1",
                                        "cache_key": "abc"}
    assert reg.get_query(ctx, "nope") is None
    reg.put_pipeline(ctx, "abc", 0, [], "q7")
    reg.put_pipeline(ctx, "abc", 1, [], "q7")
    assert reg.list_entries() == ["reg/abc/p0", "reg/abc/p1"]
    assert reg.clear() == 3
    assert reg.list_entries() == []
    assert reg.get_query(ctx, "q7") is None


@pytest.fixture
def ran(sim):
    catalog = generate(sim, 0.002, seed=1)
    coord = Coordinator(sim, catalog, use_cache=False, force_w=2)
    return sim, coord.run(Q6, query_id="rep-1")


def test_run_entries_window_is_exclusive(ran):
    sim, result = ran
    window = run_entries(sim, result)
    assert window
    assert window == sim.ledger.entries[result.ledger_mark:result.ledger_end]
    # nothing before the mark belongs to the run
    assert result.ledger_mark > 0  # datagen billed writes first


def test_report_reconciles_with_ledger(ran):
    sim, result = ran
    rep = report(sim, result)
    assert rep.query_id == "rep-1"
    assert rep.invocations == result.invocations > 0
    assert rep.cost_cents == pytest.approx(
        sum(e.cost_cents for e in run_entries(sim, result)))
    assert set(rep.cost_by_category) == set(rep.quantity_by_category)
    assert rep.cost_by_category.keys() >= {"compute_gib_s", "requests_read",
                                           "requests_write", "transfer_gib"}
    j = rep.to_json()
    assert j["latency_ms"] == pytest.approx(result.latency_us / 1000)
    assert j["cost_cents"] == pytest.approx(rep.cost_cents)


def test_compute_cost_is_the_compute_slice(ran):
    sim, result = ran
    rep = report(sim, result)
    assert compute_cost_cents(sim, result) == pytest.approx(
        rep.cost_by_category["compute_gib_s"])


def test_bytes_transferred_filters_by_prefix(ran):
    sim, result = ran
    scanned = bytes_transferred(sim, result, "tpch/lineitem")
    assert 0 < scanned
    assert bytes_transferred(sim, result, "tpch/none") == 0
    # a table scan never moves more than the stored table
    _, manifest = Coordinator(sim, generate(sim, 0.002, seed=1,
                                            bucket="scratch"),
                              ).catalog.resolve("lineitem")
    assert scanned <= sum(o.file_bytes for o in manifest.objects)


def test_accrue_storage_charges_rent(ran):
    sim, _ = ran
    sim.clock.observe(sim.clock.now_us + 3_600_000_000)
    mark = sim.ledger.mark()
    accrue_storage(sim)
    rent = [e for e in sim.ledger.entries[mark:]
            if e.category == "storage_gib_mo"]
    assert rent and sum(e.cost_cents for e in rent) > 0
    again = sim.ledger.mark()
    accrue_storage(sim)  # idempotent at the same timestamp
    assert sim.ledger.mark() == again
