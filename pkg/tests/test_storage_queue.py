"""Object store, key-value store, and queue semantics."""

import pytest

from skylite.errors import NoSuchKey, PayloadTooLarge, RangeUnsatisfiable
from skylite.sim.pricing import GIB, MONTH_S
from skylite.sim.simulator import Simulator
from skylite.sim.storage import TAIL, transfer_us


def test_put_get_roundtrip(sim):
    ctx = sim.new_context("d")
    sim.store.put_object(ctx, "b", "k", b"hello world")
    assert sim.store.get_object_range(ctx, "b", "k") == b"hello world"
    assert sim.store.get_object_range(ctx, "b", "k", 6, 5) == b"world"
    assert sim.store.get_object_range(ctx, "b", "k", 6, TAIL) == b"world"
    assert sim.store.object_size("b", "k") == 11
    assert sim.store.storage_class_of("b", "k") == "standard"


def test_read_after_write_is_immediate(sim):
    writer = sim.new_context("w")
    reader = sim.new_context("r")
    sim.store.put_object(writer, "b", "k", b"x")
    assert sim.store.get_object_range(reader, "b", "k") == b"x"


def test_range_validation(sim):
    ctx = sim.new_context("d")
    sim.store.put_object(ctx, "b", "k", b"abc")
    with pytest.raises(RangeUnsatisfiable):
        sim.store.get_object_range(ctx, "b", "k", 2, 5)


def test_missing_key_is_still_billed(sim):
    ctx = sim.new_context("d")
    mark = sim.ledger.mark()
    with pytest.raises(NoSuchKey):
        sim.store.get_object_range(ctx, "b", "nope")
    (entry,) = sim.ledger.since(mark)
    assert entry.category == "requests_read"


def test_request_and_transfer_billing(sim):
    ctx = sim.new_context("d")
    data = b"z" * 1000
    mark = sim.ledger.mark()
    sim.store.put_object(ctx, "b", "k", data, storage_class="hot")
    entries = {e.category: e for e in sim.ledger.since(mark)}
    assert entries["requests_write"].cost_cents == pytest.approx(250.0 / 1e6)
    xfer = entries["transfer_gib"]
    assert xfer.quantity == pytest.approx(1000 / GIB)
    assert xfer.cost_cents == pytest.approx(1000 / GIB * 0.8)


def test_list_objects_bills_minimum_one_request(sim):
    ctx = sim.new_context("d")
    sim.store.put_object(ctx, "b", "p/1", b"x")
    sim.store.put_object(ctx, "b", "p/2", b"x")
    mark = sim.ledger.mark()
    keys = sim.store.list_objects(ctx, "b", "p/")
    assert keys == ["p/1", "p/2"]
    (entry,) = sim.ledger.since(mark)
    assert entry.category == "requests_read" and entry.quantity == 1
    assert sim.store.list_objects(ctx, "b", "zzz") == []


def test_delete_object(sim):
    ctx = sim.new_context("d")
    sim.store.put_object(ctx, "b", "k", b"x")
    sim.store.delete_object(ctx, "b", "k")
    assert not sim.store.exists("b", "k")
    with pytest.raises(NoSuchKey):
        sim.store.delete_object(ctx, "b", "k")


def test_storage_rent_accrual(sim):
    ctx = sim.new_context("d")
    sim.store.put_object(ctx, "b", "k", b"x" * GIB)
    created = ctx.now_us
    mark = sim.ledger.mark()
    sim.store.accrue_storage(created + MONTH_S * 1_000_000)
    (entry,) = sim.ledger.since(mark)
    assert entry.category == "storage_gib_mo"
    assert entry.quantity == pytest.approx(1.0)
    assert entry.cost_cents == pytest.approx(2.3)
    # second accrual at the same time adds nothing
    sim.store.accrue_storage(created + MONTH_S * 1_000_000)
    assert len(sim.ledger.since(mark)) == 1


def test_transfer_time_model():
    # 0.63 Gbps link: one GiB takes ~13.6 simulated seconds
    assert transfer_us(GIB) == pytest.approx(GIB * 8 / 0.63e9 * 1e6, rel=1e-6)


def test_kv_roundtrip_and_scan(sim):
    ctx = sim.new_context("d")
    assert sim.kv.get(ctx, "a") is None
    sim.kv.put(ctx, "reg/a", b"1")
    sim.kv.put(ctx, "reg/b", b"2")
    sim.kv.put(ctx, "other", b"3")
    assert sim.kv.get(ctx, "reg/a") == b"1"
    assert sim.kv.scan_keys("reg/") == ["reg/a", "reg/b"]
    assert sim.kv.delete_prefix("reg/") == 2
    assert sim.kv.scan_keys("reg/") == []


def test_queue_visibility_follows_receiver_clock(sim):
    sender = sim.new_context("s")
    sender.advance(5_000_000)
    sim.queues.send_message(sender, "q", b"late")
    early = sim.new_context("r")  # starts at t=0, before the enqueue
    assert sim.queues.receive_messages(early, "q", 10) == []
    early.advance(10_000_000)
    (msg,) = sim.queues.receive_messages(early, "q", 10)
    assert msg.body == b"late"
    assert sim.queues.pending("q") == 0


def test_queue_payload_limit(sim):
    ctx = sim.new_context("d")
    with pytest.raises(PayloadTooLarge):
        sim.queues.send_message(ctx, "q", b"x" * (256 * 1024 + 1))


def test_queue_bills_per_message(sim):
    ctx = sim.new_context("d")
    mark = sim.ledger.mark()
    sim.queues.send_message(ctx, "q", b"a")
    sim.queues.receive_messages(ctx, "q", 1)
    entries = [e for e in sim.ledger.since(mark)
               if e.category == "queue_msgs"]
    assert len(entries) == 2
    assert all(e.cost_cents == pytest.approx(40.0 / 1e6) for e in entries)
