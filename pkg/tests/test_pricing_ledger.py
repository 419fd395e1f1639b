"""Price sheet math and ledger accounting."""

import math

import pytest

from skylite.sim.ledger import CostLedger, total_cost, total_quantity
from skylite.sim.pricing import (MEMORY_MIB_MAX, MEMORY_MIB_MIN, PriceSheet,
                                 vcpus_for_memory)


def test_default_storage_request_prices():
    p = PriceSheet()
    std = p.storage_prices("standard")
    assert std.read_cents_per_m == 40.0
    assert std.write_cents_per_m == 500.0
    assert std.transfer_read_cents_per_gib == 0.0
    hot = p.storage_prices("hot")
    assert hot.read_cents_per_m == 20.0
    assert hot.write_cents_per_m == 250.0
    assert hot.transfer_read_cents_per_gib == 0.15
    assert hot.transfer_write_cents_per_gib == 0.8


def test_unknown_storage_class():
    with pytest.raises(KeyError):
        PriceSheet().storage_prices("glacial")


def test_compute_rate_interpolates_between_endpoints():
    p = PriceSheet()
    assert p.compute_gib_h(MEMORY_MIB_MIN) == pytest.approx(4.80)
    assert p.compute_gib_h(MEMORY_MIB_MAX) == pytest.approx(3.84)
    mid = p.compute_gib_h((MEMORY_MIB_MIN + MEMORY_MIB_MAX) // 2)
    assert 3.84 < mid < 4.80


def test_compute_rate_bounds_enforced():
    with pytest.raises(ValueError):
        PriceSheet().compute_gib_h(64)


def test_compute_cost_example():
    # 1 GiB for one hour at the 1024 MiB rate
    p = PriceSheet()
    cost = p.compute_cost_cents(1024, 3600 * 1_000_000)
    assert math.isclose(cost, p.compute_gib_h(1024))


def test_vcpus_for_memory_endpoints():
    assert vcpus_for_memory(MEMORY_MIB_MIN) == pytest.approx(0.07)
    assert vcpus_for_memory(MEMORY_MIB_MAX) == pytest.approx(5.79)


def test_ledger_rejects_unknown_category():
    with pytest.raises(ValueError):
        CostLedger().add(0, "vibes", 1, 1)


def test_ledger_mark_and_totals():
    ledger = CostLedger()
    ledger.add(1, "requests_read", 2, 0.2, note="a")
    mark = ledger.mark()
    ledger.add(2, "requests_read", 3, 0.3, note="b")
    ledger.add(3, "compute_gib_s", 1, 5.0)
    window = ledger.since(mark)
    assert len(window) == 2
    assert total_cost(window) == pytest.approx(5.3)
    assert total_cost(window, "compute_gib_s") == pytest.approx(5.0)
    assert total_quantity(window, "requests_read") == 3
