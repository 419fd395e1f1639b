"""Clock, event log, and latency distribution behavior."""

import math

import pytest

from skylite.sim.clock import EventLog, SimClock, SimContext, ms_to_us, s_to_us
from skylite.sim.latency import LatencyModel, LatencySpec


def test_context_advance_and_scale():
    ctx = SimContext(now_us=100)
    assert ctx.advance(50) == 150
    slow = ctx.fork(label="s", time_scale=3.0)
    slow.advance(10)
    assert slow.now_us == 180
    assert ctx.now_us == 150  # forks are independent cursors


def test_context_rejects_negative_advance():
    with pytest.raises(ValueError):
        SimContext().advance(-1)


def test_time_conversions():
    assert ms_to_us(1.5) == 1500
    assert s_to_us(0.25) == 250_000


def test_clock_high_water_is_monotone():
    clock = SimClock()
    clock.observe(500)
    clock.observe(200)
    assert clock.now_us == 500


def test_clock_runs_callbacks_in_time_order():
    clock = SimClock()
    seen = []
    clock.schedule(30, lambda: seen.append("b"))
    clock.schedule(10, lambda: seen.append("a"))
    clock.schedule(30, lambda: seen.append("c"))  # tie keeps insertion order
    clock.run_until_idle()
    assert seen == ["a", "b", "c"]
    assert clock.now_us == 30


def test_event_log_select():
    log = EventLog()
    log.record(5, "invocation", id=1, state="finished")
    log.record(9, "invocation", id=2, state="failed")
    log.record(7, "retrigger", fragment="f0")
    assert len(log) == 3
    assert [e.attrs["id"] for e in log.select("invocation")] == [1, 2]
    assert log.select("invocation", state="failed")[0].attrs["id"] == 2
    assert [e.t_us for e in log.timeline()] == [5, 7, 9]


def test_latency_spec_must_be_ordered():
    with pytest.raises(ValueError):
        LatencySpec(10, 5, 20, 30)


def test_degenerate_spec_samples_median():
    model = LatencyModel({"x": LatencySpec(5, 5, 5, 5)}, seed=1)
    assert all(model.sample_ms("x") == 5 for _ in range(10))


def test_samples_clamped_and_median_close():
    spec = LatencySpec(10, 27, 1000, 2000)
    model = LatencyModel({"storage.standard.read": spec}, seed=3)
    samples = sorted(model.sample_ms("storage.standard.read")
                     for _ in range(20_000))
    assert samples[0] >= spec.min_ms
    assert samples[-1] <= spec.max_ms
    med = samples[len(samples) // 2]
    assert math.isclose(med, spec.median_ms, rel_tol=0.05)


def test_unknown_latency_key():
    model = LatencyModel({}, seed=0)
    with pytest.raises(KeyError):
        model.sample_ms("nope")


def test_same_seed_same_stream():
    spec = LatencySpec(1, 5, 50, 100)
    a = LatencyModel({"k": spec}, seed=9)
    b = LatencyModel({"k": spec}, seed=9)
    assert [a.sample_us("k") for _ in range(100)] == \
        [b.sample_us("k") for _ in range(100)]
