"""Event-loop core: ordering, FIFO service, accounting conservation."""

import random

import pytest

from damtsim.engine import (
    CATEGORIES,
    DHT_ROUTING,
    INTER_VO_QUERY,
    ChurnModel,
    Engine,
    EngineError,
    MetricsLedger,
    NetworkModel,
)


def make_engine(trace=False, horizon=None):
    return Engine(NetworkModel(), MetricsLedger(trace_enabled=trace), horizon_ms=horizon)


def test_events_fire_in_time_order_with_fifo_ties():
    eng = make_engine()
    seen = []
    eng.schedule_at(5.0, seen.append, "c")
    eng.schedule_at(1.0, seen.append, "a")
    eng.schedule_at(5.0, seen.append, "d")  # same time as "c": insertion order wins
    eng.schedule_at(3.0, seen.append, "b")
    eng.run()
    assert seen == ["a", "b", "c", "d"]
    assert eng.now == 5.0


def test_cannot_schedule_into_the_past():
    eng = make_engine()
    eng.schedule_at(10.0, lambda: eng.schedule_at(3.0, lambda: None))
    with pytest.raises(EngineError):
        eng.run()


def test_service_queue_is_fifo_with_unit_spacing():
    eng = make_engine()
    key = (0, 42)
    done = []

    def arrive(tag):
        eng.enqueue_service(key, lambda tag=tag: done.append((tag, eng.now)))

    # Three messages arrive at the same instant: service completions must be
    # spaced by exactly one service time each.
    for tag in ("m1", "m2", "m3"):
        eng.schedule_at(2.0, arrive, tag)
    eng.run()
    assert [t for (_, t) in done] == [3.0, 4.0, 5.0]
    assert [tag for (tag, _) in done] == ["m1", "m2", "m3"]


def test_service_queue_drains_and_idles():
    eng = make_engine()
    key = (1, 7)
    done = []
    eng.schedule_at(1.0, eng.enqueue_service, key, done.append, "x")
    # Second arrival long after the first finished: no residual backlog.
    eng.schedule_at(50.0, eng.enqueue_service, key, done.append, "y")

    fired = []
    eng.schedule_at(50.0, lambda: fired.append(eng.backlog_ms(key)))
    eng.run()
    assert eng._busy[key] == 51.0
    assert done == ["x", "y"]


def test_counter_and_trace_agree():
    eng = make_engine(trace=True)
    rng = random.Random(11)
    sent = 0
    for _ in range(200):
        cat = rng.choice(CATEGORIES)
        n = rng.randint(1, 5)
        sent += n
        eng.count(cat, n, kind="unit", src="a", dst="b")
    eng.note("lifecycle", "does not count")
    assert eng.ledger.total_messages() == sent
    traced = sum(rec["n"] for rec in eng.ledger.trace if rec["category"] is not None)
    assert traced == sent


def test_suspended_ledger_counts_nothing():
    eng = make_engine(trace=True)
    eng.ledger.suspended = True
    eng.count(DHT_ROUTING, 10)
    eng.ledger.suspended = False
    eng.count(DHT_ROUTING, 3)
    assert eng.ledger.counters[DHT_ROUTING] == 3
    assert len(eng.ledger.trace) == 1


def test_leftover_counts_messages_at_or_after_horizon():
    eng = make_engine(horizon=100.0)
    eng.schedule_at(99.9, eng.count, INTER_VO_QUERY, 4)
    eng.schedule_at(100.0, eng.count, INTER_VO_QUERY, 5)
    eng.schedule_at(250.0, eng.count, INTER_VO_QUERY, 6)
    eng.run()
    assert eng.ledger.leftover_msgs == 11
    assert eng.ledger.counters[INTER_VO_QUERY] == 15


def test_run_is_deterministic_under_random_schedule():
    def trial():
        eng = make_engine()
        rng = random.Random(77)
        order = []

        def act(i):
            order.append((round(eng.now, 9), i))
            if rng.random() < 0.4:
                eng.schedule(rng.uniform(0.0, 5.0), act, i + 1000)

        for i in range(300):
            eng.schedule_at(rng.uniform(0.0, 50.0), act, i)
        eng.run()
        return order

    assert trial() == trial()


def test_churn_model_validates_mode():
    assert ChurnModel(mode="count", count=3).count == 3
    with pytest.raises(EngineError):
        ChurnModel(mode="bogus")


def test_event_budget_guard():
    eng = make_engine()

    def forever():
        eng.schedule(1.0, forever)

    eng.schedule_at(0.0, forever)
    with pytest.raises(EngineError):
        eng.run(max_events=500)
