"""Deterministic discrete-event core: virtual clock, event heap, per-peer
service queues, message accounting.

Events are ordered by (fire time, insertion sequence), so identical inputs
replay identically. Latency constants model a homogeneous network: a wide-area
hop between organizations, a fast hop inside one, and a fixed per-message
service time at each peer. Query-bearing messages contend for a peer's single
service slot (FIFO); response and probe traffic is treated as lightweight and
bypasses the queue.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

DHT_ROUTING = "dht_routing"
INTER_VO_QUERY = "inter_vo_query"
INTER_VO_RESPONSE = "inter_vo_response"
AP_PROBE = "ap_probe"
DHT_MAINTENANCE = "dht_maintenance"
ADDRESSING_MAINTENANCE = "addressing_maintenance"

CATEGORIES = (
    DHT_ROUTING,
    INTER_VO_QUERY,
    INTER_VO_RESPONSE,
    AP_PROBE,
    DHT_MAINTENANCE,
    ADDRESSING_MAINTENANCE,
)


class EngineError(Exception):
    pass


@dataclass
class NetworkModel:
    """Latency and service constants, all in simulated milliseconds."""

    inter_vo_hop_ms: float = 10.0
    intra_vo_hop_ms: float = 1.0
    service_time_ms: float = 1.0
    rtt_budget_ms: float = 50.0
    bandwidth_label: str = "100 Mb/s"  # descriptive tag only; latencies above rule


@dataclass
class ChurnModel:
    """Churn workload: either `count` joins plus leaves spread over a window,
    or session-based departures of a fraction of peers at a session deadline."""

    mode: str = "none"  # none | count | session
    count: int = 0
    window_ms: float = 1000.0
    churn_frac: float = 0.05
    session_frac: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in ("none", "count", "session"):
            raise EngineError(f"unknown churn mode {self.mode!r}")


@dataclass
class QueryRecord:
    query_id: int
    origin: str
    submitted_at: float
    completed_at: float
    n_results: int
    partial: bool
    warnings: tuple[str, ...] = ()

    @property
    def latency_ms(self) -> float:
        return self.completed_at - self.submitted_at


class MetricsLedger:
    """Per-run accounting: message counters by category, query outcomes and
    the optional full event trace."""

    def __init__(self, trace_enabled: bool = False):
        self.counters: dict[str, int] = {c: 0 for c in CATEGORIES}
        self.query_records: list[QueryRecord] = []
        self.trace: list[dict] | None = [] if trace_enabled else None
        self.leftover_msgs = 0
        self.suspended = False

    def total_messages(self) -> int:
        return sum(self.counters.values())

    def maintenance_messages(self) -> int:
        return self.counters[DHT_MAINTENANCE] + self.counters[ADDRESSING_MAINTENANCE]

    def latencies(self) -> list[float]:
        return [r.latency_ms for r in self.query_records]

    def completed(self) -> int:
        return len(self.query_records)

    def partial(self) -> int:
        return sum(1 for r in self.query_records if r.partial)


class Engine:
    """Single-threaded event loop over a virtual millisecond clock."""

    def __init__(self, net: NetworkModel, ledger: MetricsLedger,
                 horizon_ms: float | None = None):
        self.net = net
        self.ledger = ledger
        self.horizon_ms = horizon_ms
        self.now = 0.0
        self._heap: list[tuple[float, int, object, tuple]] = []
        self._seq = 0
        self._busy: dict[tuple[int, int], float] = {}

    # -- scheduling ----------------------------------------------------------

    def schedule_at(self, t: float, fn, *args) -> None:
        if t < self.now:
            raise EngineError(f"cannot schedule into the past ({t} < {self.now})")
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, fn, args))

    def schedule(self, delay: float, fn, *args) -> None:
        self.schedule_at(self.now + delay, fn, *args)

    def enqueue_service(self, peer_key: tuple[int, int], fn, *args) -> None:
        """Pass a message through the peer's FIFO service slot: handling
        starts when the slot frees up and occupies it for one service time."""
        start = self._busy.get(peer_key, 0.0)
        if start < self.now:
            start = self.now
        done = start + self.net.service_time_ms
        self._busy[peer_key] = done
        self.schedule_at(done, fn, *args)

    def enqueue_batch(self, peer_key: tuple[int, int], n_msgs: int, fn, *args,
                      workers: int = 1) -> float:
        """Pass a bundle of `n_msgs` messages through a hub's FIFO slot in one
        event: the slot stays busy for n_msgs/workers service times and `fn`
        fires once the whole bundle has been handled. Returns the completion
        time. `workers` models several hubs draining the bundle in parallel."""
        start = self._busy.get(peer_key, 0.0)
        if start < self.now:
            start = self.now
        done = start + (max(0, n_msgs) / max(1, workers)) * self.net.service_time_ms
        self._busy[peer_key] = done
        self.schedule_at(done, fn, *args)
        return done

    def backlog_ms(self, peer_key: tuple[int, int]) -> float:
        return max(0.0, self._busy.get(peer_key, 0.0) - self.now)

    # -- accounting ----------------------------------------------------------

    @property
    def tracing(self) -> bool:
        return self.ledger.trace is not None

    def count(self, category: str, n: int = 1, kind: str = "",
              src: str = "", dst: str = "", detail: str = "") -> None:
        ledger = self.ledger
        if ledger.suspended or n <= 0:
            return
        ledger.counters[category] += n
        if self.horizon_ms is not None and self.now >= self.horizon_ms:
            ledger.leftover_msgs += n
        if ledger.trace is not None:
            ledger.trace.append({
                "t": round(self.now, 6), "kind": kind, "category": category,
                "n": n, "src": src, "dst": dst, "detail": detail,
            })

    def note(self, kind: str, detail: str = "") -> None:
        """Trace-only lifecycle record; counts nothing."""
        if self.ledger.trace is not None and not self.ledger.suspended:
            self.ledger.trace.append({
                "t": round(self.now, 6), "kind": kind, "category": None,
                "n": 0, "src": "", "dst": "", "detail": detail,
            })

    # -- running -------------------------------------------------------------

    def run(self, stop=None, max_events: int | None = None) -> int:
        processed = 0
        heap = self._heap
        while heap:
            t, _, fn, args = heapq.heappop(heap)
            self.now = t
            fn(*args)
            processed += 1
            if stop is not None and stop():
                break
            if max_events is not None and processed >= max_events:
                raise EngineError(f"event budget exhausted after {processed} events")
        return processed
