"""System assembly and workload drivers.

`build_system` wires one complete simulated network for a chosen method: the
mapping-link graph appropriate to that architecture, one ring per VO, the
pre-published source catalog, the method's addressing state (access points,
designated contacts, super peers or gateways) and a protocol instance bound
to a fresh deterministic engine.

Randomness is split once, in a fixed order, from the master seed, so systems
built for different methods from the same seed still replay identically.
"""

from __future__ import annotations

import random

from .chord import ID_SPACE, ChordRing, SourceMetadata, hash_key
from .discovery import DiscoveryResponse, MethodId, make_protocol
from .engine import (
    DHT_MAINTENANCE,
    ChurnModel,
    Engine,
    MetricsLedger,
    NetworkModel,
)
from .ontology import (
    OntologyGraph,
    complete_graph,
    concept_name,
    path_graph,
    random_connected_graph,
    star_graph,
    superpeer_graph,
)
from .overlay import (
    PeerId,
    VirtualOrganization,
    bootstrap_access_points,
    friendly_leave,
)

TOPOLOGIES = ("random", "path", "star", "complete")


class BuildError(Exception):
    pass


class System:
    """One simulated network: graph, rings, addressing state and protocol."""

    def __init__(self, method: MethodId, graph: OntologyGraph, engine: Engine,
                 rng_overlay: random.Random, rng_workload: random.Random,
                 rng_churn: random.Random):
        self.method = method
        self.graph = graph
        self.engine = engine
        self.rng_overlay = rng_overlay
        self.rng_workload = rng_workload
        self.rng_churn = rng_churn
        self.vos: dict[int, VirtualOrganization] = {}
        self.ap: dict[PeerId, dict[int, int]] = {}
        self.ap_cursor: dict[tuple[int, int], int] = {}
        self.dfl_contacts: dict[tuple[int, int], list[int]] = {}
        self.sp: dict[int, int] = {}
        self.gw: dict[tuple[int, int], int] = {}
        self.catalog: dict[tuple[int, int], set[SourceMetadata]] = {}
        self.slots_for_vo: dict[int, list[int]] = {}
        self.protocol = None

    # -- state queries -------------------------------------------------------

    def is_live(self, peer: PeerId) -> bool:
        vo = self.vos.get(peer.vo)
        return vo is not None and vo.ring.is_live(peer.node)

    def live_peers(self) -> list[PeerId]:
        out: list[PeerId] = []
        for vo_id in self.graph.vo_ids():
            ring = self.vos[vo_id].ring
            out.extend(PeerId(vo_id, nid) for nid in sorted(ring.nodes))
        return out

    def peer_count(self) -> int:
        return sum(vo.ring.size() for vo in self.vos.values())

    # -- synchronous convenience ----------------------------------------------

    def discover(self, origin: PeerId, concept: str) -> DiscoveryResponse:
        """Submit one query and run the engine until it completes."""
        qs = self.protocol.submit(origin, concept)
        self.engine.run(stop=lambda: qs.done)
        if not qs.done:
            raise BuildError(f"query {qs.query_id} never completed (event heap drained)")
        return qs.response()


def _make_graph(method: MethodId, vo_count: int, corpus_size: int, coverage: float,
                topology: str, extra_edges: int | None,
                rng: random.Random) -> OntologyGraph:
    if method == MethodId.DSP:
        # Super-peer mesh: the mapping links are the super-peer links.
        return superpeer_graph(vo_count, corpus_size, coverage, rng)
    if method == MethodId.D2B2:
        return path_graph(vo_count, corpus_size, coverage, rng)
    if method == MethodId.DFLOODING:
        # Contacts everywhere imply a translation for every VO pair.
        return complete_graph(vo_count, corpus_size, coverage, rng)
    if topology == "random":
        return random_connected_graph(vo_count, corpus_size, coverage, rng,
                                      extra_edges=extra_edges)
    if topology == "path":
        return path_graph(vo_count, corpus_size, coverage, rng)
    if topology == "star":
        return star_graph(vo_count, corpus_size, coverage, rng)
    if topology == "complete":
        return complete_graph(vo_count, corpus_size, coverage, rng)
    raise BuildError(f"unknown topology {topology!r}")


def build_system(method: MethodId | str, *, vo_count: int = 10,
                 peers_per_vo: int = 100, corpus_size: int = 24,
                 coverage: float = 1.0, topology: str = "random",
                 extra_edges: int | None = None,
                 graph: OntologyGraph | None = None, seed: int = 0,
                 net: NetworkModel | None = None, trace: bool = False,
                 horizon_ms: float | None = None,
                 contacts_per_vo_pair: int = 3) -> System:
    method = MethodId(method)
    master = random.Random(seed)
    # Fixed derivation order; consumers must not depend on each other.
    rng_graph = random.Random(master.getrandbits(64))
    rng_rings = random.Random(master.getrandbits(64))
    rng_overlay = random.Random(master.getrandbits(64))
    rng_proto = random.Random(master.getrandbits(64))
    rng_workload = random.Random(master.getrandbits(64))
    rng_churn = random.Random(master.getrandbits(64))

    if graph is None:
        graph = _make_graph(method, vo_count, corpus_size, coverage, topology,
                            extra_edges, rng_graph)
    engine = Engine(net or NetworkModel(), MetricsLedger(trace_enabled=trace),
                    horizon_ms=horizon_ms)
    sysm = System(method, graph, engine, rng_overlay, rng_workload, rng_churn)

    for vo_id in graph.vo_ids():
        ring = ChordRing(vo_id, random.Random(rng_rings.getrandbits(64)))
        ring.build(peers_per_vo)
        sysm.vos[vo_id] = VirtualOrganization(vo_id, ring)

    # Pre-published catalog: one source per surviving concept slot per VO,
    # stored straight onto the responsible ring node (pre-existing state, no
    # protocol messages).
    for vo_id in graph.vo_ids():
        ring = sysm.vos[vo_id].ring
        onto = graph.ontologies[vo_id]
        slots = []
        for slot in range(corpus_size):
            cname = concept_name(slot, vo_id)
            if cname not in onto.concepts:
                continue
            slots.append(slot)
            meta = SourceMetadata(f"src-{vo_id}-{slot}", cname, vo_id)
            owner = ring.live_after(hash_key(cname))
            ring.node(owner).store.setdefault(cname, set()).add(meta)
            sysm.catalog.setdefault((vo_id, slot), set()).add(meta)
        if not slots:
            raise BuildError(f"vo {vo_id} kept no concept slots (coverage too low)")
        sysm.slots_for_vo[vo_id] = slots

    if method == MethodId.DAMT:
        bootstrap_access_points(sysm)
    elif method == MethodId.DFLOODING:
        for vo_a in graph.vo_ids():
            for vo_b in graph.neighbors(vo_a):
                ring_b = sysm.vos[vo_b].ring
                k = min(contacts_per_vo_pair, ring_b.size())
                sysm.dfl_contacts[(vo_a, vo_b)] = rng_proto.sample(
                    sorted(ring_b.nodes), k)
    elif method == MethodId.DSP:
        for vo_id in graph.vo_ids():
            ring = sysm.vos[vo_id].ring
            sysm.sp[vo_id] = ring.live_after(rng_proto.randrange(ID_SPACE))
    elif method == MethodId.D2B2:
        for vo_id in graph.vo_ids():
            ring = sysm.vos[vo_id].ring
            for direction in (-1, 1):
                if vo_id + direction in sysm.vos:
                    sysm.gw[(vo_id, direction)] = ring.live_after(
                        rng_proto.randrange(ID_SPACE))

    sysm.protocol = make_protocol(method, sysm)
    return sysm


# -- churn -------------------------------------------------------------------


def churn_join(sysm: System, vo_id: int) -> PeerId:
    """One peer joins `vo_id`: ring insertion charged as ring maintenance,
    then the method's own addressing upkeep."""
    ring = sysm.vos[vo_id].ring
    boot = ring.any_node() if ring.size() else None
    report = ring.join(boot)
    peer = PeerId(vo_id, report.node)
    sysm.engine.count(DHT_MAINTENANCE, report.messages, kind="ring_join",
                      src=peer.label())
    sysm.protocol.after_join(peer)
    return peer


def churn_leave(sysm: System, peer: PeerId) -> None:
    """One peer departs gracefully: method-specific eager maintenance first
    (nothing, for the lazy method), then the ring handover, then any branch
    state stranded at the peer is resolved."""
    sysm.protocol.before_leave(peer)
    friendly_leave(sysm, peer)
    sysm.protocol.resolve_departed(peer)


def _eligible_victims(sysm: System) -> list[PeerId]:
    out = []
    for vo_id in sysm.graph.vo_ids():
        ring = sysm.vos[vo_id].ring
        if ring.size() < 3:
            continue  # never drain a ring to a sole survivor
        out.extend(PeerId(vo_id, nid) for nid in sorted(ring.nodes))
    return out


def _leave_random(sysm: System) -> None:
    victims = _eligible_victims(sysm)
    if victims:
        churn_leave(sysm, sysm.rng_churn.choice(victims))


def _join_random(sysm: System) -> None:
    vo_id = sysm.rng_churn.choice(sysm.graph.vo_ids())
    churn_join(sysm, vo_id)


def _session_expiry(sysm: System, churn: ChurnModel) -> None:
    """Session end: a fixed fraction of each VO departs, immediately replaced
    by fresh peers."""
    for vo_id in sysm.graph.vo_ids():
        ring = sysm.vos[vo_id].ring
        k = int(round(churn.churn_frac * ring.size()))
        k = min(k, max(0, ring.size() - 2))
        if k <= 0:
            continue
        victims = sysm.rng_churn.sample(
            [PeerId(vo_id, nid) for nid in sorted(ring.nodes)], k)
        for victim in victims:
            churn_leave(sysm, victim)
        for _ in range(k):
            churn_join(sysm, vo_id)


def inject_churn(sysm: System, churn: ChurnModel, start_ms: float = 0.0) -> int:
    """Schedule the churn workload; returns the number of scheduled events."""
    if churn.mode == "none" or (churn.mode == "count" and churn.count <= 0):
        return 0
    eng = sysm.engine
    if churn.mode == "count":
        n = 0
        for _ in range(churn.count):
            eng.schedule_at(start_ms + sysm.rng_churn.uniform(0.0, churn.window_ms),
                            _leave_random, sysm)
            n += 1
        for _ in range(churn.count):
            eng.schedule_at(start_ms + sysm.rng_churn.uniform(0.0, churn.window_ms),
                            _join_random, sysm)
            n += 1
        return n
    # session mode: one batch expiry at the session deadline
    t = start_ms + churn.session_frac * churn.window_ms
    eng.schedule_at(t, _session_expiry, sysm, churn)
    return 1


# -- query workload -----------------------------------------------------------


def inject_query_load(sysm: System, rate_qps_per_peer: float, duration_ms: float,
                      start_ms: float = 0.0) -> int:
    """Every live peer submits `rate` queries per second for the window, each
    slot jittered uniformly inside its interval; concepts are drawn uniformly
    from the origin VO's vocabulary. Returns the number of submissions."""
    if rate_qps_per_peer <= 0 or duration_ms <= 0:
        return 0
    rng = sysm.rng_workload
    interval = 1000.0 / rate_qps_per_peer
    count = 0
    for peer in sysm.live_peers():
        slots = sysm.slots_for_vo[peer.vo]
        k = 0
        while k * interval < duration_ms:
            t = start_ms + (k + rng.random()) * interval
            concept = concept_name(rng.choice(slots), peer.vo)
            sysm.engine.schedule_at(t, sysm.protocol.submit, peer, concept)
            count += 1
            k += 1
    return count


def inject_single_queries(sysm: System, count: int, spacing_ms: float = 500.0,
                          start_ms: float = 0.0) -> int:
    """Well-separated probe queries from random origins: each one finishes
    long before the next starts, so measured times are contention-free."""
    rng = sysm.rng_workload
    peers = sysm.live_peers()
    for k in range(count):
        origin = rng.choice(peers)
        concept = concept_name(rng.choice(sysm.slots_for_vo[origin.vo]), origin.vo)
        sysm.engine.schedule_at(start_ms + k * spacing_ms, sysm.protocol.submit,
                                origin, concept)
    return count
