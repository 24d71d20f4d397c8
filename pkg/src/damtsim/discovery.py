"""Four discovery methods over the same simulated substrate.

All methods answer the same question (which data sources, anywhere in the
network, hold the queried concept under their own ontology's vocabulary) but
move the query differently:

* damt: forward along ontology mapping links, one access point per neighbor
  VO, translating at each edge; a hop-budget equal to the mapping-graph
  diameter bounds propagation; stale access points are repaired lazily at
  query time. The peer looks up its own ring first, then forwards.
* dflooding: every VO keeps a small designated-contact set in every other VO
  and sends one translated copy of the query straight to each; contacts only
  answer, they never re-forward.
* dsp: one super peer per VO; queries go to the local super peer which floods
  the super-peer mesh; duplicate arrivals are answered with an empty ack.
* d2b2: VOs form a chain; queries relay gateway-to-gateway in both directions,
  each VO looking up locally before pushing the query further along.

Branch bookkeeping is shared: each processing step is a frame; a frame closes
once its own work and all child branches have reported, then answers its
parent (merge-at-parent aggregation). The origin's frame closing completes
the query.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .chord import SourceMetadata
from .engine import DHT_ROUTING, INTER_VO_QUERY, INTER_VO_RESPONSE, ADDRESSING_MAINTENANCE
from .ontology import VoPath
from .overlay import (
    LIVE,
    PeerId,
    VoDisconnected,
    define_access_points,
    repair_access_point,
)

MAX_SEND_ATTEMPTS = 3


class DiscoveryError(Exception):
    pass


class MethodId(str, Enum):
    DAMT = "damt"
    DSP = "dsp"
    D2B2 = "d2b2"
    DFLOODING = "dflooding"


@dataclass(frozen=True)
class ResultItem:
    """One discovered source plus the mapping-link path that reached it."""

    meta: SourceMetadata
    path: VoPath


@dataclass
class DiscoveryResponse:
    query_id: int
    concept: str
    origin: PeerId
    results: frozenset[ResultItem]
    completed_at: float
    partial: bool
    warnings: tuple[str, ...]


class QueryState:
    """Mutable per-query record shared by all frames of one query."""

    __slots__ = ("query_id", "concept", "origin", "submitted_at", "results",
                 "warnings", "done", "completed_at", "scratch")

    def __init__(self, query_id: int, concept: str, origin: PeerId, submitted_at: float):
        self.query_id = query_id
        self.concept = concept
        self.origin = origin
        self.submitted_at = submitted_at
        self.results: set[ResultItem] = set()
        self.warnings: list[str] = []
        self.done = False
        self.completed_at = 0.0
        self.scratch: dict = {}

    def response(self) -> DiscoveryResponse:
        if not self.done:
            raise DiscoveryError(f"query {self.query_id} still in flight")
        return DiscoveryResponse(
            self.query_id, self.concept, self.origin, frozenset(self.results),
            self.completed_at, bool(self.warnings), tuple(self.warnings))


class Frame:
    """One processing step of a query at one peer: local work plus a count of
    child branches still owed to it."""

    __slots__ = ("fid", "qs", "peer", "parent", "kind", "concept", "path",
                 "ttl", "outstanding", "own_done", "closed", "results")

    def __init__(self, fid: int, qs: QueryState, peer: PeerId, parent, kind: str,
                 concept: str, path: VoPath, ttl: int):
        self.fid = fid
        self.qs = qs
        self.peer = peer
        self.parent = parent
        self.kind = kind
        self.concept = concept
        self.path = path
        self.ttl = ttl
        self.outstanding = 0
        self.own_done = False
        self.closed = False
        self.results: set[ResultItem] = set()


class BaseProtocol:
    """Frame lifecycle, upstream responses and departure cleanup shared by
    all four methods."""

    method: MethodId

    def __init__(self, sys):
        self.sys = sys
        self.eng = sys.engine
        self._next_qid = 0
        self._next_fid = 0
        self.frames_at: dict[PeerId, dict[int, Frame]] = {}

    # -- frame plumbing ------------------------------------------------------

    def _new_query(self, origin: PeerId, concept: str) -> QueryState:
        self._next_qid += 1
        qs = QueryState(self._next_qid, concept, origin, self.eng.now)
        self.eng.note("query_submit", f"q{qs.query_id} {concept} at {origin.label()}")
        return qs

    def _new_frame(self, qs: QueryState, peer: PeerId, parent, kind: str,
                   concept: str, path: VoPath, ttl: int) -> Frame:
        self._next_fid += 1
        frame = Frame(self._next_fid, qs, peer, parent, kind, concept, path, ttl)
        self.frames_at.setdefault(peer, {})[frame.fid] = frame
        return frame

    def _unregister(self, frame: Frame) -> None:
        held = self.frames_at.get(frame.peer)
        if held is not None:
            held.pop(frame.fid, None)
            if not held:
                del self.frames_at[frame.peer]

    def _try_finish(self, frame: Frame) -> None:
        if frame.closed or not frame.own_done or frame.outstanding > 0:
            return
        frame.closed = True
        self._unregister(frame)
        if frame.parent is None:
            self._finalize(frame.qs, frame.results)
        else:
            self._respond_upstream(frame)

    def _respond_upstream(self, frame: Frame) -> None:
        parent = frame.parent
        net = self.eng.net
        if frame.peer == parent.peer:
            # Same peer handled both stages: local hand-back, no message.
            self.eng.schedule(0.0, self._merge_response, parent, frame.results)
            return
        hop = (net.inter_vo_hop_ms if frame.peer.vo != parent.peer.vo
               else net.intra_vo_hop_ms)
        if self.eng.tracing:
            self.eng.count(INTER_VO_RESPONSE, 1, kind=f"{self.method.value}_response",
                           src=frame.peer.label(), dst=parent.peer.label())
        else:
            self.eng.count(INTER_VO_RESPONSE, 1)
        # Responses are lightweight: one delivery event, no service queueing.
        # A response sent to a peer that departs mid-flight is simply lost;
        # the departure cleanup notifies the rest of the chain.
        self.eng.schedule(hop, self._merge_response, parent, frame.results)

    def _merge_response(self, parent: Frame, results: set[ResultItem]) -> None:
        if parent.closed:
            return
        parent.results |= results
        parent.outstanding -= 1
        self._try_finish(parent)

    def _branch_failed(self, parent: Frame, reason: str) -> None:
        if parent.closed:
            return
        parent.qs.warnings.append(reason)
        parent.outstanding -= 1
        self._try_finish(parent)

    def _finalize(self, qs: QueryState, results: set[ResultItem]) -> None:
        if qs.done:
            return
        qs.results |= results
        qs.done = True
        qs.completed_at = self.eng.now
        from .engine import QueryRecord
        self.eng.ledger.query_records.append(QueryRecord(
            qs.query_id, qs.origin.label(), qs.submitted_at, qs.completed_at,
            len(qs.results), bool(qs.warnings), tuple(qs.warnings)))
        self.eng.note("query_complete",
                      f"q{qs.query_id} results={len(qs.results)} partial={bool(qs.warnings)}")

    def resolve_departed(self, peer: PeerId) -> None:
        """A peer left while holding in-flight frames: every waiting parent
        learns about the lost branch after one round-trip budget, as if its
        own patience ran out."""
        held = self.frames_at.pop(peer, None)
        if not held:
            return
        rtt = self.eng.net.rtt_budget_ms
        for fid in sorted(held):
            frame = held[fid]
            if frame.closed:
                continue
            frame.closed = True
            if frame.parent is None:
                frame.qs.warnings.append("origin departed mid-query")
                self._finalize(frame.qs, frame.results)
            else:
                self.eng.schedule(rtt, self._branch_failed, frame.parent,
                                  f"branch lost at departed {peer.label()}")

    # -- local ring work -----------------------------------------------------

    def _local_lookup(self, frame: Frame, then) -> None:
        """Resolve the concept on the peer's own ring; the whole multi-hop
        lookup is charged as one bundle and takes one intra-VO hop per
        message before `then(found)` runs."""
        ring = self.sys.vos[frame.peer.vo].ring
        _, found, msgs = ring.lookup(frame.peer.node, frame.concept)
        if self.eng.tracing:
            self.eng.count(DHT_ROUTING, msgs, kind="lookup", src=frame.peer.label(),
                           detail=f"q{frame.qs.query_id}")
        else:
            self.eng.count(DHT_ROUTING, msgs)
        self.eng.schedule(msgs * self.eng.net.intra_vo_hop_ms, then, frame, found)

    def _absorb_lookup(self, frame: Frame, found: set[SourceMetadata]) -> None:
        frame.results |= {ResultItem(meta, frame.path) for meta in found}

    # -- entry points (method-specific) ---------------------------------------

    def submit(self, origin: PeerId, concept: str) -> QueryState:
        raise NotImplementedError

    def after_join(self, peer: PeerId) -> None:
        raise NotImplementedError

    def before_leave(self, peer: PeerId) -> None:
        raise NotImplementedError


# ---------------------------------------------------------------------------


class DamtProtocol(BaseProtocol):
    method = MethodId.DAMT

    def submit(self, origin: PeerId, concept: str) -> QueryState:
        qs = self._new_query(origin, concept)
        if not self.sys.is_live(origin):
            self.eng.note("query_dropped", f"q{qs.query_id} origin gone")
            qs.done = True
            qs.completed_at = self.eng.now
            return qs
        frame = self._new_frame(qs, origin, None, "damt", concept, VoPath(),
                                self.sys.graph.diameter())
        self.eng.enqueue_service(origin.key(), self._process, frame)
        return qs

    def _process(self, frame: Frame) -> None:
        if frame.closed:
            return
        self._local_lookup(frame, self._lookup_done)

    def _lookup_done(self, frame: Frame, found: set[SourceMetadata]) -> None:
        if frame.closed:
            return
        self._absorb_lookup(frame, found)
        frame.own_done = True
        here = frame.peer.vo
        if frame.ttl >= 1:
            visited = set(frame.path.visited()) or {here}
            for vo_j in self.sys.graph.neighbors(here):
                if vo_j in visited:
                    continue
                if self.sys.vos[vo_j].status != LIVE:
                    frame.qs.warnings.append(f"vo {vo_j} marked disconnected, branch skipped")
                    continue
                translated = self.sys.graph.translate(frame.concept, here, vo_j)
                if translated is None:
                    continue  # concept absent from the neighbor's vocabulary
                frame.outstanding += 1
                self._forward(frame, vo_j, translated, 1)
        self._try_finish(frame)

    def _forward(self, frame: Frame, vo_j: int, concept: str, attempt: int) -> None:
        if frame.closed:
            return
        entry = self.sys.ap.get(frame.peer, {}).get(vo_j)
        if entry is None:
            self._repair_and_retry(frame, vo_j, concept, attempt)
            return
        target = PeerId(vo_j, entry)
        net = self.eng.net
        if self.eng.tracing:
            self.eng.count(INTER_VO_QUERY, 1, kind="damt_forward",
                           src=frame.peer.label(), dst=target.label(),
                           detail=f"q{frame.qs.query_id} path_len={len(frame.path) + 1}")
        else:
            self.eng.count(INTER_VO_QUERY, 1)
        if self.sys.is_live(target):
            self.eng.schedule(net.inter_vo_hop_ms, self._arrive, frame, vo_j,
                              concept, target)
        else:
            # Unanswered forward: the sender notices after its patience budget
            # and falls back to a lazy repair of the stale entry.
            self.eng.schedule(net.rtt_budget_ms, self._repair_and_retry,
                              frame, vo_j, concept, attempt)

    def _arrive(self, frame: Frame, vo_j: int, concept: str, target: PeerId) -> None:
        if not self.sys.is_live(target):
            remainder = self.eng.net.rtt_budget_ms - self.eng.net.inter_vo_hop_ms
            self.eng.schedule(remainder, self._repair_and_retry, frame, vo_j,
                              concept, 1)
            return
        child = self._new_frame(frame.qs, target, frame, "damt", concept,
                                frame.path.extend(frame.peer.vo, vo_j),
                                frame.ttl - 1)
        self.eng.enqueue_service(target.key(), self._process, child)

    def _repair_and_retry(self, frame: Frame, vo_j: int, concept: str, attempt: int) -> None:
        if frame.closed:
            return
        if attempt >= MAX_SEND_ATTEMPTS:
            self._branch_failed(frame, f"branch to vo {vo_j} abandoned after retries")
            return
        try:
            rep = repair_access_point(self.sys, frame.peer, vo_j)
        except VoDisconnected as exc:
            self.eng.schedule(exc.elapsed_ms, self._branch_failed, frame,
                              f"vo {vo_j} declared disconnected during repair")
            return
        self.eng.schedule(rep.elapsed_ms, self._forward, frame, vo_j, concept,
                          attempt + 1)

    def after_join(self, peer: PeerId) -> None:
        report = define_access_points(self.sys, peer)
        for vo_j in report.failures:
            self.eng.note("ap_define_failed", f"{peer.label()} -> vo {vo_j}")

    def before_leave(self, peer: PeerId) -> None:
        # Friendly departure: the ring is handed over in overlay/friendly_leave;
        # nobody outside this VO hears anything.
        return


# ---------------------------------------------------------------------------


class DFloodingProtocol(BaseProtocol):
    method = MethodId.DFLOODING

    def submit(self, origin: PeerId, concept: str) -> QueryState:
        qs = self._new_query(origin, concept)
        if not self.sys.is_live(origin):
            self.eng.note("query_dropped", f"q{qs.query_id} origin gone")
            qs.done = True
            qs.completed_at = self.eng.now
            return qs
        frame = self._new_frame(qs, origin, None, "dfl", concept, VoPath(), 1)
        self.eng.enqueue_service(origin.key(), self._process_root, frame)
        return qs

    def _contact_for(self, origin: PeerId, vo_j: int) -> PeerId:
        contacts = self.sys.dfl_contacts[(origin.vo, vo_j)]
        return PeerId(vo_j, contacts[origin.node % len(contacts)])

    def _process_root(self, frame: Frame) -> None:
        if frame.closed:
            return
        here = frame.peer.vo
        # Contacts are addressed immediately; the local lookup runs while the
        # copies are in flight.
        for vo_j in self.sys.graph.neighbors(here):
            translated = self.sys.graph.translate(frame.concept, here, vo_j)
            if translated is None:
                continue
            frame.outstanding += 1
            self._send_copy(frame, vo_j, translated, 1)
        self._local_lookup(frame, self._root_lookup_done)

    def _root_lookup_done(self, frame: Frame, found: set[SourceMetadata]) -> None:
        if frame.closed:
            return
        self._absorb_lookup(frame, found)
        frame.own_done = True
        self._try_finish(frame)

    def _send_copy(self, frame: Frame, vo_j: int, concept: str, attempt: int) -> None:
        if frame.closed:
            return
        target = self._contact_for(frame.peer, vo_j)
        net = self.eng.net
        if self.eng.tracing:
            self.eng.count(INTER_VO_QUERY, 1, kind="dfl_copy", src=frame.peer.label(),
                           dst=target.label(), detail=f"q{frame.qs.query_id}")
        else:
            self.eng.count(INTER_VO_QUERY, 1)
        if self.sys.is_live(target):
            self.eng.schedule(net.inter_vo_hop_ms, self._arrive, frame, vo_j,
                              concept, target)
        else:
            self.eng.schedule(net.rtt_budget_ms, self._copy_timeout, frame,
                              vo_j, concept, attempt, target)

    def _arrive(self, frame: Frame, vo_j: int, concept: str, target: PeerId) -> None:
        if not self.sys.is_live(target):
            remainder = self.eng.net.rtt_budget_ms - self.eng.net.inter_vo_hop_ms
            self.eng.schedule(remainder, self._copy_timeout, frame, vo_j,
                              concept, 1, target)
            return
        child = self._new_frame(frame.qs, target, frame, "dfl_contact", concept,
                                frame.path.extend(frame.peer.vo, vo_j), 0)
        self.eng.enqueue_service(target.key(), self._process_contact, child)

    def _copy_timeout(self, frame: Frame, vo_j: int, concept: str, attempt: int,
                      dead: PeerId) -> None:
        if frame.closed:
            return
        if attempt >= MAX_SEND_ATTEMPTS:
            self._branch_failed(frame, f"contact in vo {vo_j} kept failing")
            return
        fresh = self._contact_for(frame.peer, vo_j)
        if fresh == dead:
            # Designation was not repaired (should not happen under eager
            # maintenance); give the branch up rather than loop.
            self._branch_failed(frame, f"contact in vo {vo_j} unrecoverable")
            return
        self._send_copy(frame, vo_j, concept, attempt + 1)

    def _process_contact(self, frame: Frame) -> None:
        if frame.closed:
            return
        self._local_lookup(frame, self._contact_lookup_done)

    def _contact_lookup_done(self, frame: Frame, found: set[SourceMetadata]) -> None:
        if frame.closed:
            return
        self._absorb_lookup(frame, found)
        frame.own_done = True
        self._try_finish(frame)  # contacts never re-forward

    def after_join(self, peer: PeerId) -> None:
        # Fetch the designated-contact snapshot from one ring mate.
        self.eng.count(ADDRESSING_MAINTENANCE, 2, kind="dfl_fetch_contacts",
                       src=peer.label())

    def before_leave(self, peer: PeerId) -> None:
        sys = self.sys
        # Departure flood: one carrier copy into every other VO, then the
        # receiving designated contact rebroadcasts internally so every peer
        # can drop the departing entry. The rebroadcast is worked off at the
        # contact's service queue.
        carriers = 0
        for vo_j in sys.graph.vo_ids():
            if vo_j == peer.vo:
                continue
            carriers += 1
            fanout = sys.vos[vo_j].ring.size() - 1
            if fanout <= 0:
                continue
            contacts = sys.dfl_contacts[(peer.vo, vo_j)]
            entry = PeerId(vo_j, contacts[peer.node % len(contacts)])
            self.eng.enqueue_batch(
                entry.key(), fanout, self.eng.count, ADDRESSING_MAINTENANCE,
                fanout, "dfl_rebroadcast", entry.label())
        if carriers:
            self.eng.count(ADDRESSING_MAINTENANCE, carriers,
                           kind="dfl_departure_flood", src=peer.label())
        # Re-designate: any contact set naming the departing peer promotes its
        # ring successor (two messages per affected set: offer and accept).
        ring = sys.vos[peer.vo].ring
        repl = None
        patched = 0
        for (vo_a, vo_b), contacts in sorted(sys.dfl_contacts.items()):
            if vo_b != peer.vo or peer.node not in contacts:
                continue
            if repl is None:
                repl = ring.live_after(peer.node + 1)
            contacts[contacts.index(peer.node)] = repl
            patched += 1
        if patched:
            self.eng.count(ADDRESSING_MAINTENANCE, 2 * patched,
                           kind="dfl_redesignate", src=peer.label())


# ---------------------------------------------------------------------------


class DspProtocol(BaseProtocol):
    method = MethodId.DSP

    def submit(self, origin: PeerId, concept: str) -> QueryState:
        qs = self._new_query(origin, concept)
        if not self.sys.is_live(origin):
            self.eng.note("query_dropped", f"q{qs.query_id} origin gone")
            qs.done = True
            qs.completed_at = self.eng.now
            return qs
        qs.scratch["seen"] = set()
        frame = self._new_frame(qs, origin, None, "dsp_origin", concept, VoPath(), 0)
        self.eng.enqueue_service(origin.key(), self._process_origin, frame)
        return qs

    def _process_origin(self, frame: Frame) -> None:
        if frame.closed:
            return
        frame.own_done = True
        frame.outstanding += 1
        self._send_to_sp(frame, frame.peer.vo, frame.concept, VoPath(),
                         self.sys.graph.diameter(), 1)

    def _send_to_sp(self, frame: Frame, vo_j: int, concept: str, path: VoPath,
                    ttl: int, attempt: int) -> None:
        """Route a query copy to the super peer of `vo_j`; `frame` waits for
        the answer."""
        if frame.closed:
            return
        sp_node = self.sys.sp[vo_j]
        target = PeerId(vo_j, sp_node)
        net = self.eng.net
        if target == frame.peer:
            # The origin happens to be its own super peer: no wire hop, but
            # the super-peer stage still passes through the service queue.
            child = self._new_frame(frame.qs, target, frame, "dsp_sp", concept, path, ttl)
            self.eng.enqueue_service(target.key(), self._process_sp, child)
            return
        hop = net.inter_vo_hop_ms if frame.peer.vo != vo_j else net.intra_vo_hop_ms
        if self.eng.tracing:
            self.eng.count(INTER_VO_QUERY, 1, kind="dsp_relay", src=frame.peer.label(),
                           dst=target.label(), detail=f"q{frame.qs.query_id}")
        else:
            self.eng.count(INTER_VO_QUERY, 1)
        if self.sys.is_live(target):
            self.eng.schedule(hop, self._arrive_sp, frame, vo_j, concept, path,
                              ttl, target)
        else:
            self.eng.schedule(net.rtt_budget_ms, self._sp_timeout, frame, vo_j,
                              concept, path, ttl, attempt, target)

    def _arrive_sp(self, frame: Frame, vo_j: int, concept: str, path: VoPath,
                   ttl: int, target: PeerId) -> None:
        if not self.sys.is_live(target):
            remainder = self.eng.net.rtt_budget_ms - self.eng.net.inter_vo_hop_ms
            self.eng.schedule(max(0.0, remainder), self._sp_timeout, frame, vo_j,
                              concept, path, ttl, 1, target)
            return
        child = self._new_frame(frame.qs, target, frame, "dsp_sp", concept, path, ttl)
        self.eng.enqueue_service(target.key(), self._process_sp, child)

    def _sp_timeout(self, frame: Frame, vo_j: int, concept: str, path: VoPath,
                    ttl: int, attempt: int, dead: PeerId) -> None:
        if frame.closed:
            return
        if attempt >= MAX_SEND_ATTEMPTS or PeerId(vo_j, self.sys.sp[vo_j]) == dead:
            self._branch_failed(frame, f"super peer of vo {vo_j} unreachable")
            return
        self._send_to_sp(frame, vo_j, concept, path, ttl, attempt + 1)

    def _process_sp(self, frame: Frame) -> None:
        if frame.closed:
            return
        seen: set[int] = frame.qs.scratch["seen"]
        here = frame.peer.vo
        if here in seen:
            # Duplicate flood arrival: answer with an empty ack right away.
            frame.own_done = True
            self._try_finish(frame)
            return
        seen.add(here)
        if frame.ttl >= 1:
            came_from = frame.path.steps[-1][0] if frame.path.steps else None
            for vo_j in self.sys.graph.neighbors(here):
                if vo_j == came_from:
                    continue
                translated = self.sys.graph.translate(frame.concept, here, vo_j)
                if translated is None:
                    continue
                frame.outstanding += 1
                self._send_to_sp(frame, vo_j, translated,
                                 frame.path.extend(here, vo_j), frame.ttl - 1, 1)
        self._local_lookup(frame, self._sp_lookup_done)

    def _sp_lookup_done(self, frame: Frame, found: set[SourceMetadata]) -> None:
        if frame.closed:
            return
        self._absorb_lookup(frame, found)
        frame.own_done = True
        self._try_finish(frame)

    def after_join(self, peer: PeerId) -> None:
        self._membership_event(peer, election=False)

    def before_leave(self, peer: PeerId) -> None:
        sys = self.sys
        election = False
        if sys.sp[peer.vo] == peer.node:
            # The super peer itself is leaving: its ring successor takes over
            # and the handover is announced before the departure notice.
            ring = sys.vos[peer.vo].ring
            sys.sp[peer.vo] = ring.live_after(peer.node + 1)
            election = True
        self._membership_event(peer, election=election)

    def _membership_event(self, peer: PeerId, election: bool) -> None:
        """Eager index maintenance: report to the local super peer, flood the
        super-peer mesh, then every super peer rebroadcasts to its own members.
        The rebroadcasts pass through each super peer's service queue, so under
        heavy churn they finish long after the event itself."""
        sys = self.sys
        g = sys.graph
        vo = peer.vo
        n = 1  # report to the local super peer
        n += 2 * g.edge_count() - (len(g.vo_ids()) - 1)  # mesh flood
        if election:
            n += sys.vos[vo].ring.size() - 1  # takeover announcement
            n += 2 * len(g.neighbors(vo))  # re-link with neighbor super peers
            n += 2  # index handover bundle
        self.eng.count(ADDRESSING_MAINTENANCE, n, kind="dsp_membership",
                       src=peer.label(), detail=f"election={election}")
        for vo_j in g.vo_ids():
            fanout = sys.vos[vo_j].ring.size() - 1
            if fanout <= 0:
                continue
            sp_key = PeerId(vo_j, sys.sp[vo_j]).key()
            self.eng.enqueue_batch(
                sp_key, fanout, self.eng.count, ADDRESSING_MAINTENANCE, fanout,
                "dsp_rebroadcast", f"sp.v{vo_j}")


# ---------------------------------------------------------------------------


class D2b2Protocol(BaseProtocol):
    method = MethodId.D2B2

    def submit(self, origin: PeerId, concept: str) -> QueryState:
        qs = self._new_query(origin, concept)
        if not self.sys.is_live(origin):
            self.eng.note("query_dropped", f"q{qs.query_id} origin gone")
            qs.done = True
            qs.completed_at = self.eng.now
            return qs
        frame = self._new_frame(qs, origin, None, "d2b2_origin", concept,
                                VoPath(), self.sys.graph.diameter())
        self.eng.enqueue_service(origin.key(), self._process_origin, frame)
        return qs

    def _chain_next(self, vo: int, direction: int) -> int | None:
        nxt = vo + direction
        return nxt if nxt in self.sys.vos else None

    def _process_origin(self, frame: Frame) -> None:
        if frame.closed:
            return
        self._local_lookup(frame, self._origin_lookup_done)

    def _origin_lookup_done(self, frame: Frame, found) -> None:
        if frame.closed:
            return
        self._absorb_lookup(frame, found)
        frame.own_done = True
        here = frame.peer.vo
        for direction in (-1, 1):
            if self._chain_next(here, direction) is None:
                continue
            frame.outstanding += 1
            self._to_exit_gateway(frame, direction, frame.concept, frame.path,
                                  frame.ttl)
        self._try_finish(frame)

    def _to_exit_gateway(self, frame: Frame, direction: int, concept: str,
                         path: VoPath, ttl: int) -> None:
        """Hand the query to this VO's gateway facing `direction`, which will
        push it across the next mapping link."""
        if frame.closed:
            return
        vo = frame.peer.vo
        gw_node = self.sys.gw[(vo, direction)]
        target = PeerId(vo, gw_node)
        if target == frame.peer:
            child = self._new_frame(frame.qs, target, frame, "d2b2_out", concept,
                                    path, ttl)
            self._queue_out(child, direction)
            return
        net = self.eng.net
        if self.eng.tracing:
            self.eng.count(INTER_VO_QUERY, 1, kind="d2b2_to_gateway",
                           src=frame.peer.label(), dst=target.label(),
                           detail=f"q{frame.qs.query_id}")
        else:
            self.eng.count(INTER_VO_QUERY, 1)
        if self.sys.is_live(target):
            self.eng.schedule(net.intra_vo_hop_ms, self._arrive_out, frame,
                              direction, concept, path, ttl, target)
        else:
            self.eng.schedule(net.rtt_budget_ms, self._gateway_timeout, frame,
                              direction, concept, path, ttl, target)

    def _arrive_out(self, frame: Frame, direction: int, concept: str,
                    path: VoPath, ttl: int, target: PeerId) -> None:
        if not self.sys.is_live(target):
            remainder = self.eng.net.rtt_budget_ms - self.eng.net.intra_vo_hop_ms
            self.eng.schedule(remainder, self._gateway_timeout, frame, direction,
                              concept, path, ttl, target)
            return
        child = self._new_frame(frame.qs, target, frame, "d2b2_out", concept,
                                path, ttl)
        self._queue_out(child, direction)

    def _queue_out(self, child: Frame, direction: int) -> None:
        self.eng.enqueue_service(child.peer.key(), self._process_out, child,
                                 direction)

    def _gateway_timeout(self, frame: Frame, direction: int, concept: str,
                         path: VoPath, ttl: int, dead: PeerId) -> None:
        if frame.closed:
            return
        fresh = self.sys.gw[(dead.vo, direction)]
        if fresh == dead.node:
            self._branch_failed(frame, f"gateway of vo {dead.vo} unrecoverable")
            return
        self._to_exit_gateway(frame, direction, concept, path, ttl)

    def _process_out(self, frame: Frame, direction: int) -> None:
        """Exit-gateway stage: translate across the chain edge and push the
        query to the neighboring VO's facing gateway."""
        if frame.closed:
            return
        frame.own_done = True
        here = frame.peer.vo
        nxt = self._chain_next(here, direction)
        if nxt is None or frame.ttl < 1:
            self._try_finish(frame)
            return
        translated = self.sys.graph.translate(frame.concept, here, nxt)
        if translated is None:
            self._try_finish(frame)
            return
        entry_node = self.sys.gw[(nxt, -direction)]
        target = PeerId(nxt, entry_node)
        net = self.eng.net
        frame.outstanding += 1
        if self.eng.tracing:
            self.eng.count(INTER_VO_QUERY, 1, kind="d2b2_relay",
                           src=frame.peer.label(), dst=target.label(),
                           detail=f"q{frame.qs.query_id} path_len={len(frame.path) + 1}")
        else:
            self.eng.count(INTER_VO_QUERY, 1)
        if self.sys.is_live(target):
            self.eng.schedule(net.inter_vo_hop_ms, self._arrive_entry, frame,
                              direction, translated, target)
        else:
            self.eng.schedule(net.rtt_budget_ms, self._entry_timeout, frame,
                              direction, translated, target)
        self._try_finish(frame)

    def _arrive_entry(self, frame: Frame, direction: int, concept: str,
                      target: PeerId) -> None:
        if not self.sys.is_live(target):
            remainder = self.eng.net.rtt_budget_ms - self.eng.net.inter_vo_hop_ms
            self.eng.schedule(remainder, self._entry_timeout, frame, direction,
                              concept, target)
            return
        here = frame.peer.vo
        child = self._new_frame(frame.qs, target, frame, "d2b2_entry", concept,
                                frame.path.extend(here, target.vo), frame.ttl - 1)
        self.eng.enqueue_service(target.key(), self._process_entry, child, direction)

    def _entry_timeout(self, frame: Frame, direction: int, concept: str,
                       dead: PeerId) -> None:
        if frame.closed:
            return
        fresh = self.sys.gw[(dead.vo, -direction)]
        if fresh == dead.node:
            self._branch_failed(frame, f"entry gateway of vo {dead.vo} unrecoverable")
            return
        here = frame.peer.vo
        target = PeerId(dead.vo, fresh)
        net = self.eng.net
        self.eng.count(INTER_VO_QUERY, 1, kind="d2b2_relay",
                       src=frame.peer.label(), dst=target.label(),
                       detail=f"q{frame.qs.query_id} retry")
        if self.sys.is_live(target):
            self.eng.schedule(net.inter_vo_hop_ms, self._arrive_entry, frame,
                              direction, concept, target)
        else:
            self._branch_failed(frame, f"entry gateway of vo {dead.vo} unreachable twice")

    def _process_entry(self, frame: Frame, direction: int) -> None:
        if frame.closed:
            return
        self._local_lookup(frame, lambda f, found, d=direction:
                           self._entry_lookup_done(f, found, d))

    def _entry_lookup_done(self, frame: Frame, found, direction: int) -> None:
        if frame.closed:
            return
        self._absorb_lookup(frame, found)
        frame.own_done = True
        if self._chain_next(frame.peer.vo, direction) is not None and frame.ttl >= 1:
            frame.outstanding += 1
            self._to_exit_gateway(frame, direction, frame.concept, frame.path,
                                  frame.ttl)
        self._try_finish(frame)

    def after_join(self, peer: PeerId) -> None:
        self._resync(peer)

    def before_leave(self, peer: PeerId) -> None:
        sys = self.sys
        ring = sys.vos[peer.vo].ring
        for direction in (-1, 1):
            key = (peer.vo, direction)
            if key in sys.gw and sys.gw[key] == peer.node:
                sys.gw[key] = ring.live_after(peer.node + 1)
                self.eng.count(ADDRESSING_MAINTENANCE, 2, kind="d2b2_gw_handover",
                               src=peer.label())
        self._resync(peer)

    def _resync(self, peer: PeerId) -> None:
        """Any membership change ripples down the whole chain: a relay to each
        VO plus a pairwise refresh between every adjacent pair. Each pair's
        refresh is worked off by the two gateways bridging it, so refreshes
        pile up behind the gateways' service queues under churn."""
        sys = self.sys
        vo_ids = sys.graph.vo_ids()
        self.eng.count(ADDRESSING_MAINTENANCE, len(vo_ids) - 1,
                       kind="d2b2_chain_relay", src=peer.label())
        for a, b in zip(vo_ids, vo_ids[1:]):
            pair = sys.vos[a].ring.size() + sys.vos[b].ring.size()
            gw_key = PeerId(a, sys.gw[(a, 1)]).key()
            self.eng.enqueue_batch(
                gw_key, pair, self.eng.count, ADDRESSING_MAINTENANCE, pair,
                "d2b2_pair_refresh", f"gw.v{a}+v{b}", workers=2)


# ---------------------------------------------------------------------------


PROTOCOLS = {
    MethodId.DAMT: DamtProtocol,
    MethodId.DSP: DspProtocol,
    MethodId.D2B2: D2b2Protocol,
    MethodId.DFLOODING: DFloodingProtocol,
}


def make_protocol(method: MethodId, sys) -> BaseProtocol:
    return PROTOCOLS[MethodId(method)](sys)
