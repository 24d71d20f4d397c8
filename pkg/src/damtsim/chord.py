"""Intra-organization distributed hash table: one Chord-style ring per VO.

Identifiers live on a 2**M_BITS circle. Every node keeps successor,
predecessor and M_BITS finger entries; fingers are repaired eagerly and
synchronously at join/leave, and the repair traffic is what the maintenance
message counters measure. Lookups walk real finger tables so hop counts are
measured, not estimated.

Node ids come from the caller's seeded RNG rather than from hashing peer
names, which keeps ring layouts reproducible per scenario seed.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

M_BITS = 16
ID_SPACE = 1 << M_BITS

NodeId = int


class ChordError(Exception):
    pass


class UnknownNode(ChordError):
    pass


class EmptyRing(ChordError):
    pass


def hash_key(concept: str) -> NodeId:
    """Stable M_BITS-bit digest of a concept identifier (same on every
    platform and run)."""
    digest = hashlib.sha1(concept.encode("utf-8")).digest()
    return int.from_bytes(digest[:2], "big") % ID_SPACE


def _in_open_closed(x: int, a: int, b: int) -> bool:
    """x in (a, b] on the identifier circle."""
    if a < b:
        return a < x <= b
    return x > a or x <= b  # wrapped interval; a == b means the whole circle


def _in_open_open(x: int, a: int, b: int) -> bool:
    """x in (a, b) on the identifier circle."""
    if a < b:
        return a < x < b
    return x > a or x < b


@dataclass(frozen=True)
class SourceMetadata:
    """Description of one published data source."""

    source_id: str
    concept: str
    vo: int


@dataclass
class RingNode:
    id: NodeId
    successor: NodeId
    predecessor: NodeId
    fingers: list[NodeId] = field(default_factory=list)
    store: dict[str, set[SourceMetadata]] = field(default_factory=dict)

    def store_size(self) -> int:
        return sum(len(v) for v in self.store.values())


@dataclass
class MaintenanceReport:
    node: NodeId
    messages: int


class ChordRing:
    """A single ring plus the bookkeeping needed to measure its protocol."""

    def __init__(self, vo_id: int, rng: random.Random):
        self.vo_id = vo_id
        self.rng = rng
        self.nodes: dict[NodeId, RingNode] = {}
        self._sorted: list[NodeId] = []

    # -- construction ------------------------------------------------------

    def _fresh_id(self) -> NodeId:
        if len(self.nodes) >= ID_SPACE:
            raise ChordError("identifier space exhausted")
        while True:
            nid = self.rng.randrange(ID_SPACE)
            if nid not in self.nodes:
                return nid

    def build(self, count: int) -> list[NodeId]:
        """Bootstrap `count` nodes directly (a pre-existing ring; no protocol
        messages are charged for initial construction)."""
        ids = [self._fresh_id() for _ in range(count)]
        for nid in ids:
            self.nodes[nid] = RingNode(nid, nid, nid)
        self._sorted = sorted(self.nodes)
        self._relink_all()
        return ids

    def _relink_all(self) -> None:
        ring = self._sorted
        n = len(ring)
        for i, nid in enumerate(ring):
            node = self.nodes[nid]
            node.successor = ring[(i + 1) % n]
            node.predecessor = ring[(i - 1) % n]
            node.fingers = [self._first_at_or_after((nid + (1 << k)) % ID_SPACE)
                            for k in range(M_BITS)]

    def _first_at_or_after(self, point: int) -> NodeId:
        ring = self._sorted
        if not ring:
            raise EmptyRing(f"ring {self.vo_id} has no nodes")
        lo, hi = 0, len(ring)
        while lo < hi:
            mid = (lo + hi) // 2
            if ring[mid] < point:
                lo = mid + 1
            else:
                hi = mid
        return ring[lo % len(ring)]

    # -- accessors ---------------------------------------------------------

    def is_live(self, nid: NodeId) -> bool:
        return nid in self.nodes

    def node(self, nid: NodeId) -> RingNode:
        try:
            return self.nodes[nid]
        except KeyError:
            raise UnknownNode(f"node {nid} is not in ring {self.vo_id}") from None

    def successor_of(self, nid: NodeId) -> NodeId:
        """The node's ring neighbor (its successor); the anchor every
        access-point walk starts from."""
        return self.node(nid).successor

    def size(self) -> int:
        return len(self.nodes)

    def any_node(self) -> NodeId:
        if not self._sorted:
            raise EmptyRing(f"ring {self.vo_id} has no nodes")
        return self._sorted[0]

    def live_after(self, point: int) -> NodeId:
        """First live node at or clockwise after an id-space point."""
        return self._first_at_or_after(point % ID_SPACE)

    # -- routing -----------------------------------------------------------

    def _closest_preceding(self, node: RingNode, key: int) -> NodeId:
        for k in range(M_BITS - 1, -1, -1):
            f = node.fingers[k]
            if _in_open_open(f, node.id, key):
                return f
        return node.successor

    def route(self, start: NodeId, key: int) -> tuple[NodeId, int]:
        """Finger-table walk to the node responsible for `key`.

        Returns (responsible node, messages). A node answering for its own
        arc costs nothing; otherwise each forwarding step and the final hop
        to the responsible node cost one message each.
        """
        cur = self.node(start)
        if _in_open_closed(key, cur.predecessor, cur.id) or len(self.nodes) == 1:
            return cur.id, 0
        hops = 0
        guard = 0
        while not _in_open_closed(key, cur.id, cur.successor):
            nxt = self._closest_preceding(cur, key)
            if nxt == cur.id:
                break
            cur = self.nodes[nxt]
            hops += 1
            guard += 1
            if guard > len(self.nodes) + M_BITS:
                raise ChordError(f"routing loop for key {key} in ring {self.vo_id}")
        responsible = cur.successor
        if responsible == start:
            return responsible, hops
        return responsible, hops + 1

    def lookup(self, start: NodeId, concept: str) -> tuple[NodeId, set[SourceMetadata], int]:
        """Resolve a concept to its responsible node and stored metadata."""
        responsible, messages = self.route(start, hash_key(concept))
        found = self.nodes[responsible].store.get(concept, set())
        return responsible, set(found), messages

    def publish(self, start: NodeId, meta: SourceMetadata) -> tuple[NodeId, int]:
        responsible, messages = self.route(start, hash_key(meta.concept))
        self.nodes[responsible].store.setdefault(meta.concept, set()).add(meta)
        return responsible, messages

    # -- churn -------------------------------------------------------------

    def join(self, bootstrap: NodeId | None = None) -> MaintenanceReport:
        """Insert one node with eager, synchronous maintenance.

        Message count: successor location, one lookup per finger entry, one
        predecessor search plus notification per finger span of other nodes,
        key handover (one message per non-empty bundle) and the two link
        updates. Empty ring: node simply appears, zero messages.
        """
        nid = self._fresh_id()
        if not self.nodes:
            self.nodes[nid] = RingNode(nid, nid, nid)
            self._sorted = [nid]
            self._relink_all()
            return MaintenanceReport(nid, 0)

        if bootstrap is None:
            bootstrap = self.any_node()
        messages = 0
        _, hops = self.route(bootstrap, nid)
        messages += hops

        old_fingers = {n: list(node.fingers) for n, node in self.nodes.items()}
        self.nodes[nid] = RingNode(nid, nid, nid)
        self._insert_sorted(nid)
        self._relink_all()
        new_node = self.nodes[nid]
        messages += 2  # predecessor/successor link updates

        # finger table construction: one routed lookup per entry
        for k in range(M_BITS):
            _, hops = self.route(nid, (nid + (1 << k)) % ID_SPACE)
            messages += hops
        # update-others: locate the last node before each span, notify on change
        for k in range(M_BITS):
            probe = (nid - (1 << k)) % ID_SPACE
            _, hops = self.route(nid, probe)
            messages += hops
        for n, fingers in old_fingers.items():
            changed = sum(1 for k in range(M_BITS) if self.nodes[n].fingers[k] != fingers[k])
            if changed:
                messages += 1

        moved = self._transfer_arc(new_node)
        if moved:
            messages += 1
        return MaintenanceReport(nid, messages)

    def _insert_sorted(self, nid: NodeId) -> None:
        lo, hi = 0, len(self._sorted)
        while lo < hi:
            mid = (lo + hi) // 2
            if self._sorted[mid] < nid:
                lo = mid + 1
            else:
                hi = mid
        self._sorted.insert(lo, nid)

    def _transfer_arc(self, new_node: RingNode) -> int:
        """Move keys in (predecessor, new] from the successor to the new node."""
        succ = self.nodes[new_node.successor]
        if succ is new_node:
            return 0
        moved = 0
        for concept in list(succ.store):
            if _in_open_closed(hash_key(concept), new_node.predecessor, new_node.id):
                bundle = succ.store.pop(concept)
                new_node.store.setdefault(concept, set()).update(bundle)
                moved += len(bundle)
        return moved

    def leave(self, nid: NodeId) -> MaintenanceReport:
        """Friendly departure: keys hand over to the successor, links relink,
        and every node whose finger table pointed here is found (one
        predecessor search per finger span) and told the replacement."""
        node = self.node(nid)
        messages = 0
        if len(self.nodes) == 1:
            del self.nodes[nid]
            self._sorted = []
            return MaintenanceReport(nid, 0)

        succ = self.nodes[node.successor]
        if node.store:
            for concept, bundle in node.store.items():
                succ.store.setdefault(concept, set()).update(bundle)
            messages += 1  # key bundle handover
        messages += 2  # predecessor/successor relink

        # locate the nodes that may hold a finger to us: one predecessor
        # search per finger span, then one notification per changed table
        for k in range(M_BITS):
            probe = (nid - (1 << k)) % ID_SPACE
            _, hops = self.route(nid, probe)
            messages += hops
        old_fingers = {n: list(other.fingers) for n, other in self.nodes.items() if n != nid}

        del self.nodes[nid]
        self._sorted.remove(nid)
        self._relink_all()

        for n, fingers in old_fingers.items():
            if any(self.nodes[n].fingers[k] != fingers[k] for k in range(M_BITS)):
                messages += 1
        return MaintenanceReport(nid, messages)
