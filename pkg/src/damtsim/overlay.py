"""Cross-organization addressing layer.

Each peer keeps one access-point entry per neighboring virtual organization
(VO): the id of one remote ring member it can hand queries to. Entries are
built lazily and repaired lazily; a departing peer tells nobody outside its
own ring, so stale entries are only discovered when a query trips over them.

Entry handout uses a per-(origin VO, target VO) rotating cursor: each new
request is answered with the next live ring position after the previous
handout. Walking the target ring clockwise this way keeps the entries held
across an origin VO pairwise distinct whenever the target ring is at least as
large, which spreads forwarded query load instead of funneling it through a
single remote peer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .chord import ID_SPACE
from .engine import ADDRESSING_MAINTENANCE, AP_PROBE, DHT_MAINTENANCE

LIVE = "live"
DISCONNECTED = "disconnected"


class OverlayError(Exception):
    pass


class SoleSurvivorVO(OverlayError):
    """Operation needs another member of the local ring, but there is none."""


class UnreachableNeighborVO(OverlayError):
    """No local peer could supply a live access point for a neighbor VO."""


class VoDisconnected(OverlayError):
    """A whole target VO was declared unreachable during repair. Carries the
    message/latency cost of the failed walk so callers can account for it."""

    def __init__(self, origin_vo: int, target_vo: int, messages: int, elapsed_ms: float):
        super().__init__(f"VO {target_vo} unreachable from VO {origin_vo}")
        self.origin_vo = origin_vo
        self.target_vo = target_vo
        self.messages = messages
        self.elapsed_ms = elapsed_ms


@dataclass(frozen=True, order=True)
class PeerId:
    vo: int
    node: int

    def key(self) -> tuple[int, int]:
        return (self.vo, self.node)

    def label(self) -> str:
        return f"v{self.vo}.n{self.node}"


class VirtualOrganization:
    """One domain ontology's peer group: a ring plus a reachability status.
    `disconnected` is sticky; only an administrative action clears it."""

    def __init__(self, vo_id: int, ring):
        self.id = vo_id
        self.ring = ring
        self.status = LIVE


@dataclass
class CheckResult:
    alive: bool
    messages: int
    elapsed_ms: float


@dataclass
class ApReport:
    entries: dict[int, int]
    messages: int
    elapsed_ms: float
    failures: tuple[int, ...] = ()


@dataclass
class RepairResult:
    entry: int
    messages: int
    elapsed_ms: float
    probed_dead: int = 0


def check(sys, prober: PeerId, target: PeerId) -> CheckResult:
    """Liveness probe. A live target answers (two messages, one round trip);
    a dead one is charged as a single unanswered probe that burns the full
    round-trip budget before the prober gives up."""
    net = sys.engine.net
    hop = net.inter_vo_hop_ms if prober.vo != target.vo else net.intra_vo_hop_ms
    if sys.is_live(target):
        res = CheckResult(True, 2, 2.0 * hop)
    else:
        res = CheckResult(False, 1, net.rtt_budget_ms)
    sys.engine.count(AP_PROBE, res.messages, kind="check",
                     src=prober.label(), dst=target.label())
    return res


def referral_handout(sys, origin_vo: int, target_vo: int) -> int:
    """Next access-point entry for the (origin, target) pair: the first live
    node after the cursor, then advance the cursor there."""
    pair = (origin_vo, target_vo)
    ring = sys.vos[target_vo].ring
    cur = sys.ap_cursor.get(pair)
    if cur is None:
        handout = ring.live_after(sys.rng_overlay.randrange(ID_SPACE))
    else:
        handout = ring.live_after((cur + 1) % ID_SPACE)
    sys.ap_cursor[pair] = handout
    return handout


def bootstrap_access_points(sys) -> None:
    """Administrative fill of every table at system construction: peers are
    assigned entries straight from the handout cursors, with no protocol
    traffic, mirroring a network that finished organizing before time zero."""
    for vo_id in sys.graph.vo_ids():
        ring = sys.vos[vo_id].ring
        neighbors = sys.graph.neighbors(vo_id)
        for nid in sorted(ring.nodes):
            peer = PeerId(vo_id, nid)
            table = sys.ap.setdefault(peer, {})
            for vo_j in neighbors:
                table[vo_j] = referral_handout(sys, vo_id, vo_j)


def define_access_points(sys, peer: PeerId) -> ApReport:
    """Build a joining peer's table, one neighbor VO at a time: walk own ring
    successors asking each for its entry, probe the first candidate offered,
    and on a live answer ask that access point for a referral to adopt.

    Neighbor VOs for which the walk exhausts the local ring are reported in
    `failures` and left undefined (a later repair can still fill them).
    """
    net = sys.engine.net
    ring_i = sys.vos[peer.vo].ring
    if ring_i.size() <= 1:
        raise SoleSurvivorVO(f"{peer.label()} has no ring mates to ask")
    entries = sys.ap.setdefault(peer, {})
    messages = 0
    elapsed = 0.0
    failures: list[int] = []
    for vo_j in sys.graph.neighbors(peer.vo):
        if sys.vos[vo_j].status != LIVE:
            failures.append(vo_j)
            continue
        found = None
        following = ring_i.successor_of(peer.node)
        while following != peer.node:
            messages += 2  # ask the next ring mate for its entry, get answer
            elapsed += 2.0 * net.intra_vo_hop_ms
            cand = sys.ap.get(PeerId(peer.vo, following), {}).get(vo_j)
            if cand is not None:
                probe = check(sys, peer, PeerId(vo_j, cand))
                elapsed += probe.elapsed_ms
                if probe.alive:
                    found = cand
                    break
            following = ring_i.successor_of(following)
        if found is None:
            failures.append(vo_j)
            continue
        messages += 2  # referral request to the live access point, and reply
        elapsed += 2.0 * net.inter_vo_hop_ms
        entries[vo_j] = referral_handout(sys, peer.vo, vo_j)
    sys.engine.count(ADDRESSING_MAINTENANCE, messages, kind="ap_define",
                     src=peer.label())
    return ApReport(entries, messages, elapsed, tuple(failures))


def repair_access_point(sys, peer: PeerId, target_vo: int) -> RepairResult:
    """Lazy repair after a stale entry: walk own ring successors, probe each
    candidate entry offered, adopt a referral from the first live one.

    Raises VoDisconnected (and flips the target VO's status) if the walk
    comes back around without finding any live access point.
    """
    net = sys.engine.net
    ring_i = sys.vos[peer.vo].ring
    messages = 0
    elapsed = 0.0
    probed_dead = 0
    if sys.vos[target_vo].status == LIVE:
        following = ring_i.successor_of(peer.node)
        while following != peer.node:
            messages += 2
            elapsed += 2.0 * net.intra_vo_hop_ms
            cand = sys.ap.get(PeerId(peer.vo, following), {}).get(target_vo)
            if cand is not None:
                probe = check(sys, peer, PeerId(target_vo, cand))
                elapsed += probe.elapsed_ms
                if probe.alive:
                    messages += 2
                    elapsed += 2.0 * net.inter_vo_hop_ms
                    entry = referral_handout(sys, peer.vo, target_vo)
                    sys.ap.setdefault(peer, {})[target_vo] = entry
                    sys.engine.count(ADDRESSING_MAINTENANCE, messages,
                                     kind="ap_repair", src=peer.label(),
                                     detail=f"target_vo={target_vo}")
                    return RepairResult(entry, messages, elapsed, probed_dead)
                probed_dead += 1
            following = ring_i.successor_of(following)
    sys.engine.count(ADDRESSING_MAINTENANCE, messages, kind="ap_repair_failed",
                     src=peer.label(), detail=f"target_vo={target_vo}")
    sys.vos[target_vo].status = DISCONNECTED
    raise VoDisconnected(peer.vo, target_vo, messages, elapsed)


def friendly_leave(sys, peer: PeerId) -> int:
    """Graceful departure: hand the ring over (keys, links, finger updates)
    and go. Deliberately silent toward every other VO; remote tables that
    still name this peer stay stale until a query-time repair notices."""
    ring = sys.vos[peer.vo].ring
    if ring.size() <= 1:
        raise SoleSurvivorVO(f"{peer.label()} is the last member of its ring")
    report = ring.leave(peer.node)
    sys.engine.count(DHT_MAINTENANCE, report.messages, kind="ring_leave",
                     src=peer.label())
    sys.ap.pop(peer, None)
    return report.messages
