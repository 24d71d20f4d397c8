"""Access-point layer: handout distinctness, probe costs, lazy repair,
silent departure."""

import pytest

from damtsim.engine import (
    ADDRESSING_MAINTENANCE,
    AP_PROBE,
    DHT_MAINTENANCE,
    INTER_VO_QUERY,
    INTER_VO_RESPONSE,
)
from damtsim.overlay import (
    DISCONNECTED,
    PeerId,
    SoleSurvivorVO,
    VoDisconnected,
    check,
    define_access_points,
    friendly_leave,
    referral_handout,
    repair_access_point,
)
from damtsim.system import build_system, churn_join


def damt_system(vo_count=4, peers_per_vo=12, seed=5, **kw):
    return build_system("damt", vo_count=vo_count, peers_per_vo=peers_per_vo,
                        corpus_size=8, seed=seed, **kw)


def entries_toward(sysm, vo_i, vo_j):
    ring = sysm.vos[vo_i].ring
    out = []
    for nid in sorted(ring.nodes):
        table = sysm.ap.get(PeerId(vo_i, nid), {})
        if vo_j in table:
            out.append(table[vo_j])
    return out


def test_bootstrap_tables_cover_every_neighbor_and_stay_distinct():
    sysm = damt_system()
    for vo_i in sysm.graph.vo_ids():
        for vo_j in sysm.graph.neighbors(vo_i):
            entries = entries_toward(sysm, vo_i, vo_j)
            assert len(entries) == sysm.vos[vo_i].ring.size()
            # equal ring sizes: the handout cursor must never repeat itself
            assert len(set(entries)) == len(entries)
            ring_j = sysm.vos[vo_j].ring
            assert all(ring_j.is_live(e) for e in entries)


def test_referral_handout_is_ring_successor_of_previous():
    sysm = damt_system()
    vo_i = 0
    vo_j = sysm.graph.neighbors(0)[0]
    ring_j = sysm.vos[vo_j].ring
    prev = sysm.ap_cursor[(vo_i, vo_j)]
    nxt = referral_handout(sysm, vo_i, vo_j)
    assert nxt == ring_j.live_after(prev + 1)
    assert sysm.ap_cursor[(vo_i, vo_j)] == nxt


def test_define_access_points_on_join_keeps_distinctness():
    sysm = damt_system()
    vo_i = 1
    for _ in range(4):
        peer = churn_join(sysm, vo_i)
        assert set(sysm.ap[peer]) == set(sysm.graph.neighbors(vo_i))
    for vo_j in sysm.graph.neighbors(vo_i):
        entries = entries_toward(sysm, vo_i, vo_j)
        # joined peers pushed the count above the target ring size by zero or
        # more; distinctness is promised while it stays at or below it
        if len(entries) <= sysm.vos[vo_j].ring.size():
            assert len(set(entries)) == len(entries)


def test_define_access_points_charges_walk_probe_and_referral():
    sysm = damt_system()
    before_addr = sysm.engine.ledger.counters[ADDRESSING_MAINTENANCE]
    before_probe = sysm.engine.ledger.counters[AP_PROBE]
    peer = churn_join(sysm, 0)
    degree = len(sysm.graph.neighbors(0))
    addr = sysm.engine.ledger.counters[ADDRESSING_MAINTENANCE] - before_addr
    probe = sysm.engine.ledger.counters[AP_PROBE] - before_probe
    # per neighbor VO: at least one ring-mate ask (2) plus the referral (2)
    assert addr >= 4 * degree
    assert probe >= 2 * degree
    assert set(sysm.ap[peer]) == set(sysm.graph.neighbors(0))


def test_check_costs_two_messages_when_alive_one_when_dead():
    sysm = damt_system()
    prober = PeerId(0, sorted(sysm.vos[0].ring.nodes)[0])
    vo_j = sysm.graph.neighbors(0)[0]
    target = PeerId(vo_j, sorted(sysm.vos[vo_j].ring.nodes)[0])

    res = check(sysm, prober, target)
    assert res.alive and res.messages == 2
    assert res.elapsed_ms == 2 * sysm.engine.net.inter_vo_hop_ms

    friendly_leave(sysm, target)
    res = check(sysm, prober, target)
    assert not res.alive and res.messages == 1
    assert res.elapsed_ms == sysm.engine.net.rtt_budget_ms


def test_repair_adopts_fresh_live_entry_after_staleness():
    sysm = damt_system()
    vo_i, vo_j = 0, sysm.graph.neighbors(0)[0]
    peer = PeerId(vo_i, sorted(sysm.vos[vo_i].ring.nodes)[0])
    stale = sysm.ap[peer][vo_j]
    friendly_leave(sysm, PeerId(vo_j, stale))
    assert sysm.ap[peer][vo_j] == stale  # nobody told us: entry still stale

    before = sysm.engine.ledger.counters[ADDRESSING_MAINTENANCE]
    res = repair_access_point(sysm, peer, vo_j)
    assert sysm.vos[vo_j].ring.is_live(res.entry)
    assert sysm.ap[peer][vo_j] == res.entry
    assert res.entry != stale
    assert res.messages >= 4
    assert sysm.engine.ledger.counters[ADDRESSING_MAINTENANCE] > before
    assert res.elapsed_ms > 0


def test_repair_escalates_to_vo_disconnected_when_no_candidate_lives():
    sysm = damt_system(vo_count=3, peers_per_vo=6, seed=9)
    vo_i, vo_j = 0, sysm.graph.neighbors(0)[0]
    ring_i = sysm.vos[vo_i].ring
    # Script total staleness: every member's entry names a node that is gone.
    dead = sysm.vos[vo_j].ring.live_after(0)
    friendly_leave(sysm, PeerId(vo_j, dead))
    for nid in sorted(ring_i.nodes):
        sysm.ap[PeerId(vo_i, nid)][vo_j] = dead
    peer = PeerId(vo_i, sorted(ring_i.nodes)[0])
    with pytest.raises(VoDisconnected) as exc:
        repair_access_point(sysm, peer, vo_j)
    assert sysm.vos[vo_j].status == DISCONNECTED
    assert exc.value.target_vo == vo_j
    assert exc.value.elapsed_ms > 0  # failed probes burned their budgets


def test_friendly_leave_emits_zero_inter_vo_messages():
    sysm = damt_system()
    ledger = sysm.engine.ledger
    for _ in range(6):
        victim = PeerId(2, sorted(sysm.vos[2].ring.nodes)[0])
        before = dict(ledger.counters)
        friendly_leave(sysm, victim)
        after = ledger.counters
        assert after[DHT_MAINTENANCE] > before[DHT_MAINTENANCE]
        for cat in (INTER_VO_QUERY, INTER_VO_RESPONSE, AP_PROBE,
                    ADDRESSING_MAINTENANCE):
            assert after[cat] == before[cat]
        assert victim not in sysm.ap


def test_sole_survivor_guards():
    sysm = damt_system(vo_count=2, peers_per_vo=1, seed=2)
    lone = PeerId(0, sorted(sysm.vos[0].ring.nodes)[0])
    with pytest.raises(SoleSurvivorVO):
        friendly_leave(sysm, lone)
    with pytest.raises(SoleSurvivorVO):
        define_access_points(sysm, lone)
