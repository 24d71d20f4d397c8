"""Sweep grids, result rows, and the trend checker."""

import pytest

from damtsim.scenario import ConfigError, Scenario
from damtsim.experiments import (
    FIGURES,
    report_check,
    run_point,
    sweep_points,
)


def _row(**over):
    """Minimal schema-complete row for checker tests."""
    base = {
        "fingerprint": "x", "scenario": "t", "method": "damt", "seed": 1,
        "rep": 0, "vo_count": 10, "peers_per_vo": 100, "topology": "random",
        "load_qps_per_peer": 0.0, "query_count": 10, "churn_mode": "none",
        "churn_events": 0, "churn_frac": 0.05, "session_frac": 1.0,
        "queries_completed": 10, "queries_partial": 0, "mean_ms": 10.0,
        "median_ms": 10.0, "p95_ms": 10.0, "msgs_dht_routing": 0,
        "msgs_inter_vo_query": 0, "msgs_inter_vo_response": 0,
        "msgs_ap_probe": 0, "msgs_dht_maintenance": 0,
        "msgs_addressing_maintenance": 0, "msgs_maintenance_total": 0,
        "msgs_total": 0, "leftover_msgs": 0,
    }
    base.update(over)
    return base


def test_sweep_points_cover_every_figure():
    for fig in FIGURES:
        pts = sweep_points(fig, "desk", seed=3)
        assert pts, fig
        assert all(p.name == fig and p.seed == 3 for p in pts)
        assert all(p.vo_count * p.peers_per_vo <= 1000 for p in pts)


def test_sweep_points_rejects_unknowns():
    with pytest.raises(ConfigError):
        sweep_points("fig77")
    with pytest.raises(ConfigError):
        sweep_points("fig5", scale="mountain")


def test_run_point_row_is_schema_complete_and_consistent():
    sc = Scenario(name="t", method="damt", vo_count=3, peers_per_vo=8,
                  query_count=4, seed=2)
    row, sysm = run_point(sc)
    from damtsim.scenario import CSV_COLUMNS
    assert set(CSV_COLUMNS) <= set(row)
    assert row["queries_completed"] + row["queries_partial"] >= 4
    parts = (row["msgs_dht_routing"] + row["msgs_inter_vo_query"]
             + row["msgs_inter_vo_response"] + row["msgs_ap_probe"]
             + row["msgs_dht_maintenance"] + row["msgs_addressing_maintenance"])
    assert parts == row["msgs_total"]
    assert row["msgs_maintenance_total"] == (
        row["msgs_dht_maintenance"] + row["msgs_addressing_maintenance"])


def test_report_check_single_query_trends():
    good = [
        _row(method="damt", mean_ms=50.0),
        _row(method="dflooding", mean_ms=30.0),
        _row(method="dsp", mean_ms=40.0),
        _row(method="d2b2", mean_ms=90.0),
    ]
    rep = report_check(good)
    assert rep.ok and len(rep.items) == 2

    bad = [dict(r) for r in good]
    bad[3]["mean_ms"] = 10.0  # d2b2 no longer slowest
    rep = report_check(bad)
    assert not rep.ok
    failing = [i.name for i in rep.items if not i.ok]
    assert any("d2b2_slowest" in n for n in failing)


def test_report_check_load_trends():
    rows = [
        _row(method="damt", query_count=0, load_qps_per_peer=50.0, mean_ms=200.0),
        _row(method="dflooding", query_count=0, load_qps_per_peer=50.0,
             mean_ms=400.0),
        _row(method="damt", query_count=0, load_qps_per_peer=10.0, mean_ms=100.0),
        _row(method="dsp", query_count=0, load_qps_per_peer=10.0, mean_ms=350.0),
    ]
    rep = report_check(rows)
    assert rep.ok
    names = [i.name for i in rep.items]
    assert any("high_load_damt_not_slower" in n for n in names)
    assert any("mid_load_dsp_ratio" in n for n in names)

    rows[0]["mean_ms"] = 500.0  # damt slower than dflooding at high load
    assert not report_check(rows).ok


def test_report_check_churn_ordering():
    def churn_rows(damt, dfl, dsp, d2b2, k=10):
        return [
            _row(method="damt", query_count=0, churn_mode="count",
                 churn_events=k, msgs_maintenance_total=damt),
            _row(method="dflooding", query_count=0, churn_mode="count",
                 churn_events=k, msgs_maintenance_total=dfl),
            _row(method="dsp", query_count=0, churn_mode="count",
                 churn_events=k, msgs_maintenance_total=dsp),
            _row(method="d2b2", query_count=0, churn_mode="count",
                 churn_events=k, msgs_maintenance_total=d2b2),
        ]

    rep = report_check(churn_rows(100, 500, 900, 900))
    assert rep.ok
    # ratio above 0.80 fails even when the ordering holds
    rep = report_check(churn_rows(450, 500, 900, 901))
    assert not rep.ok
    # checker only audits the largest churn level present
    rows = churn_rows(100, 500, 900, 900, k=10) + churn_rows(999, 1, 2, 3, k=2)
    assert report_check(rows).ok


def test_report_check_empty_rows_yield_note():
    rep = report_check([])
    assert rep.ok
    assert rep.items[0].name == "no_applicable_checks"
