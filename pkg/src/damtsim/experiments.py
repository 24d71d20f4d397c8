"""Run scenarios, build figure sweeps, and check result trends.

`run_point` executes one scenario and reduces the metrics ledger to a result
row. `sweep_points` emits pre-defined parameter grids (fig5..fig11) at desk
or paper scale. `report_check` audits a set of rows for the comparative
trends the methods are expected to show; which checks apply is derived purely
from column values, so it works on any CSV in the frozen schema.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from .engine import (
    ADDRESSING_MAINTENANCE,
    AP_PROBE,
    DHT_MAINTENANCE,
    DHT_ROUTING,
    INTER_VO_QUERY,
    INTER_VO_RESPONSE,
    ChurnModel,
)
from .scenario import METHODS, ConfigError, Scenario
from .system import (
    System,
    build_system,
    inject_churn,
    inject_query_load,
    inject_single_queries,
)

SCALES = ("desk", "paper")
FIGURES = ("fig5", "fig6", "fig8", "fig9", "fig10", "fig11")


def _percentile(values: list[float], frac: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    idx = max(0, math.ceil(frac * len(ordered)) - 1)
    return ordered[idx]


def run_point(sc: Scenario, rep: int = 0, trace: bool = False) -> tuple[dict, System]:
    """Execute one scenario point; returns (result row, finished system)."""
    seed = sc.seed + rep
    sysm = build_system(
        sc.method,
        vo_count=sc.vo_count,
        peers_per_vo=sc.peers_per_vo,
        corpus_size=sc.corpus_size,
        coverage=sc.coverage,
        topology=sc.topology,
        seed=seed,
        trace=trace,
        horizon_ms=sc.horizon_ms if sc.horizon_ms > 0 else None,
        contacts_per_vo_pair=sc.contacts_per_vo_pair,
    )
    if sc.query_count > 0:
        inject_single_queries(sysm, sc.query_count, spacing_ms=sc.query_spacing_ms)
    if sc.load_qps_per_peer > 0:
        inject_query_load(sysm, sc.load_qps_per_peer, sc.load_duration_ms)
    if sc.churn_mode != "none":
        inject_churn(
            sysm,
            ChurnModel(
                mode=sc.churn_mode,
                count=sc.churn_events,
                window_ms=sc.churn_window_ms,
                churn_frac=sc.churn_frac,
                session_frac=sc.session_frac,
            ),
        )
    sysm.engine.run()

    led = sysm.engine.ledger
    latencies = led.latencies()
    row = {
        "fingerprint": sc.fingerprint(),
        "scenario": sc.name,
        "method": sc.method,
        "seed": sc.seed,
        "rep": rep,
        "vo_count": sc.vo_count,
        "peers_per_vo": sc.peers_per_vo,
        "topology": sc.topology,
        "load_qps_per_peer": sc.load_qps_per_peer,
        "query_count": sc.query_count,
        "churn_mode": sc.churn_mode,
        "churn_events": sc.churn_events,
        "churn_frac": sc.churn_frac,
        "session_frac": sc.session_frac,
        "queries_completed": led.completed(),
        "queries_partial": led.partial(),
        "mean_ms": statistics.fmean(latencies) if latencies else 0.0,
        "median_ms": statistics.median(latencies) if latencies else 0.0,
        "p95_ms": _percentile(latencies, 0.95),
        "msgs_dht_routing": led.counters[DHT_ROUTING],
        "msgs_inter_vo_query": led.counters[INTER_VO_QUERY],
        "msgs_inter_vo_response": led.counters[INTER_VO_RESPONSE],
        "msgs_ap_probe": led.counters[AP_PROBE],
        "msgs_dht_maintenance": led.counters[DHT_MAINTENANCE],
        "msgs_addressing_maintenance": led.counters[ADDRESSING_MAINTENANCE],
        "msgs_maintenance_total": led.maintenance_messages(),
        "msgs_total": led.total_messages(),
        "leftover_msgs": led.leftover_msgs,
    }
    return row, sysm


def run_grid(points: list[Scenario], reps: int = 1) -> list[dict]:
    rows = []
    for sc in points:
        for rep in range(reps):
            row, _ = run_point(sc, rep=rep)
            rows.append(row)
    return rows


# --- figure sweep grids ------------------------------------------------
#
# Desk scale keeps the global population at 1000 peers and trims workload
# durations so every point finishes well under two minutes; paper scale keeps
# the same shapes at the published population sizes.

_FIG5_VOS = (2, 5, 10, 25, 50, 100)
_FIG6_LOADS = (1.0, 5.0, 10.0, 25.0, 50.0, 100.0)
_FIG6_DESK_DURATIONS = {1.0: 600.0, 5.0: 400.0, 10.0: 300.0, 25.0: 200.0,
                        50.0: 250.0, 100.0: 120.0}
_FIG8_VOS = (2, 5, 10, 25, 50, 100)
_FIG9_CHURN = (1, 2, 5, 10)
_FIG10_FRACS = (0.01, 0.10, 0.30, 0.50, 0.70)
_FIG11_SESSIONS = (0.1, 0.2, 0.4, 0.6, 0.8, 1.0)


def _population(scale: str) -> int:
    return 1000 if scale == "desk" else 10000


def sweep_points(figure: str, scale: str = "desk", seed: int = 1) -> list[Scenario]:
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r} (choose from {FIGURES})")
    if scale not in SCALES:
        raise ConfigError(f"unknown scale {scale!r} (choose from {SCALES})")
    total = _population(scale)
    points: list[Scenario] = []

    if figure == "fig5":
        # Single queries, no background load: cost of one discovery as the
        # overlay fragments into more, smaller organizations.
        count = 24 if scale == "desk" else 50
        for vo in _FIG5_VOS:
            for method in METHODS:
                points.append(Scenario(
                    name="fig5", method=method, vo_count=vo,
                    peers_per_vo=total // vo, query_count=count,
                    query_spacing_ms=500.0, seed=seed,
                ))

    elif figure == "fig6":
        # Query load sweep at a fixed 10-organization deployment.
        for load in _FIG6_LOADS:
            duration = (_FIG6_DESK_DURATIONS[load] if scale == "desk"
                        else 1000.0)
            for method in METHODS:
                points.append(Scenario(
                    name="fig6", method=method, vo_count=10,
                    peers_per_vo=total // 10, load_qps_per_peer=load,
                    load_duration_ms=duration, seed=seed,
                ))

    elif figure == "fig8":
        # Fragmentation under moderate load, flooding-family methods only.
        # Desk scale stops at 25 organizations: TTL-bounded exploration in a
        # cyclic mapping graph grows superlinearly with fragmentation, and the
        # trend is established well before the grid becomes intractable.
        duration = 100.0 if scale == "desk" else 500.0
        vo_grid = _FIG8_VOS[:4] if scale == "desk" else _FIG8_VOS
        for vo in vo_grid:
            for method in ("damt", "dflooding"):
                points.append(Scenario(
                    name="fig8", method=method, vo_count=vo,
                    peers_per_vo=total // vo, load_qps_per_peer=20.0,
                    load_duration_ms=duration, seed=seed,
                ))

    elif figure == "fig9":
        # Maintenance cost versus number of churned peers, no query load.
        for k in _FIG9_CHURN:
            for method in METHODS:
                points.append(Scenario(
                    name="fig9", method=method, vo_count=10,
                    peers_per_vo=total // 10, churn_mode="count",
                    churn_events=k, churn_window_ms=1000.0, seed=seed,
                ))

    elif figure == "fig10":
        # Maintenance cost as a fraction of the population churns.
        for frac in _FIG10_FRACS:
            k = max(1, round(frac * total))
            for method in METHODS:
                points.append(Scenario(
                    name="fig10", method=method, vo_count=10,
                    peers_per_vo=total // 10, churn_mode="count",
                    churn_events=k, churn_window_ms=5000.0,
                    churn_frac=frac, seed=seed,
                ))

    else:  # fig11
        # Traffic still being worked off at the observation horizon while
        # session length varies: sessions end at session_frac * horizon and
        # the update burst they trigger races the remaining time.
        window = 2000.0 if scale == "desk" else 10000.0
        for sf in _FIG11_SESSIONS:
            for method in METHODS:
                points.append(Scenario(
                    name="fig11", method=method, vo_count=10,
                    peers_per_vo=total // 10, churn_mode="session",
                    churn_frac=0.05, session_frac=sf,
                    churn_window_ms=window, horizon_ms=window,
                    query_count=20, query_spacing_ms=5.0, seed=seed,
                ))

    return points


# --- trend checking ----------------------------------------------------


@dataclass(frozen=True)
class CheckItem:
    name: str
    ok: bool
    detail: str


@dataclass(frozen=True)
class CheckReport:
    items: tuple[CheckItem, ...]

    @property
    def ok(self) -> bool:
        return all(item.ok for item in self.items)

    def lines(self) -> list[str]:
        return [f"{'PASS' if i.ok else 'FAIL'} {i.name}: {i.detail}"
                for i in self.items]


def _group(rows: list[dict], keys: tuple[str, ...]) -> dict[tuple, dict[str, dict]]:
    """Group rows by config point, mapping method -> row inside each group."""
    out: dict[tuple, dict[str, dict]] = {}
    for row in rows:
        gk = tuple(row[k] for k in keys)
        out.setdefault(gk, {})[row["method"]] = row
    return out


def report_check(rows: list[dict]) -> CheckReport:
    """Audit rows for the expected comparative trends.

    Applicability is decided from column values alone:
      * no-load single-query groups: d2b2 strictly slowest; dflooding not
        slower than damt.
      * load >= 50 with damt+dflooding present: damt mean latency <= dflooding.
      * load == 10 with dsp+damt present: dsp/damt mean latency ratio >= 2.
      * count-churn groups at the largest churn_events value with all four
        methods: maintenance ordering damt < dflooding < dsp <= d2b2 and
        damt <= 0.80 * dflooding.
    """
    items: list[CheckItem] = []
    gkeys = ("vo_count", "peers_per_vo", "seed", "rep")

    single = [r for r in rows
              if r["query_count"] > 0 and r["load_qps_per_peer"] == 0
              and r["churn_mode"] == "none"]
    for gk, by_method in sorted(_group(single, gkeys).items()):
        tag = f"vo={gk[0]},seed={gk[2]},rep={gk[3]}"
        if "d2b2" in by_method and len(by_method) >= 2:
            worst = max(by_method, key=lambda m: by_method[m]["mean_ms"])
            others = max(v["mean_ms"] for m, v in by_method.items()
                         if m != "d2b2")
            ok = worst == "d2b2" and by_method["d2b2"]["mean_ms"] > others
            items.append(CheckItem(
                f"single_query_d2b2_slowest[{tag}]", ok,
                f"d2b2={by_method['d2b2']['mean_ms']:.2f}ms, "
                f"next={others:.2f}ms"))
        if "damt" in by_method and "dflooding" in by_method:
            damt = by_method["damt"]["mean_ms"]
            dfl = by_method["dflooding"]["mean_ms"]
            items.append(CheckItem(
                f"single_query_dflooding_not_slower[{tag}]", dfl <= damt,
                f"dflooding={dfl:.2f}ms, damt={damt:.2f}ms"))

    loaded = [r for r in rows if r["load_qps_per_peer"] > 0]
    lkeys = ("load_qps_per_peer",) + gkeys
    for gk, by_method in sorted(_group(loaded, lkeys).items()):
        load = gk[0]
        tag = f"load={load:g},vo={gk[1]},seed={gk[3]},rep={gk[4]}"
        if load >= 50 and "damt" in by_method and "dflooding" in by_method:
            damt = by_method["damt"]["mean_ms"]
            dfl = by_method["dflooding"]["mean_ms"]
            items.append(CheckItem(
                f"high_load_damt_not_slower[{tag}]", damt <= dfl,
                f"damt={damt:.2f}ms, dflooding={dfl:.2f}ms"))
        if load == 10 and "dsp" in by_method and "damt" in by_method:
            damt = by_method["damt"]["mean_ms"]
            dsp = by_method["dsp"]["mean_ms"]
            ratio = dsp / damt if damt > 0 else float("inf")
            items.append(CheckItem(
                f"mid_load_dsp_ratio[{tag}]", ratio >= 2.0,
                f"dsp/damt={ratio:.2f}"))

    churned = [r for r in rows if r["churn_mode"] == "count"
               and r["churn_events"] > 0]
    if churned:
        peak = max(r["churn_events"] for r in churned)
        at_peak = [r for r in churned if r["churn_events"] == peak]
        for gk, by_method in sorted(_group(at_peak, gkeys).items()):
            if set(by_method) != set(METHODS):
                continue
            tag = f"churn={peak},seed={gk[2]},rep={gk[3]}"
            m = {name: by_method[name]["msgs_maintenance_total"]
                 for name in METHODS}
            ordered = (m["damt"] < m["dflooding"] < m["dsp"] <= m["d2b2"])
            items.append(CheckItem(
                f"churn_maintenance_ordering[{tag}]", ordered,
                f"damt={m['damt']}, dflooding={m['dflooding']}, "
                f"dsp={m['dsp']}, d2b2={m['d2b2']}"))
            ratio = m["damt"] / m["dflooding"] if m["dflooding"] else float("inf")
            items.append(CheckItem(
                f"churn_damt_dflooding_ratio[{tag}]", ratio <= 0.80,
                f"damt/dflooding={ratio:.3f}"))

    if not items:
        items.append(CheckItem(
            "no_applicable_checks", True,
            "rows matched no comparative trend; nothing to verify"))
    return CheckReport(tuple(items))
