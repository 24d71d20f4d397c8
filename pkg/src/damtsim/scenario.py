"""Scenario configuration, grid expansion and the frozen result schema.

A scenario is one fully specified run point. Configs (JSON) may give a list
for any expandable field; the cartesian product becomes the run grid. Each
expanded point gets a stable fingerprint (hash of its canonical form) so rows
from different sweeps remain comparable and output ordering is reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, fields

CSV_COLUMNS = (
    "fingerprint", "scenario", "method", "seed", "rep", "vo_count",
    "peers_per_vo", "topology", "load_qps_per_peer", "query_count",
    "churn_mode", "churn_events", "churn_frac", "session_frac",
    "queries_completed", "queries_partial", "mean_ms", "median_ms", "p95_ms",
    "msgs_dht_routing", "msgs_inter_vo_query", "msgs_inter_vo_response",
    "msgs_ap_probe", "msgs_dht_maintenance", "msgs_addressing_maintenance",
    "msgs_maintenance_total", "msgs_total", "leftover_msgs",
)

_INT_COLUMNS = {
    "seed", "rep", "vo_count", "peers_per_vo", "query_count", "churn_events",
    "queries_completed", "queries_partial", "msgs_dht_routing",
    "msgs_inter_vo_query", "msgs_inter_vo_response", "msgs_ap_probe",
    "msgs_dht_maintenance", "msgs_addressing_maintenance",
    "msgs_maintenance_total", "msgs_total", "leftover_msgs",
}
_FLOAT_COLUMNS = {
    "load_qps_per_peer", "churn_frac", "session_frac", "mean_ms", "median_ms",
    "p95_ms",
}

METHODS = ("damt", "dsp", "d2b2", "dflooding")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class Scenario:
    """One expanded run point (all fields scalar)."""

    name: str = "adhoc"
    method: str = "damt"
    vo_count: int = 10
    peers_per_vo: int = 100
    corpus_size: int = 24
    coverage: float = 1.0
    topology: str = "random"
    contacts_per_vo_pair: int = 3
    seed: int = 1
    load_qps_per_peer: float = 0.0
    load_duration_ms: float = 0.0
    query_count: int = 0
    query_spacing_ms: float = 500.0
    churn_mode: str = "none"
    churn_events: int = 0
    churn_window_ms: float = 1000.0
    churn_frac: float = 0.05
    session_frac: float = 1.0
    horizon_ms: float = 0.0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if self.churn_mode not in ("none", "count", "session"):
            raise ConfigError(f"unknown churn_mode {self.churn_mode!r}")
        if self.vo_count < 1 or self.peers_per_vo < 1:
            raise ConfigError("vo_count and peers_per_vo must be positive")
        if self.load_qps_per_peer > 0 and self.load_duration_ms <= 0:
            raise ConfigError("rate-based load needs load_duration_ms > 0")

    def fingerprint(self) -> str:
        """Identity of the run point: hash of every field except the cosmetic
        name, so renamed sweeps still produce comparable rows."""
        payload = asdict(self)
        payload.pop("name")
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


_FIELD_TYPES = {f.name: f.type for f in fields(Scenario)}
_GRIDABLE = tuple(f.name for f in fields(Scenario) if f.name != "name")


def expand_grid(config: dict) -> list[Scenario]:
    """Cartesian expansion: every list-valued field fans out, in declared
    field order, so the output ordering is stable."""
    if not isinstance(config, dict):
        raise ConfigError("config root must be an object")
    unknown = set(config) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    points: list[dict] = [{}]
    for name in _FIELD_TYPES:
        if name not in config:
            continue
        value = config[name]
        options = value if isinstance(value, list) else [value]
        if not options:
            raise ConfigError(f"field {name!r} expands to nothing")
        points = [dict(p, **{name: opt}) for p in points for opt in options]
    try:
        return [Scenario(**p) for p in points]
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> list[Scenario]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return expand_grid(raw)


def _format_cell(column: str, value) -> str:
    if column in _FLOAT_COLUMNS:
        return f"{float(value):.3f}"
    if column in _INT_COLUMNS:
        return str(int(value))
    return str(value)


def sort_key(row: dict):
    return (row["fingerprint"], row["method"], int(row["seed"]), int(row["rep"]))


def write_csv(rows: list[dict], path: str) -> None:
    ordered = sorted(rows, key=sort_key)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in ordered:
            missing = [c for c in CSV_COLUMNS if c not in row]
            if missing:
                raise ConfigError(f"row lacks columns {missing}")
            writer.writerow([_format_cell(c, row[c]) for c in CSV_COLUMNS])


def read_csv(path: str) -> list[dict]:
    """Read rows back with numeric coercion; raises ConfigError on a header
    that does not match the frozen schema."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path} is empty") from None
        if tuple(header) != CSV_COLUMNS:
            raise ConfigError(f"{path} header does not match the frozen schema")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(CSV_COLUMNS):
                raise ConfigError(f"{path}:{lineno}: wrong column count")
            row: dict = dict(zip(CSV_COLUMNS, raw))
            try:
                for col in _INT_COLUMNS:
                    row[col] = int(row[col])
                for col in _FLOAT_COLUMNS:
                    row[col] = float(row[col])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
            rows.append(row)
    return rows
