/**
 * The frozen result-CSV schema shared with the simulator CLI. Parsing
 * validates the header exactly and coerces numeric columns; violations
 * raise SchemaError with the offending column names in the message.
 */

import Papa from "papaparse";

export const CSV_COLUMNS = [
  "fingerprint", "scenario", "method", "seed", "rep", "vo_count",
  "peers_per_vo", "topology", "load_qps_per_peer", "query_count",
  "churn_mode", "churn_events", "churn_frac", "session_frac",
  "queries_completed", "queries_partial", "mean_ms", "median_ms", "p95_ms",
  "msgs_dht_routing", "msgs_inter_vo_query", "msgs_inter_vo_response",
  "msgs_ap_probe", "msgs_dht_maintenance", "msgs_addressing_maintenance",
  "msgs_maintenance_total", "msgs_total", "leftover_msgs",
] as const;

export type ColumnName = (typeof CSV_COLUMNS)[number];

const NUMERIC_COLUMNS: ReadonlySet<ColumnName> = new Set<ColumnName>([
  "seed", "rep", "vo_count", "peers_per_vo", "load_qps_per_peer",
  "query_count", "churn_events", "churn_frac", "session_frac",
  "queries_completed", "queries_partial", "mean_ms", "median_ms", "p95_ms",
  "msgs_dht_routing", "msgs_inter_vo_query", "msgs_inter_vo_response",
  "msgs_ap_probe", "msgs_dht_maintenance", "msgs_addressing_maintenance",
  "msgs_maintenance_total", "msgs_total", "leftover_msgs",
]);

export type ResultRow = Record<string, string | number> & {
  method: string;
};

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

/** Parse CSV text in the frozen schema; throws SchemaError on violations. */
export function parseResults(text: string): ResultRow[] {
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new SchemaError(`CSV is not parseable: ${first.message}`);
  }
  const data = parsed.data;
  if (data.length === 0) {
    throw new SchemaError("CSV is empty (no header row)");
  }
  const header = data[0]!;
  const missing = CSV_COLUMNS.filter((c) => !header.includes(c));
  const extra = header.filter((c) => !(CSV_COLUMNS as readonly string[]).includes(c));
  if (missing.length > 0 || extra.length > 0) {
    const parts: string[] = [];
    if (missing.length > 0) parts.push(`missing column(s): ${missing.join(", ")}`);
    if (extra.length > 0) parts.push(`unknown column(s): ${extra.join(", ")}`);
    throw new SchemaError(`header does not match the frozen schema — ${parts.join("; ")}`);
  }
  const index = new Map(header.map((c, i) => [c, i]));
  const rows: ResultRow[] = [];
  for (let r = 1; r < data.length; r++) {
    const cells = data[r]!;
    if (cells.length !== header.length) {
      throw new SchemaError(`row ${r + 1}: expected ${header.length} cells, got ${cells.length}`);
    }
    const row: Record<string, string | number> = {};
    for (const column of CSV_COLUMNS) {
      const raw = cells[index.get(column)!]!;
      if (NUMERIC_COLUMNS.has(column)) {
        const value = Number(raw);
        if (!Number.isFinite(value)) {
          throw new SchemaError(`row ${r + 1}: column ${column} is not numeric (${JSON.stringify(raw)})`);
        }
        row[column] = value;
      } else {
        row[column] = raw;
      }
    }
    rows.push(row as ResultRow);
  }
  return rows;
}
