/**
 * Figure catalogue: which CSV columns feed each chart, axis labels, and
 * scale choices. One polyline per discovery method; duplicate x values
 * within a method (multiple seeds / reps) are averaged.
 */

import { ResultRow, SchemaError } from "./schema.js";

export interface FigureSpec {
  id: string;
  title: string;
  xColumn: string;
  yColumn: string;
  xLabel: string;
  yLabel: string;
  logY: boolean;
}

export const FIGURES: ReadonlyMap<string, FigureSpec> = new Map(
  [
    {
      id: "fig5",
      title: "Single-query response time vs fragmentation",
      xColumn: "vo_count",
      yColumn: "mean_ms",
      xLabel: "virtual organisations",
      yLabel: "mean response time (ms)",
      logY: true,
    },
    {
      id: "fig6",
      title: "Response time under query load",
      xColumn: "load_qps_per_peer",
      yColumn: "mean_ms",
      xLabel: "queries per second per peer",
      yLabel: "mean response time (ms)",
      logY: true,
    },
    {
      id: "fig8",
      title: "Response time under load vs fragmentation",
      xColumn: "vo_count",
      yColumn: "mean_ms",
      xLabel: "virtual organisations",
      yLabel: "mean response time (ms)",
      logY: true,
    },
    {
      id: "fig9",
      title: "Maintenance traffic vs departures",
      xColumn: "churn_events",
      yColumn: "msgs_maintenance_total",
      xLabel: "departed peers",
      yLabel: "maintenance messages",
      logY: true,
    },
    {
      id: "fig10",
      title: "Maintenance traffic vs churned fraction",
      xColumn: "churn_frac",
      yColumn: "msgs_maintenance_total",
      xLabel: "churned fraction of peers",
      yLabel: "maintenance messages",
      logY: true,
    },
    {
      id: "fig11",
      title: "Unfinished work vs session length",
      xColumn: "session_frac",
      yColumn: "leftover_msgs",
      xLabel: "session length (fraction of horizon)",
      yLabel: "messages still queued at horizon",
      logY: false,
    },
  ].map((spec) => [spec.id, spec]),
);

export interface Series {
  method: string;
  points: { x: number; y: number }[];
}

/**
 * Group rows into one series per method, averaging the y column over rows
 * that share (method, x). Points are sorted by x; series by method name.
 */
export function buildSeries(rows: ResultRow[], spec: FigureSpec): Series[] {
  const byMethod = new Map<string, Map<number, { sum: number; n: number }>>();
  for (const row of rows) {
    const x = row[spec.xColumn];
    const y = row[spec.yColumn];
    if (typeof x !== "number" || typeof y !== "number") {
      throw new SchemaError(
        `figure ${spec.id} needs numeric columns ${spec.xColumn} and ${spec.yColumn}`,
      );
    }
    let xs = byMethod.get(row.method);
    if (!xs) {
      xs = new Map();
      byMethod.set(row.method, xs);
    }
    const acc = xs.get(x) ?? { sum: 0, n: 0 };
    acc.sum += y;
    acc.n += 1;
    xs.set(x, acc);
  }
  const series: Series[] = [];
  for (const method of [...byMethod.keys()].sort()) {
    const xs = byMethod.get(method)!;
    const points = [...xs.entries()]
      .map(([x, acc]) => ({ x, y: acc.sum / acc.n }))
      .sort((a, b) => a.x - b.x);
    series.push({ method, points });
  }
  return series;
}

export function getFigure(id: string): FigureSpec {
  const spec = FIGURES.get(id);
  if (!spec) {
    const known = [...FIGURES.keys()].join(", ");
    throw new SchemaError(`unknown figure id ${JSON.stringify(id)} (known: ${known})`);
  }
  return spec;
}
