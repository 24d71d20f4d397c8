/**
 * High-level render pipeline: read a result CSV, build per-method series
 * for the requested figure, and write the chart as SVG.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { buildSeries, getFigure, Series } from "./figures.js";
import { parseResults, SchemaError } from "./schema.js";
import { renderSvg } from "./svg.js";

export interface RenderResult {
  figureId: string;
  outPath: string;
  seriesCount: number;
  methods: string[];
}

/** Produce the SVG text for a figure from CSV text (pure, no I/O). */
export function chartFromCsv(csvText: string, figureId: string): { svg: string; series: Series[] } {
  const spec = getFigure(figureId);
  const rows = parseResults(csvText);
  if (rows.length === 0) {
    throw new SchemaError("CSV contains a header but no data rows");
  }
  const series = buildSeries(rows, spec);
  return { svg: renderSvg(spec, series), series };
}

/** Read csvPath, render figureId, write SVG to outPath. */
export function renderFile(csvPath: string, figureId: string, outPath: string): RenderResult {
  const text = readFileSync(csvPath, "utf-8");
  const { svg, series } = chartFromCsv(text, figureId);
  writeFileSync(outPath, svg, "utf-8");
  return {
    figureId,
    outPath,
    seriesCount: series.length,
    methods: series.map((s) => s.method),
  };
}
