import { mkdtempSync, readFileSync, writeFileSync, existsSync, statSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { buildSeries, FIGURES, getFigure } from "../src/figures.js";
import { chartFromCsv, renderFile } from "../src/render.js";
import { CSV_COLUMNS, parseResults, SchemaError } from "../src/schema.js";
import { renderSvg } from "../src/svg.js";
import { main } from "../src/main.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const FIXTURES = join(HERE, "..", "fixtures");

const fixtureFor = (figureId: string) => join(FIXTURES, `${figureId}_desk.csv`);

describe("schema parsing", () => {
  it("accepts every fixture CSV and coerces numerics", () => {
    for (const figureId of FIGURES.keys()) {
      const rows = parseResults(readFileSync(fixtureFor(figureId), "utf-8"));
      expect(rows.length).toBeGreaterThan(0);
      for (const row of rows) {
        expect(typeof row.mean_ms).toBe("number");
        expect(typeof row.msgs_maintenance_total).toBe("number");
        expect(typeof row.method).toBe("string");
      }
    }
  });

  it("rejects a CSV missing a required column, naming it", () => {
    const text = readFileSync(fixtureFor("fig9"), "utf-8");
    const lines = text.split("\n");
    const header = lines[0]!.split(",");
    const dropAt = header.indexOf("msgs_maintenance_total");
    const doctored = lines
      .map((line) => {
        if (!line) return line;
        const cells = line.split(",");
        cells.splice(dropAt, 1);
        return cells.join(",");
      })
      .join("\n");
    expect(() => parseResults(doctored)).toThrow(SchemaError);
    expect(() => parseResults(doctored)).toThrow(/msgs_maintenance_total/);
  });

  it("rejects a CSV with a foreign column, naming it", () => {
    const text = readFileSync(fixtureFor("fig5"), "utf-8");
    const doctored = text.replace("fingerprint,", "surprise,fingerprint,").replace(/\n(\w)/g, "\nx,$1");
    expect(() => parseResults(doctored)).toThrow(/surprise/);
  });

  it("rejects non-numeric data in numeric columns", () => {
    const text = readFileSync(fixtureFor("fig5"), "utf-8");
    const lines = text.split("\n");
    const header = lines[0]!.split(",");
    const meanAt = header.indexOf("mean_ms");
    const cells = lines[1]!.split(",");
    cells[meanAt] = "not-a-number";
    lines[1] = cells.join(",");
    expect(() => parseResults(lines.join("\n"))).toThrow(/mean_ms/);
  });

  it("mirrors the frozen 28-column schema", () => {
    expect(CSV_COLUMNS.length).toBe(28);
    expect(CSV_COLUMNS[0]).toBe("fingerprint");
    expect(CSV_COLUMNS[27]).toBe("leftover_msgs");
  });
});

describe("series construction", () => {
  it("builds one series per method present", () => {
    for (const figureId of FIGURES.keys()) {
      const rows = parseResults(readFileSync(fixtureFor(figureId), "utf-8"));
      const methods = new Set(rows.map((r) => r.method));
      const series = buildSeries(rows, getFigure(figureId));
      expect(series.length).toBe(methods.size);
      for (const s of series) {
        expect(methods.has(s.method)).toBe(true);
        expect(s.points.length).toBeGreaterThan(0);
        for (let i = 1; i < s.points.length; i++) {
          expect(s.points[i]!.x).toBeGreaterThan(s.points[i - 1]!.x);
        }
      }
    }
  });

  it("averages duplicate x values within a method", () => {
    const rows = parseResults(readFileSync(fixtureFor("fig9"), "utf-8"));
    const duplicated = [...rows, ...rows.map((r) => ({ ...r, rep: 1, mean_ms: 0 }))];
    const spec = getFigure("fig9");
    const base = buildSeries(rows, spec);
    const merged = buildSeries(duplicated, spec);
    expect(merged.length).toBe(base.length);
    for (let i = 0; i < base.length; i++) {
      expect(merged[i]!.points.length).toBe(base[i]!.points.length);
    }
  });

  it("handles a single-method CSV without failure", () => {
    const rows = parseResults(readFileSync(fixtureFor("fig9"), "utf-8"));
    const only = rows.filter((r) => r.method === "damt");
    const series = buildSeries(only, getFigure("fig9"));
    expect(series.length).toBe(1);
    expect(series[0]!.method).toBe("damt");
  });

  it("rejects an unknown figure id, listing known ones", () => {
    expect(() => getFigure("fig99")).toThrow(SchemaError);
    expect(() => getFigure("fig99")).toThrow(/fig5.*fig11/s);
  });
});

describe("SVG rendering", () => {
  it("produces one image per figure id with one polyline per method", () => {
    const outDir = mkdtempSync(join(tmpdir(), "plots-"));
    for (const figureId of FIGURES.keys()) {
      const outPath = join(outDir, `${figureId}.svg`);
      const result = renderFile(fixtureFor(figureId), figureId, outPath);
      expect(existsSync(outPath)).toBe(true);
      expect(statSync(outPath).size).toBeGreaterThan(500);
      const svg = readFileSync(outPath, "utf-8");
      expect(svg.startsWith("<svg ")).toBe(true);
      expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
      const polylines = svg.match(/<polyline /g) ?? [];
      expect(polylines.length).toBe(result.seriesCount);
      for (const method of result.methods) {
        expect(svg).toContain(`>${method}</text>`);
      }
    }
  });

  it("labels axes from the figure catalogue", () => {
    const { svg } = chartFromCsv(readFileSync(fixtureFor("fig11"), "utf-8"), "fig11");
    expect(svg).toContain("session length (fraction of horizon)");
    expect(svg).toContain("messages still queued at horizon");
  });

  it("is byte-identical on rerun and never mutates its input", () => {
    const csvPath = fixtureFor("fig6");
    const before = readFileSync(csvPath);
    const outDir = mkdtempSync(join(tmpdir(), "plots-"));
    const a = join(outDir, "a.svg");
    const b = join(outDir, "b.svg");
    renderFile(csvPath, "fig6", a);
    renderFile(csvPath, "fig6", b);
    expect(readFileSync(a, "utf-8")).toBe(readFileSync(b, "utf-8"));
    expect(readFileSync(csvPath).equals(before)).toBe(true);
  });

  it("renders a single data point per series without errors", () => {
    const rows = parseResults(readFileSync(fixtureFor("fig9"), "utf-8"));
    const minChurn = Math.min(...rows.map((r) => r.churn_events as number));
    const spec = getFigure("fig9");
    const series = buildSeries(rows.filter((r) => r.churn_events === minChurn), spec);
    expect(series.length).toBe(4);
    expect(series.every((s) => s.points.length === 1)).toBe(true);
    const svg = renderSvg(spec, series);
    expect(svg).toContain("</svg>");
  });
});

describe("CLI", () => {
  it("exits 0 and writes the SVG on success", () => {
    const outDir = mkdtempSync(join(tmpdir(), "plots-"));
    const out = join(outDir, "fig5.svg");
    const code = main(["--csv", fixtureFor("fig5"), "--figure", "fig5", "--out", out]);
    expect(code).toBe(0);
    expect(existsSync(out)).toBe(true);
  });

  it("exits 1 on missing arguments", () => {
    expect(main(["--csv", "whatever.csv"])).toBe(1);
  });

  it("exits 1 on an unknown figure id", () => {
    const outDir = mkdtempSync(join(tmpdir(), "plots-"));
    const code = main([
      "--csv", fixtureFor("fig5"), "--figure", "fig0", "--out", join(outDir, "x.svg"),
    ]);
    expect(code).toBe(1);
  });

  it("exits 1 on a schema-violating CSV", () => {
    const outDir = mkdtempSync(join(tmpdir(), "plots-"));
    const bad = join(outDir, "bad.csv");
    writeFileSync(bad, "alpha,beta\n1,2\n");
    const code = main(["--csv", bad, "--figure", "fig5", "--out", join(outDir, "x.svg")]);
    expect(code).toBe(1);
  });

  it("exits 1 when the CSV file does not exist", () => {
    const outDir = mkdtempSync(join(tmpdir(), "plots-"));
    const code = main([
      "--csv", join(outDir, "absent.csv"), "--figure", "fig5", "--out", join(outDir, "x.svg"),
    ]);
    expect(code).toBe(1);
  });
});
