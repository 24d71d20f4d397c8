/**
 * Deterministic SVG line charts. No timestamps, no randomness: the same
 * series always serialize to the same bytes. Log-scale axes draw one tick
 * per decade; linear axes use a small "nice number" tick ladder.
 */

import { FigureSpec, Series } from "./figures.js";

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { top: 48, right: 24, bottom: 56, left: 72 };
const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];
const MARKERS = ["circle", "square", "diamond", "triangle"] as const;

function fmt(value: number): string {
  if (!Number.isFinite(value)) return "0";
  const rounded = Math.round(value * 100) / 100;
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

function fmtTick(value: number): string {
  if (value !== 0 && (Math.abs(value) >= 100000 || Math.abs(value) < 0.01)) {
    return value.toExponential(0).replace("+", "");
  }
  return String(Math.round(value * 1000) / 1000);
}

interface Scale {
  toPixel(v: number): number;
  ticks: number[];
}

function linearScale(lo: number, hi: number, pixelLo: number, pixelHi: number): Scale {
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const span = hi - lo;
  const rawStep = span / 5;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= 6) ?? 10 * mag;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = first; t <= hi + step * 1e-9; t += step) {
    ticks.push(Math.round(t / step) * step);
  }
  return {
    toPixel: (v) => pixelLo + ((v - lo) / (hi - lo)) * (pixelHi - pixelLo),
    ticks,
  };
}

function logScale(lo: number, hi: number, pixelLo: number, pixelHi: number): Scale {
  const safeLo = Math.max(lo, 1e-9);
  const safeHi = Math.max(hi, safeLo * 10);
  const llo = Math.log10(safeLo);
  const lhi = Math.log10(safeHi);
  const ticks: number[] = [];
  for (let d = Math.floor(llo); d <= Math.ceil(lhi); d++) {
    ticks.push(Math.pow(10, d));
  }
  return {
    toPixel: (v) => {
      const lv = Math.log10(Math.max(v, safeLo / 10));
      return pixelLo + ((lv - llo) / (lhi - llo)) * (pixelHi - pixelLo);
    },
    ticks,
  };
}

function marker(kind: (typeof MARKERS)[number], cx: number, cy: number, color: string): string {
  const r = 3.5;
  const x = fmt(cx);
  const y = fmt(cy);
  switch (kind) {
    case "circle":
      return `<circle cx="${x}" cy="${y}" r="${r}" fill="${color}"/>`;
    case "square":
      return `<rect x="${fmt(cx - r)}" y="${fmt(cy - r)}" width="${2 * r}" height="${2 * r}" fill="${color}"/>`;
    case "diamond":
      return `<path d="M ${x} ${fmt(cy - r - 1)} L ${fmt(cx + r + 1)} ${y} L ${x} ${fmt(cy + r + 1)} L ${fmt(cx - r - 1)} ${y} Z" fill="${color}"/>`;
    case "triangle":
      return `<path d="M ${x} ${fmt(cy - r - 1)} L ${fmt(cx + r + 1)} ${fmt(cy + r)} L ${fmt(cx - r - 1)} ${fmt(cy + r)} Z" fill="${color}"/>`;
  }
}

/** Render the chart to an SVG document string. */
export function renderSvg(spec: FigureSpec, series: Series[]): string {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const xLo = xs.length ? Math.min(...xs) : 0;
  const xHi = xs.length ? Math.max(...xs) : 1;
  const positiveYs = ys.filter((y) => y > 0);
  const yLo = spec.logY
    ? (positiveYs.length ? Math.min(...positiveYs) : 1)
    : Math.min(0, ...(ys.length ? ys : [0]));
  const yHi = ys.length ? Math.max(...ys, spec.logY ? yLo : 0) : 1;

  const xScale = linearScale(xLo, xHi, MARGIN.left, MARGIN.left + PLOT_W);
  const yScale = spec.logY
    ? logScale(yLo, yHi, MARGIN.top + PLOT_H, MARGIN.top)
    : linearScale(yLo, yHi, MARGIN.top + PLOT_H, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">${spec.title}</text>`,
  );

  // Plot frame.
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${PLOT_W}" height="${PLOT_H}" fill="none" stroke="#333333"/>`,
  );

  // X ticks and labels.
  for (const t of xScale.ticks) {
    const px = xScale.toPixel(t);
    if (px < MARGIN.left - 0.5 || px > MARGIN.left + PLOT_W + 0.5) continue;
    parts.push(
      `<line x1="${fmt(px)}" y1="${MARGIN.top + PLOT_H}" x2="${fmt(px)}" y2="${MARGIN.top + PLOT_H + 5}" stroke="#333333"/>`,
    );
    parts.push(
      `<text x="${fmt(px)}" y="${MARGIN.top + PLOT_H + 20}" text-anchor="middle" font-size="11">${fmtTick(t)}</text>`,
    );
  }
  // Y ticks, labels, and gridlines.
  for (const t of yScale.ticks) {
    const py = yScale.toPixel(t);
    if (py < MARGIN.top - 0.5 || py > MARGIN.top + PLOT_H + 0.5) continue;
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(py)}" x2="${MARGIN.left + PLOT_W}" y2="${fmt(py)}" stroke="#dddddd"/>`,
    );
    parts.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(py)}" x2="${MARGIN.left}" y2="${fmt(py)}" stroke="#333333"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(py + 4)}" text-anchor="end" font-size="11">${fmtTick(t)}</text>`,
    );
  }

  // Axis labels.
  parts.push(
    `<text x="${MARGIN.left + PLOT_W / 2}" y="${HEIGHT - 14}" text-anchor="middle" font-size="13">${spec.xLabel}</text>`,
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + PLOT_H / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 18 ${MARGIN.top + PLOT_H / 2})">${spec.yLabel}${spec.logY ? " (log scale)" : ""}</text>`,
  );

  // Series: polyline plus point markers.
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const markerKind = MARKERS[i % MARKERS.length]!;
    const pixels = s.points.map((p) => ({
      px: xScale.toPixel(p.x),
      py: yScale.toPixel(p.y),
    }));
    if (pixels.length > 1) {
      const path = pixels.map(({ px, py }) => `${fmt(px)},${fmt(py)}`).join(" ");
      parts.push(
        `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="2"/>`,
      );
    }
    for (const { px, py } of pixels) {
      parts.push(marker(markerKind, px, py, color));
    }
  });

  // Legend, top-right inside the frame.
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const lx = MARGIN.left + PLOT_W - 130;
    const ly = MARGIN.top + 16 + i * 18;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 24}" y2="${ly}" stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(marker(MARKERS[i % MARKERS.length]!, lx + 12, ly, color));
    parts.push(
      `<text x="${lx + 30}" y="${ly + 4}" font-size="12">${s.method}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
