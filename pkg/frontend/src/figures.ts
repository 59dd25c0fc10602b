/** Figure renderers: CSV rows in, SVG text + caption out. Everything is a
 *  pure function of the parsed rows, so identical CSVs give identical bytes. */

import { Row, SchemaError, toNumber } from "./schema.js";
import { boxStats } from "./stats.js";
import { SvgDoc, methodColor, scaleLinear, ticks } from "./svg.js";

export interface Figure {
  svg: string;
  caption: string;
}

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { top: 30, right: 20, bottom: 52, left: 62 };

function plotArea() {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

/** Stable method order: first appearance in the CSV. */
function methodOrder(rows: Row[]): string[] {
  const order: string[] = [];
  for (const row of rows) {
    if (!order.includes(row.method)) order.push(row.method);
  }
  return order;
}

function drawYAxis(doc: SvgDoc, lo: number, hi: number, toY: (v: number) => number, label: string) {
  const { x0, x1 } = plotArea();
  for (const t of ticks(lo, hi)) {
    const y = toY(t);
    doc.line(x0, y, x1, y, "#dddddd");
    doc.text(x0 - 6, y + 4, String(t), 10, "end");
  }
  doc.text(14, HEIGHT / 2, label, 11, "middle");
}

export function renderBoxplot(rows: Row[], title: string): Figure {
  const order = methodOrder(rows);
  const byMethod = new Map<string, number[]>(order.map((m) => [m, []]));
  for (const row of rows) {
    byMethod.get(row.method)!.push(toNumber(row, "sum_rate"));
  }
  const stats = order.map((m) => boxStats(byMethod.get(m)!));
  const values = rows.map((r) => toNumber(r, "sum_rate"));
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const pad = (hi - lo || 1) * 0.05;

  const { x0, x1, y0, y1 } = plotArea();
  const toY = scaleLinear(lo - pad, hi + pad, y0, y1);
  const doc = new SvgDoc(WIDTH, HEIGHT);
  doc.text(WIDTH / 2, 18, title, 13, "middle");
  drawYAxis(doc, lo - pad, hi + pad, toY, "sum-rate");

  const slot = (x1 - x0) / order.length;
  const boxW = Math.min(60, slot * 0.5);
  order.forEach((method, i) => {
    const cx = x0 + slot * (i + 0.5);
    const s = stats[i];
    const color = methodColor(method, order);
    // whiskers first so the box covers them
    doc.line(cx, toY(s.whiskerLow), cx, toY(s.q1), "#333333");
    doc.line(cx, toY(s.q3), cx, toY(s.whiskerHigh), "#333333");
    doc.line(cx - boxW / 4, toY(s.whiskerLow), cx + boxW / 4, toY(s.whiskerLow), "#333333");
    doc.line(cx - boxW / 4, toY(s.whiskerHigh), cx + boxW / 4, toY(s.whiskerHigh), "#333333");
    doc.rect(cx - boxW / 2, toY(s.q3), boxW, toY(s.q1) - toY(s.q3), color + "33", color);
    doc.line(cx - boxW / 2, toY(s.median), cx + boxW / 2, toY(s.median), color, 2);
    for (const v of s.outliers) doc.circle(cx, toY(v), 2, "#333333");
    doc.text(cx, y0 + 18, method, 11, "middle");
  });
  doc.line(x0, y0, x1, y0, "#333333");

  const caption =
    `Box plot of per-sample sum-rates for ${order.join(", ")} ` +
    `(${values.length} samples total; boxes span quartiles, whiskers per Tukey 1.5 IQR).`;
  return { svg: doc.render(), caption };
}

function renderSweep(rows: Row[], title: string, xLabel: string): Figure {
  const order = methodOrder(rows);
  const xs = [...new Set(rows.map((r) => toNumber(r, "value")))].sort((a, b) => a - b);
  const means = rows.map((r) => toNumber(r, "mean_sum_rate"));
  const lo = Math.min(...means);
  const hi = Math.max(...means);
  const pad = (hi - lo || 1) * 0.05;

  const { x0, x1, y0, y1 } = plotArea();
  const toX = scaleLinear(xs[0], xs[xs.length - 1], x0, x1);
  const toY = scaleLinear(lo - pad, hi + pad, y0, y1);
  const doc = new SvgDoc(WIDTH, HEIGHT);
  doc.text(WIDTH / 2, 18, title, 13, "middle");
  drawYAxis(doc, lo - pad, hi + pad, toY, "mean sum-rate");
  for (const x of xs) {
    doc.text(toX(x), y0 + 16, String(x), 10, "middle");
    doc.line(toX(x), y0, toX(x), y0 + 4, "#333333");
  }
  doc.line(x0, y0, x1, y0, "#333333");
  doc.text((x0 + x1) / 2, HEIGHT - 14, xLabel, 11, "middle");

  order.forEach((method, i) => {
    const color = methodColor(method, order);
    const points: Array<[number, number]> = [];
    for (const x of xs) {
      const row = rows.find((r) => r.method === method && toNumber(r, "value") === x);
      if (!row) {
        throw new SchemaError(`method ${method} has no row at value ${x}`);
      }
      points.push([toX(x), toY(toNumber(row, "mean_sum_rate"))]);
    }
    doc.polyline(points, color);
    for (const [px, py] of points) doc.circle(px, py, 2.5, color);
    doc.text(x1 - 4, y1 + 14 * (i + 1), method, 11, "end");
    doc.line(x1 - 70, y1 + 14 * (i + 1) - 4, x1 - 52, y1 + 14 * (i + 1) - 4, color, 2);
  });

  const caption =
    `Mean sum-rate of ${order.join(", ")} across ${xLabel} values ${xs.join(", ")}.`;
  return { svg: doc.render(), caption };
}

export function renderDensitySweep(rows: Row[], title: string): Figure {
  return renderSweep(rows, title, "density factor d");
}

export function renderSizeSweep(rows: Row[], title: string): Figure {
  return renderSweep(rows, title, "network size M");
}

export function renderTimingTable(rows: Row[], title: string): Figure {
  const order = methodOrder(rows);
  const columns = ["method", "median_ms_per_sample", "mean_ms_per_sample", "ratio_vs_wmmse"];
  const headers = ["method", "median ms", "mean ms", "vs wmmse"];
  const rowH = 26;
  const height = MARGIN.top + rowH * (order.length + 1) + 30;
  const doc = new SvgDoc(WIDTH, height);
  doc.text(WIDTH / 2, 18, title, 13, "middle");

  const colX = [MARGIN.left, 260, 390, 520];
  headers.forEach((h, c) => doc.text(colX[c], MARGIN.top + 16, h, 11, c === 0 ? "start" : "end"));
  doc.line(MARGIN.left, MARGIN.top + 22, WIDTH - MARGIN.right, MARGIN.top + 22, "#333333");
  rows.forEach((row, r) => {
    const y = MARGIN.top + rowH * (r + 1) + 16;
    columns.forEach((col, c) => {
      const raw = col === "method" ? row[col] : toNumber(row, col).toFixed(3);
      doc.text(colX[c], y, raw, 11, c === 0 ? "start" : "end");
    });
  });

  const caption = `Per-sample inference time by method: ${order.join(", ")}.`;
  return { svg: doc.render(), caption };
}
