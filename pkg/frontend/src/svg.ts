/** Minimal deterministic SVG builder. All coordinates are rounded to a fixed
 *  number of decimals so the same data always serializes to the same bytes. */

const DECIMALS = 3;

export function fmt(x: number): string {
  const s = x.toFixed(DECIMALS);
  return s === "-0.000" ? "0.000" : s;
}

export function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export class SvgDoc {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, strokeWidth = 1, dash?: string) {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${fmt(strokeWidth)}"${d}/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string, stroke?: string) {
    const s = stroke ? ` stroke="${stroke}"` : "";
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"${s}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, fill: string) {
    this.parts.push(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" fill="${fill}"/>`);
  }

  polyline(points: Array<[number, number]>, stroke: string, strokeWidth = 1.5) {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${fmt(strokeWidth)}"/>`,
    );
  }

  text(x: number, y: number, content: string, size = 11, anchor: "start" | "middle" | "end" = "start") {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-family="monospace" font-size="${size}" text-anchor="${anchor}">${escapeText(content)}</text>`,
    );
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

/** Map a data interval onto a pixel interval. */
export function scaleLinear(d0: number, d1: number, r0: number, r1: number) {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

/** Round tick positions covering [lo, hi]. */
export function ticks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / count / step;
  const unit = err >= 7.5 ? 10 : err >= 3 ? 5 : err >= 1.5 ? 2 : 1;
  const s = unit * step;
  const start = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += s) out.push(Number(v.toPrecision(12)));
  return out;
}

/** Fixed method palette so colors don't depend on row order. */
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export function methodColor(method: string, order: string[]): string {
  const i = order.indexOf(method);
  return PALETTE[(i >= 0 ? i : order.length) % PALETTE.length];
}
