/**
 * Just enough SVG to draw the report figures, with every coordinate and
 * label formatted through fixed rules so a rerun reproduces the file byte
 * for byte.
 */

/** Pixel coordinates: two decimals, minus-zero folded into zero. */
export function px(v: number): string {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

/** Data labels: short round-trip through toPrecision to drop float noise. */
export function sig(v: number, digits = 4): string {
  if (v === 0) return "0";
  return String(Number(v.toPrecision(digits)));
}

export function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Tick positions with a 1/2/5 step, all inside [lo, hi]. */
export function niceTicks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo;
  if (!(span > 0) || !Number.isFinite(span)) return [lo];
  const rough = span / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    step = m * mag;
    if (span / step <= count) break;
  }
  const ticks: number[] = [];
  const start = Math.ceil(lo / step - 1e-9) * step;
  for (let v = start; v <= hi + 1e-9 * span; v += step) {
    // snap near-zero accumulation error before it leaks into labels
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export class SvgDoc {
  readonly width: number;
  readonly height: number;
  private els: string[] = [];

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
  }

  add(el: string): void {
    this.els.push(el);
  }

  render(): string {
    const head =
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}" ` +
      `font-family="sans-serif">`;
    const bg = `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="white"/>`;
    return [head, bg, ...this.els, "</svg>"].join("\n") + "\n";
  }
}

export interface Panel {
  box: Box;
  toX(v: number): number;
  toY(v: number): number;
}

export interface PanelOpts {
  xdom: [number, number];
  ydom: [number, number];
  xlabel: string;
  ylabel: string;
  title?: string;
}

const AXIS = "#333333";
const GRID = "#dddddd";

/** Frame, ticks and labels for one plot area; returns the data mapping. */
export function drawPanel(doc: SvgDoc, box: Box, opts: PanelOpts): Panel {
  const [x0, x1] = opts.xdom;
  const [y0, y1] = opts.ydom;
  const toX = (v: number) => box.x + ((v - x0) / (x1 - x0)) * box.w;
  const toY = (v: number) => box.y + box.h - ((v - y0) / (y1 - y0)) * box.h;

  for (const t of niceTicks(x0, x1)) {
    const gx = px(toX(t));
    doc.add(`<line x1="${gx}" y1="${px(box.y)}" x2="${gx}" y2="${px(box.y + box.h)}" stroke="${GRID}" stroke-width="0.5"/>`);
    doc.add(`<text x="${gx}" y="${px(box.y + box.h + 14)}" font-size="10" fill="${AXIS}" text-anchor="middle">${esc(sig(t))}</text>`);
  }
  for (const t of niceTicks(y0, y1)) {
    const gy = px(toY(t));
    doc.add(`<line x1="${px(box.x)}" y1="${gy}" x2="${px(box.x + box.w)}" y2="${gy}" stroke="${GRID}" stroke-width="0.5"/>`);
    doc.add(`<text x="${px(box.x - 5)}" y="${px(toY(t) + 3)}" font-size="10" fill="${AXIS}" text-anchor="end">${esc(sig(t))}</text>`);
  }
  doc.add(`<rect x="${px(box.x)}" y="${px(box.y)}" width="${px(box.w)}" height="${px(box.h)}" fill="none" stroke="${AXIS}" stroke-width="1"/>`);
  doc.add(`<text x="${px(box.x + box.w / 2)}" y="${px(box.y + box.h + 28)}" font-size="11" fill="${AXIS}" text-anchor="middle">${esc(opts.xlabel)}</text>`);
  doc.add(`<text x="${px(box.x - 38)}" y="${px(box.y + box.h / 2)}" font-size="11" fill="${AXIS}" text-anchor="middle" transform="rotate(-90 ${px(box.x - 38)} ${px(box.y + box.h / 2)})">${esc(opts.ylabel)}</text>`);
  if (opts.title) {
    doc.add(`<text x="${px(box.x + box.w / 2)}" y="${px(box.y - 8)}" font-size="12" fill="black" text-anchor="middle">${esc(opts.title)}</text>`);
  }
  return { box, toX, toY };
}

/** One polyline in data coordinates. */
export function polyline(
  panel: Panel,
  xs: number[],
  ys: number[],
  stroke: string,
  width = 1.5,
  dash?: string,
): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    pts.push(`${px(panel.toX(xs[i]))},${px(panel.toY(ys[i]))}`);
  }
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<polyline points="${pts.join(" ")}" fill="none" stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`;
}

/** Fixed palette; indexed by series position so colours never depend on data. */
export const PALETTE = [
  "#1f6fb4",
  "#d64a2e",
  "#2e8b57",
  "#8a2be2",
  "#b8860b",
  "#008b8b",
];

/** Dark-to-light blue ramp for time-ordered curve families. */
export function ramp(i: number, count: number): string {
  const f = count <= 1 ? 0 : i / (count - 1);
  const ch = (a: number, b: number) => Math.round(a + (b - a) * f);
  return `rgb(${ch(20, 160)},${ch(60, 200)},${ch(120, 235)})`;
}

/** Pad a data range by a fraction, guarding the degenerate flat case. */
export function padded(lo: number, hi: number, frac = 0.06): [number, number] {
  if (!(hi > lo)) {
    const c = lo;
    return [c - 1, c + 1];
  }
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}
