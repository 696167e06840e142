import type { Row } from "../csv.js";
import { BadValue } from "../errors.js";
import { drawPanel, esc, padded, px, sig, SvgDoc } from "../svg.js";

const WIDTH = 640;
const HEIGHT = 440;
const MARGIN = { l: 66, r: 24, t: 30, b: 50 };

export interface VelocityPoint {
  n: number;
  x: number; // 1 / log(n)^2
  v: number; // midpoint of the min- and max-slope estimates
  ci: number;
}

export function velocityPoints(file: string, rows: Row[]): VelocityPoint[] {
  if (rows.length < 2) {
    throw new BadValue(file, "need at least two population sizes to fit a line");
  }
  const points = rows.map((row) => {
    const n = row.n as number;
    if (!(n > 1)) {
      throw new BadValue(file, `population ${n} has no 1/log(n)^2 coordinate`);
    }
    return {
      n,
      x: 1 / Math.log(n) ** 2,
      v: ((row.v_min as number) + (row.v_max as number)) / 2,
      ci: row.ci as number,
    };
  });
  points.sort((a, b) => a.x - b.x);
  return points;
}

/** Plain least squares through the plotted points. */
export function fitLine(points: VelocityPoint[]): { slope: number; intercept: number } {
  const n = points.length;
  const mx = points.reduce((s, p) => s + p.x, 0) / n;
  const mv = points.reduce((s, p) => s + p.v, 0) / n;
  let sxx = 0;
  let sxv = 0;
  for (const p of points) {
    sxx += (p.x - mx) ** 2;
    sxv += (p.x - mx) * (p.v - mv);
  }
  const slope = sxv / sxx;
  return { slope, intercept: mv - slope * mx };
}

/**
 * Selection speed against 1/log(n)^2 with error bars and the fitted line,
 * extended to the axis so the n -> infinity intercept is visible.
 */
export function renderVelocity(file: string, rows: Row[]): string {
  const points = velocityPoints(file, rows);
  const { slope, intercept } = fitLine(points);
  const doc = new SvgDoc(WIDTH, HEIGHT);
  const box = {
    x: MARGIN.l,
    y: MARGIN.t,
    w: WIDTH - MARGIN.l - MARGIN.r,
    h: HEIGHT - MARGIN.t - MARGIN.b,
  };
  const xdom: [number, number] = [0, Math.max(...points.map((p) => p.x)) * 1.08];
  const lows = points.map((p) => p.v - p.ci);
  const highs = points.map((p) => p.v + p.ci);
  const fitEnds = [intercept, intercept + slope * xdom[1]];
  const panel = drawPanel(doc, box, {
    xdom,
    ydom: padded(Math.min(...lows, ...fitEnds), Math.max(...highs, ...fitEnds)),
    xlabel: "1 / log(n)^2",
    ylabel: "front speed estimate",
  });
  doc.add(`<line x1="${px(panel.toX(0))}" y1="${px(panel.toY(intercept))}" x2="${px(panel.toX(xdom[1]))}" y2="${px(panel.toY(intercept + slope * xdom[1]))}" stroke="#888888" stroke-width="1.2" stroke-dasharray="6 4"/>`);
  for (const p of points) {
    const cx = px(panel.toX(p.x));
    doc.add(`<line x1="${cx}" y1="${px(panel.toY(p.v - p.ci))}" x2="${cx}" y2="${px(panel.toY(p.v + p.ci))}" stroke="#1f6fb4" stroke-width="1"/>`);
    for (const end of [p.v - p.ci, p.v + p.ci]) {
      doc.add(`<line x1="${px(panel.toX(p.x) - 4)}" y1="${px(panel.toY(end))}" x2="${px(panel.toX(p.x) + 4)}" y2="${px(panel.toY(end))}" stroke="#1f6fb4" stroke-width="1"/>`);
    }
    doc.add(`<circle cx="${cx}" cy="${px(panel.toY(p.v))}" r="3.5" fill="#1f6fb4"/>`);
    doc.add(`<text x="${px(panel.toX(p.x) + 7)}" y="${px(panel.toY(p.v) - 7)}" font-size="10" fill="#333333">${esc(`n = ${p.n}`)}</text>`);
  }
  doc.add(`<text x="${px(box.x + 8)}" y="${px(box.y + 16)}" font-size="11" fill="#333333">${esc(`fit: slope ${sig(slope)}, intercept ${sig(intercept)}`)}</text>`);
  return doc.render();
}
