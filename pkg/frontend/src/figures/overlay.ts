import type { Row } from "../csv.js";
import { BadValue } from "../errors.js";
import { drawPanel, esc, padded, polyline, px, sig, SvgDoc } from "../svg.js";
import { groupByTime } from "./fronts.js";

const WIDTH = 680;
const HEIGHT = 440;
const MARGIN = { l: 64, r: 24, t: 30, b: 50 };

function distinctTimes(rows: Row[]): number[] {
  return [...new Set(rows.map((r) => r.t as number))].sort((a, b) => a - b);
}

export function pickTime(
  snapFile: string,
  snapRows: Row[],
  pdeRows: Row[],
  requested?: number,
): number {
  const snapTimes = distinctTimes(snapRows);
  const pdeTimes = new Set(pdeRows.map((r) => r.t as number));
  const common = snapTimes.filter((t) => pdeTimes.has(t));
  if (common.length === 0) {
    throw new BadValue(snapFile, "no snapshot time is present in both CSVs");
  }
  if (requested === undefined) {
    return common[common.length - 1];
  }
  const hit = common.find((t) => Math.abs(t - requested) <= 1e-9);
  if (hit === undefined) {
    throw new BadValue(
      snapFile,
      `t = ${requested} not stored in both CSVs (shared times: ${common.map((t) => sig(t, 6)).join(", ")})`,
    );
  }
  return hit;
}

/** Tail ECDF steps: fraction of particles at or right of x. */
export function tailSteps(positions: number[]): { x: number; f: number }[] {
  const xs = [...positions].sort((a, b) => a - b);
  const n = xs.length;
  const pts: { x: number; f: number }[] = [];
  for (let i = 0; i < n; i++) {
    pts.push({ x: xs[i], f: (n - i) / n });
    pts.push({ x: xs[i], f: (n - i - 1) / n });
  }
  return pts;
}

/**
 * Particle tail ECDF at one stored time against the PDE tail profile,
 * annotated with the ensemble KS value recorded for that (n, t).
 */
export function renderOverlay(
  snapFile: string,
  snapRows: Row[],
  pdeRows: Row[],
  hydroRows: Row[],
  requested?: number,
): string {
  if (snapRows.length === 0) {
    throw new BadValue(snapFile, "no data rows");
  }
  const t = pickTime(snapFile, snapRows, pdeRows, requested);
  const positions = snapRows.filter((r) => (r.t as number) === t).map((r) => r.x as number);
  const n = positions.length;
  const steps = tailSteps(positions);
  const pdeCurve = groupByTime(pdeRows).get(t)!;

  const span = Math.max(...positions) - Math.min(...positions);
  const lo = Math.min(...positions) - 0.15 * span;
  const hi = Math.max(...positions) + 0.15 * span;
  const clipped = pdeCurve.filter((p) => p.x >= lo && p.x <= hi);

  const doc = new SvgDoc(WIDTH, HEIGHT);
  const box = {
    x: MARGIN.l,
    y: MARGIN.t,
    w: WIDTH - MARGIN.l - MARGIN.r,
    h: HEIGHT - MARGIN.t - MARGIN.b,
  };
  const panel = drawPanel(doc, box, {
    xdom: padded(lo, hi, 0.01),
    ydom: [-0.02, 1.04],
    xlabel: "x",
    ylabel: `tail fraction at t = ${sig(t, 4)}`,
  });
  doc.add(
    polyline(
      panel,
      [lo, ...steps.map((p) => p.x), hi],
      [1, ...steps.map((p) => p.f), 0],
      "#1f6fb4",
      1.2,
    ),
  );
  if (clipped.length >= 2) {
    doc.add(
      polyline(
        panel,
        clipped.map((p) => p.x),
        clipped.map((p) => p.u),
        "#d64a2e",
        1.8,
      ),
    );
  }
  const match = hydroRows.find(
    (r) => (r.n as number) === n && Math.abs((r.t as number) - t) <= 1e-9,
  );
  const note = match
    ? `KS(n = ${n}) = ${sig(match.ks_mean as number)} over ${match.replicas} replicas`
    : `n = ${n}; no matching row in hydro.csv`;
  doc.add(`<text x="${px(box.x + 8)}" y="${px(box.y + 16)}" font-size="11" fill="#333333">${esc(note)}</text>`);
  doc.add(`<line x1="${px(box.x + 8)}" y1="${px(box.y + 30)}" x2="${px(box.x + 26)}" y2="${px(box.y + 30)}" stroke="#1f6fb4" stroke-width="2"/>`);
  doc.add(`<text x="${px(box.x + 31)}" y="${px(box.y + 33)}" font-size="10" fill="#333333">particles</text>`);
  doc.add(`<line x1="${px(box.x + 8)}" y1="${px(box.y + 44)}" x2="${px(box.x + 26)}" y2="${px(box.y + 44)}" stroke="#d64a2e" stroke-width="2"/>`);
  doc.add(`<text x="${px(box.x + 31)}" y="${px(box.y + 47)}" font-size="10" fill="#333333">hydrodynamic tail</text>`);
  return doc.render();
}
