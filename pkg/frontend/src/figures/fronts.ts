import type { Row } from "../csv.js";
import { BadValue } from "../errors.js";
import { drawPanel, esc, padded, polyline, px, ramp, sig, SvgDoc } from "../svg.js";

const WIDTH = 720;
const HEIGHT = 460;
const MARGIN = { l: 64, r: 110, t: 28, b: 48 };

/** Distinct snapshot times in file order of first appearance, sorted. */
export function groupByTime(rows: Row[]): Map<number, { x: number; u: number }[]> {
  const by = new Map<number, { x: number; u: number }[]>();
  for (const row of rows) {
    const t = row.t as number;
    let bucket = by.get(t);
    if (!bucket) {
      bucket = [];
      by.set(t, bucket);
    }
    bucket.push({ x: row.x as number, u: row.u as number });
  }
  for (const bucket of by.values()) {
    bucket.sort((a, b) => a.x - b.x);
  }
  return new Map([...by.entries()].sort((a, b) => a[0] - b[0]));
}

/** The tail profile U(x, t) at each stored snapshot, dark early to light late. */
export function renderFronts(file: string, rows: Row[]): string {
  if (rows.length === 0) {
    throw new BadValue(file, "no data rows");
  }
  const byTime = groupByTime(rows);
  const times = [...byTime.keys()];
  const allX = rows.map((r) => r.x as number);
  const doc = new SvgDoc(WIDTH, HEIGHT);
  const box = {
    x: MARGIN.l,
    y: MARGIN.t,
    w: WIDTH - MARGIN.l - MARGIN.r,
    h: HEIGHT - MARGIN.t - MARGIN.b,
  };
  const panel = drawPanel(doc, box, {
    xdom: padded(Math.min(...allX), Math.max(...allX), 0.02),
    ydom: [-0.02, 1.04],
    xlabel: "x",
    ylabel: "U(x, t)",
  });
  times.forEach((t, i) => {
    const curve = byTime.get(t)!;
    doc.add(
      polyline(
        panel,
        curve.map((p) => p.x),
        curve.map((p) => p.u),
        ramp(i, times.length),
      ),
    );
  });
  const lx = box.x + box.w + 12;
  times.forEach((t, i) => {
    const ly = box.y + 10 + i * 16;
    doc.add(`<line x1="${px(lx)}" y1="${px(ly - 3)}" x2="${px(lx + 18)}" y2="${px(ly - 3)}" stroke="${ramp(i, times.length)}" stroke-width="2"/>`);
    doc.add(`<text x="${px(lx + 23)}" y="${px(ly)}" font-size="10" fill="#333333">${esc(`t = ${sig(t, 3)}`)}</text>`);
  });
  return doc.render();
}
