import type { Row } from "../csv.js";
import { BadValue } from "../errors.js";
import { drawPanel, padded, polyline, px, SvgDoc, PALETTE } from "../svg.js";

export interface ReactionInput {
  label: string;
  rows: Row[];
  file: string;
}

const CELL_W = 330;
const CELL_H = 220;
const MARGIN = { l: 62, r: 16, t: 34, b: 44 };
const PLOT_W = CELL_W - MARGIN.l - MARGIN.r;
const PLOT_H = CELL_H - MARGIN.t - MARGIN.b;

/**
 * One row per input file, reaction G(u) on the left and the selection
 * density psi(x) it corresponds to on the right.
 */
export function renderReaction(inputs: ReactionInput[]): string {
  if (inputs.length === 0) {
    throw new BadValue("reaction", "no input files");
  }
  const doc = new SvgDoc(2 * CELL_W + 8, inputs.length * CELL_H + 8);
  inputs.forEach((input, rowIdx) => {
    if (input.rows.length < 2) {
      throw new BadValue(input.file, "need at least two samples to draw a curve");
    }
    const xs = input.rows.map((r) => r.x as number);
    const gs = input.rows.map((r) => r.g as number);
    const psis = input.rows.map((r) => r.psi as number);
    const colour = PALETTE[rowIdx % PALETTE.length];
    const top = 4 + rowIdx * CELL_H;

    const gBox = { x: MARGIN.l, y: top + MARGIN.t, w: PLOT_W, h: PLOT_H };
    const gPanel = drawPanel(doc, gBox, {
      xdom: [0, 1],
      ydom: padded(Math.min(0, ...gs), Math.max(0, ...gs)),
      xlabel: "u",
      ylabel: "G(u)",
      title: input.label,
    });
    // G = 0 guide so sign changes are readable at a glance
    const zy = px(gPanel.toY(0));
    doc.add(`<line x1="${px(gBox.x)}" y1="${zy}" x2="${px(gBox.x + gBox.w)}" y2="${zy}" stroke="#999999" stroke-width="0.8" stroke-dasharray="4 3"/>`);
    doc.add(polyline(gPanel, xs, gs, colour));

    const pBox = { x: CELL_W + MARGIN.l, y: top + MARGIN.t, w: PLOT_W, h: PLOT_H };
    const pPanel = drawPanel(doc, pBox, {
      xdom: [0, 1],
      ydom: padded(0, Math.max(1e-9, ...psis)),
      xlabel: "x",
      ylabel: "psi(x)",
      title: input.label,
    });
    doc.add(polyline(pPanel, xs, psis, colour));
  });
  return doc.render();
}
