import { describe, expect, it } from "vitest";
import { fileURLToPath } from "node:url";
import { readTable, SCHEMAS } from "../src/csv.js";
import { BadValue } from "../src/errors.js";
import { fitLine, renderVelocity, velocityPoints } from "../src/figures/velocity.js";

const VEL = fileURLToPath(new URL("./fixtures/velocity.csv", import.meta.url));

describe("velocityPoints", () => {
  it("places each population at 1/log(n)^2, smallest abscissa first", () => {
    const points = velocityPoints(VEL, readTable(VEL, SCHEMAS.velocity));
    expect(points.map((p) => p.n)).toEqual([128, 64, 32]);
    for (const p of points) {
      expect(p.x).toBeCloseTo(1 / Math.log(p.n) ** 2, 12);
    }
  });

  it("needs two rows", () => {
    expect(() =>
      velocityPoints("v.csv", [{ n: 64, v_min: 1, v_max: 1.2, ci: 0.1, window: "a" }]),
    ).toThrowError(BadValue);
  });
});

describe("fitLine", () => {
  it("matches the exact two-point line", () => {
    const { slope, intercept } = fitLine([
      { n: 2, x: 1, v: 3, ci: 0 },
      { n: 3, x: 2, v: 5, ci: 0 },
    ]);
    expect(slope).toBeCloseTo(2, 12);
    expect(intercept).toBeCloseTo(1, 12);
  });

  it("matches a hand-solved three-point least squares", () => {
    // xs 0,1,2 and vs 1,3,4: slope 3/2, intercept 7/6
    const { slope, intercept } = fitLine([
      { n: 2, x: 0, v: 1, ci: 0 },
      { n: 3, x: 1, v: 3, ci: 0 },
      { n: 4, x: 2, v: 4, ci: 0 },
    ]);
    expect(slope).toBeCloseTo(1.5, 12);
    expect(intercept).toBeCloseTo(7 / 6, 12);
  });
});

describe("renderVelocity", () => {
  it("draws points, error bars and the fitted line", () => {
    const svg = renderVelocity(VEL, readTable(VEL, SCHEMAS.velocity));
    expect(svg.match(/<circle/g)).toHaveLength(3);
    // one stem and two caps per point, plus the dashed fit line
    expect(svg.match(/<line/g)!.length).toBeGreaterThanOrEqual(10);
    expect(svg).toContain("stroke-dasharray");
    expect(svg).toContain("fit: slope");
    expect(svg).toContain("n = 128");
    expect(svg).toContain('viewBox="0 0 640 440"');
  });

  it("is deterministic", () => {
    const rows = readTable(VEL, SCHEMAS.velocity);
    expect(renderVelocity(VEL, rows)).toBe(renderVelocity(VEL, rows));
  });
});
