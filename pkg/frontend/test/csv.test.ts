import { describe, expect, it } from "vitest";
import { fileURLToPath } from "node:url";
import { parseTable, readTable, SCHEMAS } from "../src/csv.js";
import { BadValue, SchemaMismatch } from "../src/errors.js";

const fixture = (name: string) =>
  fileURLToPath(new URL(`./fixtures/${name}`, import.meta.url));

describe("parseTable", () => {
  it("reads numbers and leaves declared string columns alone", () => {
    const rows = parseTable(
      "velocity.csv",
      "n,v_min,v_max,ci,window\n64,1.0,1.25,0.1,2.25:6\n",
      SCHEMAS.velocity,
    );
    expect(rows).toHaveLength(1);
    expect(rows[0].n).toBe(64);
    expect(rows[0].v_max).toBeCloseTo(1.25, 12);
    expect(rows[0].window).toBe("2.25:6");
  });

  it("rejects an empty file as missing every column", () => {
    try {
      parseTable("velocity.csv", "", SCHEMAS.velocity);
      expect.unreachable("should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(SchemaMismatch);
      expect((err as SchemaMismatch).missing).toEqual([
        "n",
        "v_min",
        "v_max",
        "ci",
        "window",
      ]);
      expect((err as Error).message).toContain("velocity.csv");
    }
  });

  it("lists only the columns that are absent", () => {
    try {
      parseTable("x.csv", "n,ci,window\n4,0.1,a:b\n", SCHEMAS.velocity);
      expect.unreachable("should have thrown");
    } catch (err) {
      expect((err as SchemaMismatch).missing).toEqual(["v_min", "v_max"]);
    }
  });

  it("tolerates extra columns", () => {
    const rows = parseTable(
      "h.csv",
      "n,t,ks_mean,ks_stderr,replicas,comment\n100,1.0,0.1,0.01,3,hello\n",
      SCHEMAS.hydro,
    );
    expect(rows[0].ks_mean).toBeCloseTo(0.1, 12);
  });

  it("flags non-numeric cells with their position", () => {
    expect(() =>
      parseTable("p.csv", "t,x,u\n0.0,oops,1.0\n", SCHEMAS.pde),
    ).toThrowError(BadValue);
    expect(() =>
      parseTable("p.csv", "t,x,u\n0.0,oops,1.0\n", SCHEMAS.pde),
    ).toThrowError(/non-numeric x "oops" on data row 1/);
  });

  it("round-trips a real harness table", () => {
    const rows = readTable(fixture("hydro.csv"), SCHEMAS.hydro);
    expect(rows).toHaveLength(2);
    expect(rows.map((r) => r.n)).toEqual([100, 200]);
    expect(rows.every((r) => (r.ks_mean as number) > 0)).toBe(true);
  });
});
