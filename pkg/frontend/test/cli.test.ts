import { describe, expect, it } from "vitest";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { run } from "../src/cli.js";

const fixture = (name: string) =>
  fileURLToPath(new URL(`./fixtures/${name}`, import.meta.url));

function capture() {
  const chunks: string[] = [];
  return { sink: (s: string) => void chunks.push(s), text: () => chunks.join("") };
}

const scratch = () => mkdtempSync(join(tmpdir(), "report-plots-"));

describe("run", () => {
  it("renders a velocity figure and exits 0", () => {
    const out = join(scratch(), "vel.svg");
    const err = capture();
    expect(run(["velocity", fixture("velocity.csv"), "--out", out], err.sink)).toBe(0);
    expect(err.text()).toBe("");
    expect(readFileSync(out, "utf8")).toMatch(/^<svg /);
  });

  it("renders the three-row reaction figure with labels", () => {
    const out = join(scratch(), "fig1.svg");
    const code = run(
      [
        "reaction",
        fixture("reaction-fisher.csv"),
        fixture("reaction-allen-cahn.csv"),
        fixture("reaction-cubic.csv"),
        "--labels",
        "fisher,allen-cahn,cubic",
        "--out",
        out,
      ],
      capture().sink,
    );
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8")).toContain(">cubic</text>");
  });

  it("renders the overlay from the three harness files", () => {
    const out = join(scratch(), "overlay.svg");
    const code = run(
      [
        "hydro-overlay",
        fixture("snapshots.csv"),
        fixture("pde-overlay.csv"),
        fixture("hydro.csv"),
        "--t",
        "1.0",
        "--out",
        out,
      ],
      capture().sink,
    );
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8")).toContain("KS(n = 200)");
  });

  it("exits 1 on an empty velocity.csv and names every missing column", () => {
    const dir = scratch();
    const empty = join(dir, "velocity.csv");
    writeFileSync(empty, "");
    const err = capture();
    const code = run(["velocity", empty, "--out", join(dir, "x.svg")], err.sink);
    expect(code).toBe(1);
    expect(err.text()).toContain("schema mismatch");
    expect(err.text()).toContain("n, v_min, v_max, ci, window");
    expect(existsSync(join(dir, "x.svg"))).toBe(false);
  });

  it("exits 1 on a header with missing columns", () => {
    const dir = scratch();
    const bad = join(dir, "pde.csv");
    writeFileSync(bad, "t,x\n0,1\n");
    const err = capture();
    expect(run(["fronts", bad, "--out", join(dir, "x.svg")], err.sink)).toBe(1);
    expect(err.text()).toContain("missing columns u");
  });

  it("exits 1 for an unknown kind, a missing --out, and a missing file", () => {
    const err = capture();
    expect(run(["sparkline", fixture("velocity.csv"), "--out", "/tmp/x.svg"], err.sink)).toBe(1);
    expect(err.text()).toContain("unknown figure kind");
    expect(run(["velocity", fixture("velocity.csv")], capture().sink)).toBe(1);
    expect(run(["velocity", "/nonexistent/velocity.csv", "--out", "/tmp/x.svg"], capture().sink)).toBe(1);
  });

  it("rejects a label count that does not match the file count", () => {
    const err = capture();
    const code = run(
      ["reaction", fixture("reaction-fisher.csv"), "--labels", "a,b", "--out", "/tmp/x.svg"],
      err.sink,
    );
    expect(code).toBe(1);
    expect(err.text()).toContain("2 labels for 1 files");
  });

  it("prints usage on --help and exits 0", () => {
    expect(run(["--help"], capture().sink)).toBe(0);
  });
});
