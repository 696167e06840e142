import { readFileSync } from "node:fs";
import Papa from "papaparse";
import { BadValue, SchemaMismatch } from "./errors.js";

export type ColumnKind = "number" | "string";

/** Required columns and how to read them; extra columns pass through untouched. */
export type TableSpec = Record<string, ColumnKind>;

export type Row = Record<string, number | string>;

export function parseTable(file: string, text: string, spec: TableSpec): Row[] {
  const parsed = Papa.parse(text, { header: true, skipEmptyLines: true });
  const fields = parsed.meta.fields ?? [];
  const missing = Object.keys(spec).filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new SchemaMismatch(file, missing);
  }
  const rows: Row[] = [];
  for (let i = 0; i < parsed.data.length; i++) {
    const raw = parsed.data[i];
    const row: Row = {};
    for (const [column, kind] of Object.entries(spec)) {
      const cell = (raw[column] ?? "").trim();
      if (kind === "string") {
        row[column] = cell;
        continue;
      }
      if (cell === "") {
        throw new BadValue(file, `empty ${column} on data row ${i + 1}`);
      }
      const value = Number(cell);
      if (!Number.isFinite(value)) {
        throw new BadValue(file, `non-numeric ${column} ${JSON.stringify(cell)} on data row ${i + 1}`);
      }
      row[column] = value;
    }
    rows.push(row);
  }
  return rows;
}

export function readTable(path: string, spec: TableSpec): Row[] {
  return parseTable(path, readFileSync(path, "utf8"), spec);
}

export const SCHEMAS = {
  reaction: { x: "number", psi: "number", g: "number" },
  pde: { t: "number", x: "number", u: "number" },
  velocity: {
    n: "number",
    v_min: "number",
    v_max: "number",
    ci: "number",
    window: "string",
  },
  snapshots: { t: "number", particle_index: "number", x: "number" },
  hydro: {
    n: "number",
    t: "number",
    ks_mean: "number",
    ks_stderr: "number",
    replicas: "number",
  },
} satisfies Record<string, TableSpec>;
