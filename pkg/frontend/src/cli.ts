#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { basename } from "node:path";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";
import { readTable, SCHEMAS } from "./csv.js";
import { BadValue, SchemaMismatch } from "./errors.js";
import { renderFronts } from "./figures/fronts.js";
import { renderOverlay } from "./figures/overlay.js";
import { renderReaction } from "./figures/reaction.js";
import { renderVelocity } from "./figures/velocity.js";

const USAGE = `usage: report-plots <kind> <csv...> --out figure.svg

kinds:
  reaction       one or more reaction.csv files, one G/psi row each
                 (--labels "a,b,c" to name the rows)
  fronts         one pde.csv
  velocity       one velocity.csv
  hydro-overlay  snapshots.csv pde.csv hydro.csv (--t to pick the time)
`;

function stripExt(path: string): string {
  return basename(path).replace(/\.[^.]+$/, "");
}

function build(kind: string, files: string[], labels?: string, t?: string): string {
  switch (kind) {
    case "reaction": {
      if (files.length === 0) {
        throw new BadValue("reaction", "give at least one reaction.csv");
      }
      const names = labels === undefined ? files.map(stripExt) : labels.split(",");
      if (names.length !== files.length) {
        throw new BadValue("reaction", `${names.length} labels for ${files.length} files`);
      }
      return renderReaction(
        files.map((file, i) => ({
          file,
          label: names[i].trim(),
          rows: readTable(file, SCHEMAS.reaction),
        })),
      );
    }
    case "fronts": {
      if (files.length !== 1) {
        throw new BadValue("fronts", "expected exactly one pde.csv");
      }
      return renderFronts(files[0], readTable(files[0], SCHEMAS.pde));
    }
    case "velocity": {
      if (files.length !== 1) {
        throw new BadValue("velocity", "expected exactly one velocity.csv");
      }
      return renderVelocity(files[0], readTable(files[0], SCHEMAS.velocity));
    }
    case "hydro-overlay": {
      if (files.length !== 3) {
        throw new BadValue("hydro-overlay", "expected snapshots.csv pde.csv hydro.csv");
      }
      let requested: number | undefined;
      if (t !== undefined) {
        requested = Number(t);
        if (!Number.isFinite(requested)) {
          throw new BadValue("hydro-overlay", `--t ${JSON.stringify(t)} is not a number`);
        }
      }
      return renderOverlay(
        files[0],
        readTable(files[0], SCHEMAS.snapshots),
        readTable(files[1], SCHEMAS.pde),
        readTable(files[2], SCHEMAS.hydro),
        requested,
      );
    }
    default:
      throw new BadValue("cli", `unknown figure kind ${JSON.stringify(kind)}`);
  }
}

export function run(argv: string[], stderr: (s: string) => void = (s) => process.stderr.write(s)): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        out: { type: "string" },
        labels: { type: "string" },
        t: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    });
  } catch (err) {
    stderr(`${(err as Error).message}\n${USAGE}`);
    return 1;
  }
  if (parsed.values.help) {
    process.stdout.write(USAGE);
    return 0;
  }
  const [kind, ...files] = parsed.positionals;
  if (!kind || !parsed.values.out) {
    stderr(USAGE);
    return 1;
  }
  try {
    const svg = build(kind, files, parsed.values.labels, parsed.values.t);
    writeFileSync(parsed.values.out, svg);
    process.stdout.write(`wrote ${parsed.values.out}\n`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaMismatch || err instanceof BadValue) {
      stderr(`${err.message}\n`);
      return 1;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      stderr(`${(err as Error).message}\n`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(run(process.argv.slice(2)));
}
