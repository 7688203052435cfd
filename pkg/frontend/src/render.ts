/**
 * CLI: render one figure kind from one or more CSV files to an SVG.
 *
 *   render --kind gap_vs_kappa --in decay_trajectory.csv --out fig2.svg --log-y
 *
 * Exits non-zero (and writes nothing) on schema mismatches, so a broken
 * pipeline never leaves a half-plotted file behind.
 */

import { writeFileSync } from "fs";

import { readCsv, SchemaError } from "./csv";
import { extractFigure, FIGURE_KINDS, FigureKind } from "./figures";
import { renderChart } from "./svg";

export interface RenderArgs {
  kind: FigureKind;
  inputs: string[];
  out: string;
  logY: boolean;
}

export function parseArgs(argv: string[]): RenderArgs {
  let kind: string | undefined;
  let out: string | undefined;
  let logY = false;
  const inputs: string[] = [];
  let i = 0;
  while (i < argv.length) {
    const arg = argv[i];
    if (arg === "--kind") {
      kind = argv[++i];
    } else if (arg === "--in") {
      i++;
      while (i < argv.length && !argv[i].startsWith("--")) {
        inputs.push(argv[i]);
        i++;
      }
      continue;
    } else if (arg === "--out") {
      out = argv[++i];
    } else if (arg === "--log-y") {
      logY = true;
    } else {
      throw new SchemaError(`unknown argument ${arg}`);
    }
    i++;
  }
  if (!kind || !(FIGURE_KINDS as string[]).includes(kind)) {
    throw new SchemaError(
      `--kind must be one of ${FIGURE_KINDS.join(", ")}, got ${kind ?? "(none)"}`
    );
  }
  if (inputs.length === 0) {
    throw new SchemaError("at least one --in CSV is required");
  }
  if (!out) {
    throw new SchemaError("--out PATH is required");
  }
  return { kind: kind as FigureKind, inputs, out, logY };
}

export function renderToString(args: RenderArgs): string {
  const tables = args.inputs.map(readCsv);
  const data = extractFigure(args.kind, tables);
  return renderChart(data, { logY: args.logY });
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const svg = renderToString(args);
    writeFileSync(args.out, svg);
    process.stdout.write(`${args.out}\n`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || err instanceof Error) {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
