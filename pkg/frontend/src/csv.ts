/**
 * CSV reading with schema checks for the benchmark's output files.
 *
 * Lines starting with `#` are comments (the decay files end with a fit
 * summary comment); an empty file or a missing column is a SchemaError with
 * a column-level diagnostic, and nothing gets rendered from it.
 */

import { readFileSync } from "fs";

export interface CsvTable {
  path: string;
  header: string[];
  rows: string[][];
}

export class SchemaError extends Error {}

export function parseCsv(text: string, path = "<inline>"): CsvTable {
  const lines = text
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0 && !line.startsWith("#"));
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty CSV`);
  }
  const header = lines[0].split(",").map((h) => h.trim());
  if (lines.length === 1) {
    throw new SchemaError(`${path}: header only, no data rows`);
  }
  const rows: string[][] = [];
  for (const [i, line] of lines.slice(1).entries()) {
    const cells = line.split(",").map((c) => c.trim());
    if (cells.length !== header.length) {
      throw new SchemaError(
        `${path}: row ${i + 2} has ${cells.length} cells, header has ${header.length}`
      );
    }
    rows.push(cells);
  }
  return { path, header, rows };
}

export function readCsv(path: string): CsvTable {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new SchemaError(`${path}: ${(err as Error).message}`);
  }
  return parseCsv(text, path);
}

/** Column index lookup that names every missing column in the diagnostic. */
export function columnIndex(table: CsvTable, required: string[]): Map<string, number> {
  const missing = required.filter((name) => !table.header.includes(name));
  if (missing.length > 0) {
    throw new SchemaError(
      `${table.path}: missing column(s) ${missing.join(", ")}; ` +
        `found ${table.header.join(", ")}`
    );
  }
  return new Map(required.map((name) => [name, table.header.indexOf(name)]));
}

export function asNumber(table: CsvTable, row: number, col: number): number {
  const raw = table.rows[row][col];
  const value = Number(raw);
  if (raw === "" || Number.isNaN(value)) {
    throw new SchemaError(
      `${table.path}: row ${row + 2}, column ${table.header[col]}: ` +
        `expected a number, got ${JSON.stringify(raw)}`
    );
  }
  return value;
}
