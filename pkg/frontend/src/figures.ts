/**
 * Turns the benchmark CSVs into plottable series, one extractor per figure
 * kind.  This layer only reshapes what the control package wrote; it never
 * recomputes costs or regrets.
 */

import { basename } from "path";

import { asNumber, columnIndex, CsvTable, SchemaError } from "./csv";

export type FigureKind = "regret_vs_k" | "gap_vs_kappa" | "regret_vs_time";

export const FIGURE_KINDS: FigureKind[] = [
  "regret_vs_k",
  "gap_vs_kappa",
  "regret_vs_time",
];

export interface Series {
  label: string;
  points: Array<[number, number]>;
}

export interface FigureData {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
}

function stem(path: string): string {
  return basename(path).replace(/\.csv$/, "");
}

/** Summary/sweep schema -> regret against the lookahead window, one series
 * per truncation radius found in the file(s). */
function regretVsK(tables: CsvTable[]): FigureData {
  const byKappa = new Map<string, Array<[number, number]>>();
  for (const table of tables) {
    const cols = columnIndex(table, ["tag", "k", "kappa", "total_cost", "regret"]);
    for (let r = 0; r < table.rows.length; r++) {
      const kRaw = table.rows[r][cols.get("k")!];
      if (kRaw === "") continue; // the offline-baseline row carries no k
      const kappaRaw = table.rows[r][cols.get("kappa")!];
      const key = kappaRaw === "" ? "centralized" : `kappa=${kappaRaw}`;
      const k = asNumber(table, r, cols.get("k")!);
      const regret = asNumber(table, r, cols.get("regret")!);
      if (!byKappa.has(key)) byKappa.set(key, []);
      byKappa.get(key)!.push([k, regret]);
    }
  }
  const series = [...byKappa.entries()].map(([label, points]) => ({
    label,
    points: points.sort((a, b) => a[0] - b[0]),
  }));
  if (series.every((s) => s.points.length === 0)) {
    throw new SchemaError("no rows with a lookahead window to plot");
  }
  return { title: "Regret vs lookahead window", xLabel: "k", yLabel: "regret", series };
}

/** Decay-profile schema -> gap against distance/radius, one series per file. */
function gapVsKappa(tables: CsvTable[]): FigureData {
  const series = tables.map((table) => {
    const cols = columnIndex(table, ["distance", "max_norm"]);
    const points: Array<[number, number]> = table.rows.map((_, r) => [
      asNumber(table, r, cols.get("distance")!),
      asNumber(table, r, cols.get("max_norm")!),
    ]);
    return { label: stem(table.path), points: points.sort((a, b) => a[0] - b[0]) };
  });
  return {
    title: "Gap vs truncation radius",
    xLabel: "radius / distance",
    yLabel: "max block norm",
    series,
  };
}

/** Regret-over-time schema (t + one column per controller). */
function regretVsTime(tables: CsvTable[]): FigureData {
  const series: Series[] = [];
  for (const table of tables) {
    if (table.header[0] !== "t" || table.header.length < 2) {
      throw new SchemaError(
        `${table.path}: expected 't' plus one regret column per controller, ` +
          `found ${table.header.join(", ")}`
      );
    }
    for (let c = 1; c < table.header.length; c++) {
      const points: Array<[number, number]> = table.rows.map((_, r) => [
        asNumber(table, r, 0),
        asNumber(table, r, c),
      ]);
      series.push({ label: table.header[c], points });
    }
  }
  return {
    title: "Cumulative regret over time",
    xLabel: "t",
    yLabel: "cumulative regret",
    series,
  };
}

export function extractFigure(kind: FigureKind, tables: CsvTable[]): FigureData {
  if (tables.length === 0) {
    throw new SchemaError("no input CSVs given");
  }
  switch (kind) {
    case "regret_vs_k":
      return regretVsK(tables);
    case "gap_vs_kappa":
      return gapVsKappa(tables);
    case "regret_vs_time":
      return regretVsTime(tables);
  }
}
