import assert from "node:assert/strict";
import { test } from "node:test";

import { parseCsv } from "../src/csv";
import { extractFigure } from "../src/figures";

const SWEEP = [
  "tag,k,kappa,total_cost,regret,regret_norm",
  "opt,,,100.0,0.0,0.0",
  "dtpc_k3_kappa2,3,2,130.0,30.0,0.3",
  "dtpc_k2_kappa2,2,2,150.0,50.0,0.5",
  "dtpc_k2_kappa1,2,1,160.0,60.0,0.6",
].join("\n");

test("regret_vs_k groups by radius, sorts by window, skips the baseline row", () => {
  const fig = extractFigure("regret_vs_k", [parseCsv(SWEEP, "sweep.csv")]);
  assert.equal(fig.series.length, 2);
  const kappa2 = fig.series.find((s) => s.label === "kappa=2")!;
  assert.deepEqual(kappa2.points, [
    [2, 50],
    [3, 30],
  ]);
});

test("regret_vs_k demands the summary schema", () => {
  const bad = parseCsv("distance,max_norm\n0,1.0\n", "decay.csv");
  assert.throws(() => extractFigure("regret_vs_k", [bad]), /missing column/);
});

test("gap_vs_kappa takes one series per file, named after it", () => {
  const a = parseCsv("distance,max_norm\n1,0.5\n0,2.0\n", "out/decay_trajectory_7.csv");
  const fig = extractFigure("gap_vs_kappa", [a]);
  assert.equal(fig.series[0].label, "decay_trajectory_7");
  assert.deepEqual(fig.series[0].points, [
    [0, 2],
    [1, 0.5],
  ]);
});

test("regret_vs_time plots one series per controller column", () => {
  const table = parseCsv("t,dtpc,udtpc\n0,0.0,0.1\n1,1.0,2.0\n", "rt.csv");
  const fig = extractFigure("regret_vs_time", [table]);
  assert.deepEqual(
    fig.series.map((s) => s.label),
    ["dtpc", "udtpc"]
  );
  assert.deepEqual(fig.series[1].points, [
    [0, 0.1],
    [1, 2],
  ]);
});

test("regret_vs_time rejects a file without the time column", () => {
  const bad = parseCsv("step,dtpc\n0,1\n", "rt.csv");
  assert.throws(() => extractFigure("regret_vs_time", [bad]), /expected 't'/);
});

test("no inputs is an error", () => {
  assert.throws(() => extractFigure("gap_vs_kappa", []), /no input/);
});
