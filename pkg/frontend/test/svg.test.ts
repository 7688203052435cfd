import assert from "node:assert/strict";
import { test } from "node:test";

import { FigureData } from "../src/figures";
import { renderChart } from "../src/svg";

const DATA: FigureData = {
  title: "demo",
  xLabel: "x",
  yLabel: "y",
  series: [
    { label: "a", points: [[0, 1], [1, 0.1], [2, 0.01]] },
    { label: "b", points: [[0, 2], [1, 0.2], [2, 0.0]] },
  ],
};

test("renders one polyline per series plus legend entries", () => {
  const svg = renderChart(DATA);
  assert.match(svg, /^<svg/);
  assert.equal((svg.match(/<polyline/g) ?? []).length, 2);
  assert.match(svg, />a<\/text>/);
  assert.match(svg, />b<\/text>/);
  assert.match(svg, /demo/);
});

test("log axis drops non-positive points and labels decades", () => {
  const svg = renderChart(DATA, { logY: true });
  // series b has a zero at x=2: only two of its points survive
  assert.match(svg, /log scale/);
  assert.match(svg, /1e-2/);
  const polyB = svg.split("<polyline")[2];
  assert.equal((polyB.match(/,/g) ?? []).length >= 2, true);
});

test("log axis with nothing positive is an error", () => {
  const flat: FigureData = {
    ...DATA,
    series: [{ label: "z", points: [[0, 0], [1, -1]] }],
  };
  assert.throws(() => renderChart(flat, { logY: true }), /no positive values/);
});

test("rendering is deterministic", () => {
  assert.equal(renderChart(DATA), renderChart(DATA));
});

test("log scaling puts equal-ratio points at equal spacing", () => {
  const geo: FigureData = {
    title: "g",
    xLabel: "x",
    yLabel: "y",
    series: [{ label: "s", points: [[0, 100], [1, 10], [2, 1]] }],
  };
  const svg = renderChart(geo, { logY: true });
  const match = svg.match(/<polyline points="([^"]+)"/);
  assert.ok(match);
  const ys = match![1].split(" ").map((pair) => Number(pair.split(",")[1]));
  const gap1 = ys[1] - ys[0];
  const gap2 = ys[2] - ys[1];
  assert.ok(Math.abs(gap1 - gap2) < 0.05, `${gap1} vs ${gap2}`);
});
