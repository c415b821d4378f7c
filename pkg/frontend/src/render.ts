/**
 * One figure per spec: read the CSV, pick the kind's columns, write an SVG
 * and a sidecar `<output>.data.json` holding the exact plotted arrays.
 *
 * The sidecar, not the pixels, is the testable contract: its arrays must
 * equal the CSV columns bit-exactly, and reruns must reproduce it
 * byte-identically.
 */

import { writeFileSync } from "node:fs";

import { CsvTable, column, pairedColumns, readCsv } from "./csv.js";
import { FigureSpec, resolvedScales } from "./spec.js";
import { Series, lineChart } from "./svg.js";

interface KindLayout {
  x: string;
  series: string[];
  optionalSeries?: string[];
  xLabel: string;
  yLabel: string;
  title: string;
}

const LAYOUTS: Record<FigureSpec["kind"], KindLayout> = {
  decay: {
    x: "n_reduced",
    series: ["e_r_laplace"],
    optionalSeries: ["e_r_classical"],
    xLabel: "reduced space size",
    yLabel: "relative reduction error",
    title: "Reduction error decay",
  },
  "estimator-trace": {
    x: "iteration",
    series: ["delta_max"],
    xLabel: "greedy iteration",
    yLabel: "worst error estimate",
    title: "Greedy selection trace",
  },
  timing: {
    x: "n_reduced",
    series: ["online_laplace_s", "online_classical_s"],
    xLabel: "reduced space size",
    yLabel: "online time [s]",
    title: "Online solve time",
  },
  "timing-ratio": {
    x: "n_reduced",
    series: ["speedup_ratio"],
    xLabel: "reduced space size",
    yLabel: "stepping time / contour time",
    title: "Online speedup",
  },
  svd: {
    x: "index",
    series: ["sigma_time", "sigma_laplace"],
    xLabel: "singular value index",
    yLabel: "singular value",
    title: "Snapshot singular values",
  },
};

export interface RenderResult {
  svgPath: string;
  dataPath: string;
  series: Series[];
}

function seriesFor(table: CsvTable, layout: KindLayout): Series[] {
  const out: Series[] = [];
  for (const name of layout.series) {
    const { x, y } = pairedColumns(table, layout.x, name);
    out.push({ label: name, x, y });
  }
  for (const name of layout.optionalSeries ?? []) {
    if (table.header.includes(name)) {
      const { x, y } = pairedColumns(table, layout.x, name);
      out.push({ label: name, x, y });
    }
  }
  return out;
}

export function render(spec: FigureSpec): RenderResult {
  const layout = LAYOUTS[spec.kind];
  const tables = spec.inputs.map((p) => readCsv(p));
  const series: Series[] = [];
  for (const table of tables) {
    // touch the x column so a bad header fails with the full column listing
    column(table, layout.x);
    series.push(...seriesFor(table, layout));
  }
  const scales = resolvedScales(spec);
  const subtitle = tables[0].comments.join("  |  ");
  const svg = lineChart(series, {
    title: spec.title ?? layout.title,
    xLabel: layout.xLabel,
    yLabel: layout.yLabel,
    xScale: scales.x,
    yScale: scales.y,
    subtitle,
  });
  writeFileSync(spec.output, svg);
  const dataPath = `${spec.output}.data.json`;
  const dump = {
    kind: spec.kind,
    inputs: spec.inputs,
    x_scale: scales.x,
    y_scale: scales.y,
    series: series.map((s) => ({ label: s.label, x: s.x, y: s.y })),
    metadata: tables.map((t) => t.comments),
  };
  writeFileSync(dataPath, JSON.stringify(dump, null, 1) + "\n");
  return { svgPath: spec.output, dataPath, series };
}
