export { parseCsv, readCsv, column, pairedColumns, MissingColumnError } from "./csv.js";
export { FIGURE_KINDS, figureSpecSchema, resolvedScales } from "./spec.js";
export type { FigureKind, FigureSpec } from "./spec.js";
export { lineChart } from "./svg.js";
export type { ChartOptions, Series } from "./svg.js";
export { render } from "./render.js";
export type { RenderResult } from "./render.js";
