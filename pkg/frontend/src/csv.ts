/**
 * Reader for the benchmark CSV tables.
 *
 * The producing harness writes a plain header row, comma-separated numeric
 * rows (no quoting), and a trailing `#`-prefixed comment block recording the
 * command, configuration hash and code version. Empty cells mark padded
 * columns of unequal length.
 */

import { readFileSync } from "node:fs";

export interface CsvTable {
  header: string[];
  /** Raw cell strings, row-major; empty string marks a padded cell. */
  rows: string[][];
  /** Trailing comment lines without the leading `# `. */
  comments: string[];
}

export class MissingColumnError extends Error {
  constructor(wanted: string, available: string[]) {
    super(
      `column '${wanted}' not found; available columns: ${available.join(", ")}`,
    );
    this.name = "MissingColumnError";
  }
}

export function parseCsv(text: string): CsvTable {
  const header: string[] = [];
  const rows: string[][] = [];
  const comments: string[] = [];
  for (const rawLine of text.split(/\r?\n/)) {
    const line = rawLine.trimEnd();
    if (line.length === 0) continue;
    if (line.startsWith("#")) {
      comments.push(line.replace(/^#\s?/, ""));
      continue;
    }
    const cells = line.split(",");
    if (header.length === 0) {
      header.push(...cells.map((c) => c.trim()));
    } else {
      rows.push(cells);
    }
  }
  if (header.length === 0) {
    throw new Error("CSV has no header row");
  }
  return { header, rows, comments };
}

export function readCsv(path: string): CsvTable {
  return parseCsv(readFileSync(path, "utf8"));
}

/**
 * Numeric column by name; padded (empty) cells are skipped so series of
 * different lengths coexist in one table.
 */
export function column(table: CsvTable, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new MissingColumnError(name, table.header);
  }
  const values: number[] = [];
  for (const row of table.rows) {
    const cell = (row[idx] ?? "").trim();
    if (cell === "") continue;
    const value = Number(cell);
    if (!Number.isFinite(value)) {
      throw new Error(`non-numeric cell '${cell}' in column '${name}'`);
    }
    values.push(value);
  }
  return values;
}

/** Pair a column against x, dropping rows where either cell is padded. */
export function pairedColumns(
  table: CsvTable,
  xName: string,
  yName: string,
): { x: number[]; y: number[] } {
  const xi = table.header.indexOf(xName);
  if (xi < 0) throw new MissingColumnError(xName, table.header);
  const yi = table.header.indexOf(yName);
  if (yi < 0) throw new MissingColumnError(yName, table.header);
  const x: number[] = [];
  const y: number[] = [];
  for (const row of table.rows) {
    const xc = (row[xi] ?? "").trim();
    const yc = (row[yi] ?? "").trim();
    if (xc === "" || yc === "") continue;
    x.push(Number(xc));
    y.push(Number(yc));
  }
  return { x, y };
}
