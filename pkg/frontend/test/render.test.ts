import { mkdtempSync, readFileSync, statSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { MissingColumnError, parseCsv } from "../src/csv.js";
import { render } from "../src/render.js";

const FIXTURES = join(__dirname, "fixtures");

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "plots-"));
}

function csvColumn(path: string, name: string): number[] {
  const table = parseCsv(readFileSync(path, "utf8"));
  const idx = table.header.indexOf(name);
  const out: number[] = [];
  for (const row of table.rows) {
    const cell = (row[idx] ?? "").trim();
    if (cell !== "") out.push(Number(cell));
  }
  return out;
}

function bitEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => Object.is(v, b[i]));
}

describe("decay figure", () => {
  it("renders a nonempty image with a bit-exact data dump", () => {
    const dir = tmp();
    const input = join(FIXTURES, "compare.csv");
    const out = join(dir, "decay.svg");
    const result = render({ kind: "decay", inputs: [input], output: out });
    expect(statSync(out).size).toBeGreaterThan(0);
    expect(readFileSync(out, "utf8")).toContain("<svg");
    const dump = JSON.parse(readFileSync(result.dataPath, "utf8"));
    const laplace = dump.series.find(
      (s: { label: string }) => s.label === "e_r_laplace",
    );
    expect(bitEqual(laplace.x, csvColumn(input, "n_reduced"))).toBe(true);
    expect(bitEqual(laplace.y, csvColumn(input, "e_r_laplace"))).toBe(true);
    expect(dump.y_scale).toBe("log");
  });

  it("errors decrease along the fixture sweep", () => {
    const input = join(FIXTURES, "compare.csv");
    const errs = csvColumn(input, "e_r_laplace");
    for (let i = 1; i < errs.length; i += 1) {
      expect(errs[i]).toBeLessThanOrEqual(errs[i - 1]);
    }
  });
});

describe("timing-ratio figure", () => {
  it("reproduces the ratio column verbatim as plotted ordinates", () => {
    const dir = tmp();
    const input = join(FIXTURES, "compare.csv");
    const out = join(dir, "ratio.svg");
    const result = render({
      kind: "timing-ratio",
      inputs: [input],
      output: out,
    });
    const dump = JSON.parse(readFileSync(result.dataPath, "utf8"));
    expect(dump.series).toHaveLength(1);
    expect(bitEqual(dump.series[0].y, csvColumn(input, "speedup_ratio")))
      .toBe(true);
    expect(dump.y_scale).toBe("linear");
  });
});

describe("svd figure", () => {
  it("handles padded columns and keeps both spectra bit-exact", () => {
    const dir = tmp();
    const input = join(FIXTURES, "svd_study.csv");
    const out = join(dir, "svd.svg");
    const result = render({ kind: "svd", inputs: [input], output: out });
    const dump = JSON.parse(readFileSync(result.dataPath, "utf8"));
    const time = dump.series.find(
      (s: { label: string }) => s.label === "sigma_time",
    );
    const lap = dump.series.find(
      (s: { label: string }) => s.label === "sigma_laplace",
    );
    expect(bitEqual(time.y, csvColumn(input, "sigma_time"))).toBe(true);
    expect(bitEqual(lap.y, csvColumn(input, "sigma_laplace"))).toBe(true);
  });

  it("duplicate-column fixture has a single value above the epsilon floor", () => {
    const dir = tmp();
    const input = join(FIXTURES, "svd_duplicate.csv");
    const result = render({
      kind: "svd",
      inputs: [input],
      output: join(dir, "dup.svg"),
    });
    const dump = JSON.parse(readFileSync(result.dataPath, "utf8"));
    const sigma = dump.series[0].y as number[];
    const floor = 1e-12 * Math.max(...sigma);
    expect(sigma.filter((v) => v > floor)).toHaveLength(1);
    expect(statSync(result.svgPath).size).toBeGreaterThan(0);
  });
});

describe("estimator trace and timing kinds", () => {
  it("estimator-trace uses the offline log", () => {
    const dir = tmp();
    const input = join(FIXTURES, "offline_log.csv");
    const result = render({
      kind: "estimator-trace",
      inputs: [input],
      output: join(dir, "trace.svg"),
    });
    const dump = JSON.parse(readFileSync(result.dataPath, "utf8"));
    expect(bitEqual(dump.series[0].y, csvColumn(input, "delta_max"))).toBe(true);
  });

  it("timing plots both online columns", () => {
    const dir = tmp();
    const result = render({
      kind: "timing",
      inputs: [join(FIXTURES, "compare.csv")],
      output: join(dir, "timing.svg"),
    });
    expect(result.series.map((s) => s.label)).toEqual([
      "online_laplace_s",
      "online_classical_s",
    ]);
  });
});

describe("failure modes and idempotency", () => {
  it("missing column names the available ones", () => {
    const dir = tmp();
    expect(() =>
      render({
        kind: "decay",
        inputs: [join(FIXTURES, "svd_study.csv")],
        output: join(dir, "x.svg"),
      }),
    ).toThrowError(MissingColumnError);
    try {
      render({
        kind: "decay",
        inputs: [join(FIXTURES, "svd_study.csv")],
        output: join(dir, "x.svg"),
      });
    } catch (err) {
      expect(String(err)).toContain("sigma_time");
      expect(String(err)).toContain("n_reduced");
    }
  });

  it("reruns produce byte-identical data dumps", () => {
    const dir = tmp();
    const spec = {
      kind: "decay" as const,
      inputs: [join(FIXTURES, "compare.csv")],
      output: join(dir, "idem.svg"),
    };
    const first = render(spec);
    const bytes1 = readFileSync(first.dataPath);
    const svg1 = readFileSync(first.svgPath);
    const second = render(spec);
    expect(readFileSync(second.dataPath).equals(bytes1)).toBe(true);
    expect(readFileSync(second.svgPath).equals(svg1)).toBe(true);
  });

  it("legend metadata comes from the CSV comment block", () => {
    const dir = tmp();
    const result = render({
      kind: "decay",
      inputs: [join(FIXTURES, "compare.csv")],
      output: join(dir, "meta.svg"),
    });
    const dump = JSON.parse(readFileSync(result.dataPath, "utf8"));
    expect(dump.metadata[0].some((c: string) => c.includes("config_hash")))
      .toBe(true);
  });
});
