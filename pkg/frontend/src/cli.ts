#!/usr/bin/env node
/**
 * plots - turn benchmark CSV tables into figures.
 *
 * Either `plots --spec figure.json` (a JSON figure description) or the
 * per-kind flags `--kind --input --output [--log-y/--linear-y ...]`.
 */

import { readFileSync } from "node:fs";
import process from "node:process";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { MissingColumnError } from "./csv.js";
import { FIGURE_KINDS, figureSpecSchema } from "./spec.js";
import { render } from "./render.js";

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .option("spec", { type: "string", describe: "JSON figure spec file" })
    .option("kind", { choices: FIGURE_KINDS, describe: "figure kind" })
    .option("input", { type: "array", string: true, describe: "input CSV(s)" })
    .option("output", { type: "string", describe: "output SVG path" })
    .option("title", { type: "string" })
    .option("x-scale", { choices: ["linear", "log"] as const })
    .option("y-scale", { choices: ["linear", "log"] as const })
    .strict()
    .help()
    .parse();

  let raw: unknown;
  if (args.spec) {
    raw = JSON.parse(readFileSync(args.spec, "utf8"));
  } else {
    raw = {
      kind: args.kind,
      inputs: args.input,
      output: args.output,
      title: args.title,
      x_scale: args["x-scale"],
      y_scale: args["y-scale"],
    };
  }
  const parsed = figureSpecSchema.safeParse(raw);
  if (!parsed.success) {
    console.error(`invalid figure spec: ${parsed.error.message}`);
    return 2;
  }
  try {
    const result = render(parsed.data);
    console.error(`wrote ${result.svgPath} and ${result.dataPath}`);
    return 0;
  } catch (err) {
    if (err instanceof MissingColumnError) {
      console.error(err.message);
      return 2;
    }
    console.error(String(err));
    return 1;
  }
}

const invokedDirectly = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
