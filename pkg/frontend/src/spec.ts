/** Figure description: which CSV, which kind of picture, where to write it. */

import { z } from "zod";

export const FIGURE_KINDS = [
  "decay",
  "estimator-trace",
  "timing",
  "timing-ratio",
  "svd",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

const scale = z.enum(["linear", "log"]);

export const figureSpecSchema = z.object({
  kind: z.enum(FIGURE_KINDS),
  inputs: z.array(z.string()).min(1),
  output: z.string(),
  x_scale: scale.optional(),
  y_scale: scale.optional(),
  title: z.string().optional(),
});

export type FigureSpec = z.infer<typeof figureSpecSchema>;

/** Decay-like kinds default to a logarithmic ordinate. */
export function resolvedScales(spec: FigureSpec): {
  x: "linear" | "log";
  y: "linear" | "log";
} {
  const logY = spec.kind === "decay" || spec.kind === "svd" ||
    spec.kind === "estimator-trace" || spec.kind === "timing";
  return {
    x: spec.x_scale ?? "linear",
    y: spec.y_scale ?? (logY ? "log" : "linear"),
  };
}
