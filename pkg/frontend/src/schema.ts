import { z } from "zod";

/** Exact rationals travel as {exact, value}; plain numbers otherwise. */
export const num = z.union([
  z.number(),
  z.object({ exact: z.string(), value: z.number() }).transform((v) => v.value),
  z.null().transform(() => NaN),
]);

const perBeta = z.object({
  beta: z.number(),
  runCount: z.number(),
  meanTime: z.number(),
  stderr: z.number(),
  ksStatistic: z.number(),
  ksPvalue: z.number(),
  entranceHistogram: z.record(z.string(), z.number()),
  chiSquarePvalue: z.number().nullable(),
  gatePassageFraction: z.number(),
  arrheniusRatio: z.number().nullable(),
  tauOverMeanSorted: z.array(z.number()).optional(),
});

const srwRow = z.object({
  M: z.number(),
  theta1: z.number(),
  theta2: z.number(),
  escapeRatio: z.number(),
  kasympRatio1: z.number(),
  kasympRatio2: z.number(),
});

export const reportSchema = z.object({
  schema: z.string().optional(),
  configHash: z.string(),
  model: z.object({
    U: z.string(),
    delta1: z.string(),
    delta2: z.string(),
  }),
  lattice: z.object({ width: z.number(), height: z.number() }),
  landscape: z
    .object({
      gammaStar: num,
      vStar: num.optional(),
      nStar: z.number().optional(),
    })
    .passthrough()
    .optional(),
  capacity: z
    .object({ theta: z.number(), kValue: z.number() })
    .passthrough()
    .optional(),
  stats: z.object({ perBeta: z.array(perBeta) }).passthrough().optional(),
  srw: z.object({ rows: z.array(srwRow) }).passthrough().optional(),
  missingSections: z.array(z.string()).optional(),
});

export type Report = z.infer<typeof reportSchema>;

/** Parse a fraction string like "9/10" (or "2") to a number. */
export function fractionValue(text: string): number {
  const parts = text.split("/");
  if (parts.length === 1) return Number(parts[0]);
  return Number(parts[0]) / Number(parts[1]);
}

export function parseReport(raw: unknown): Report {
  const out = reportSchema.safeParse(raw);
  if (!out.success) {
    const issue = out.error.issues[0];
    const path = issue.path.join(".") || "(root)";
    throw new Error(`report schema mismatch at ${path}: ${issue.message}`);
  }
  return out.data;
}
