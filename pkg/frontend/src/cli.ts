#!/usr/bin/env node
/** Usage: latmet-figures <report.json> <outdir> */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { renderAll } from "./figures.js";
import { parseReport } from "./schema.js";

export function main(argv: string[]): number {
  const [reportPath, outDir] = argv;
  if (!reportPath || !outDir) {
    console.error("usage: latmet-figures <report.json> <outdir>");
    return 2;
  }
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(reportPath, "utf8"));
  } catch (e) {
    console.error(`cannot read ${reportPath}: ${(e as Error).message}`);
    return 2;
  }
  let report;
  try {
    report = parseReport(raw);
  } catch (e) {
    console.error((e as Error).message);
    return 1;
  }
  const { figures, skipped } = renderAll(report);
  mkdirSync(outDir, { recursive: true });
  for (const f of figures) {
    const path = join(outDir, `${f.id}.svg`);
    writeFileSync(path, f.svg);
    console.log(`wrote ${path}`);
  }
  for (const name of skipped) {
    console.log(`skipped ${name}: section missing from the report`);
  }
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
