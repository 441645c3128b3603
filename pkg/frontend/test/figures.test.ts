import { mkdtempSync, readFileSync, readdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { regionDiagram, renderAll } from "../src/figures.js";
import { fractionValue, parseReport } from "../src/schema.js";

const fixturePath = join(__dirname, "fixtures", "report.json");
const fixture = JSON.parse(readFileSync(fixturePath, "utf8"));

describe("schema", () => {
  it("parses the fixture report", () => {
    const r = parseReport(fixture);
    expect(r.configHash).toBeTruthy();
    expect(r.stats!.perBeta.length).toBeGreaterThan(0);
  });

  it("reports the failing field path on bad input", () => {
    const broken = JSON.parse(JSON.stringify(fixture));
    broken.stats.perBeta[0].meanTime = "not-a-number";
    expect(() => parseReport(broken)).toThrowError(/stats\.perBeta\.0\.meanTime/);
  });

  it("parses fraction strings", () => {
    expect(fractionValue("9/10")).toBeCloseTo(0.9, 12);
    expect(fractionValue("2")).toBe(2);
  });
});

describe("figures", () => {
  it("renders all five figures from the fixture", () => {
    const { figures, skipped } = renderAll(parseReport(fixture));
    expect(skipped).toEqual([]);
    expect(figures.map((f) => f.id).sort()).toEqual([
      "arrhenius",
      "entrance-histogram",
      "qq-exponential",
      "region-diagram",
      "srw-convergence",
    ]);
    for (const f of figures) {
      expect(f.svg.startsWith("<svg")).toBe(true);
      expect(f.svg).toContain("</svg>");
    }
  });

  it("is byte-deterministic", () => {
    const a = renderAll(parseReport(fixture)).figures;
    const b = renderAll(parseReport(fixture)).figures;
    expect(a.map((f) => f.svg)).toEqual(b.map((f) => f.svg));
  });

  it("arrhenius includes the Gamma* reference slope from the report", () => {
    const { figures } = renderAll(parseReport(fixture));
    const arr = figures.find((f) => f.id === "arrhenius")!;
    expect(arr.svg).toContain("slope 2.4");
  });

  it("skips sections that are missing, with a note", () => {
    const partial = JSON.parse(JSON.stringify(fixture));
    delete partial.srw;
    delete partial.stats;
    const { figures, skipped } = renderAll(parseReport(partial));
    expect(skipped.sort()).toEqual([
      "arrhenius",
      "entrance-histogram",
      "qq-exponential",
      "srw-convergence",
    ]);
    expect(figures.map((f) => f.id)).toEqual(["region-diagram"]);
  });
});

describe("region diagram geometry", () => {
  it("shaded pentagon satisfies the region inequalities", () => {
    const r = parseReport(fixture);
    const U = fractionValue(r.model.U);
    // vertices used by the renderer
    const pent = [
      [U, 0], [4 * U, 0], [0, 4 * U], [0, U], [U, U],
    ];
    for (const [d1, d2] of pent) {
      expect(d1 + d2).toBeLessThanOrEqual(4 * U + 1e-12);
      expect(d1 < U && d2 < U).toBe(false);
    }
    // interior sample points of the pentagon are in the proper region
    const samples = [
      [1.5 * U, 0.5 * U],
      [0.5 * U, 1.5 * U],
      [1.2 * U, 1.2 * U],
    ];
    for (const [d1, d2] of samples) {
      expect(d1 + d2).toBeLessThan(4 * U);
      expect(d1 < U && d2 < U).toBe(false);
    }
    const fig = regionDiagram(r)!;
    expect(fig.svg).toContain("excluded");
  });
});

describe("cli", () => {
  it("writes five SVG files and exits 0", () => {
    const out = mkdtempSync(join(tmpdir(), "latmet-figs-"));
    const rc = main([fixturePath, out]);
    expect(rc).toBe(0);
    const files = readdirSync(out).sort();
    expect(files).toEqual([
      "arrhenius.svg",
      "entrance-histogram.svg",
      "qq-exponential.svg",
      "region-diagram.svg",
      "srw-convergence.svg",
    ]);
  });

  it("exits non-zero on schema mismatch", () => {
    const out = mkdtempSync(join(tmpdir(), "latmet-figs-"));
    const bad = join(out, "bad.json");
    require("node:fs").writeFileSync(bad, JSON.stringify({ nope: 1 }));
    expect(main([bad, out])).toBe(1);
  });

  it("exits 2 on usage errors", () => {
    expect(main([])).toBe(2);
  });
});
