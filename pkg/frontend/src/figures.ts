import { Report, fractionValue } from "./schema.js";
import { Svg, linearScale, logScale } from "./svg.js";

export interface Figure {
  id: string;
  svg: string;
}

/** ln(mean nucleation time) against beta, with the Gamma* reference slope. */
export function arrhenius(report: Report): Figure | null {
  const stats = report.stats;
  const land = report.landscape;
  if (!stats || !land || stats.perBeta.length === 0) return null;
  const gamma = land.gammaStar as unknown as number;
  const pts = stats.perBeta.map((r) => [r.beta, Math.log(r.meanTime)] as [number, number]);
  const s = new Svg("Arrhenius: ln E[tau] vs beta (reference slope Gamma*)");
  const { xr, yr } = s.plotArea();
  const xs0 = Math.min(...pts.map((p) => p[0]));
  const xs1 = Math.max(...pts.map((p) => p[0]));
  const ys0 = Math.min(...pts.map((p) => p[1]));
  const ys1 = Math.max(...pts.map((p) => p[1]));
  const padX = (xs1 - xs0) * 0.1 || 1;
  const padY = (ys1 - ys0) * 0.15 || 1;
  const xsc = linearScale([xs0 - padX, xs1 + padX], xr);
  const ysc = linearScale([ys0 - padY, ys1 + padY], yr);
  s.axes(xsc, ysc, "beta", "ln E[tau]");
  // reference line of slope Gamma* anchored at the last point
  const [bN, lnN] = pts[pts.length - 1];
  const ref = (b: number) => lnN + gamma * (b - bN);
  s.polyline(
    [
      [xsc(xsc.domain[0]), ysc(ref(xsc.domain[0]))],
      [xsc(xsc.domain[1]), ysc(ref(xsc.domain[1]))],
    ],
    "#d62728",
    1,
  );
  s.text(xr[1] - 6, yr[1] + 14, `slope ${gamma}`, 11, "end", "#d62728");
  s.polyline(pts.map(([b, v]) => [xsc(b), ysc(v)]), "#1f77b4", 1.5);
  for (const [b, v] of pts) s.circle(xsc(b), ysc(v), 3.5);
  return { id: "arrhenius", svg: s.render() };
}

/** QQ plot of tau/mean against the unit exponential, largest beta. */
export function qqExponential(report: Report): Figure | null {
  const stats = report.stats;
  if (!stats) return null;
  const rows = stats.perBeta.filter((r) => (r.tauOverMeanSorted ?? []).length >= 10);
  if (rows.length === 0) return null;
  const row = rows[rows.length - 1];
  const ys = row.tauOverMeanSorted!;
  const n = ys.length;
  const xsv = ys.map((_, i) => -Math.log(1 - (i + 0.5) / n));
  const s = new Svg(`Exponentiality QQ: tau/mean vs Exp(1), beta=${row.beta}`);
  const { xr, yr } = s.plotArea();
  const hi = Math.max(xsv[n - 1], ys[n - 1]) * 1.05;
  const xsc = linearScale([0, hi], xr);
  const ysc = linearScale([0, hi], yr);
  s.axes(xsc, ysc, "Exp(1) quantiles", "tau / mean");
  s.line(xsc(0), ysc(0), xsc(hi), ysc(hi), "#d62728", 1, "4 3");
  for (let i = 0; i < n; i++) s.circle(xsc(xsv[i]), ysc(ys[i]), 2.2);
  s.text(xr[0] + 8, yr[1] + 14, `N=${row.runCount}, KS p=${row.ksPvalue.toFixed(3)}`, 11, "start");
  return { id: "qq-exponential", svg: s.render() };
}

/** Gate-entrance counts per cell against the uniform reference. */
export function entranceHistogram(report: Report): Figure | null {
  const stats = report.stats;
  if (!stats) return null;
  const rows = stats.perBeta.filter(
    (r) => Object.keys(r.entranceHistogram).length > 0,
  );
  if (rows.length === 0) return null;
  const row = rows[rows.length - 1];
  const cells = Object.keys(row.entranceHistogram).sort((a, b) => Number(a) - Number(b));
  const counts = cells.map((c) => row.entranceHistogram[c]);
  const total = counts.reduce((a, b) => a + b, 0);
  if (total === 0) return null;
  const s = new Svg(`Gate entrance histogram, beta=${row.beta} (${cells.length} cells)`);
  const { xr, yr } = s.plotArea();
  const xsc = linearScale([0, cells.length], xr);
  const ymax = Math.max(...counts) * 1.15;
  const ysc = linearScale([0, ymax], yr);
  s.axes(xsc, ysc, "gate cell (by configuration code)", "entrance count", [], undefined);
  const bw = (xr[1] - xr[0]) / cells.length;
  counts.forEach((c, i) => {
    s.rect(xsc(i), ysc(c), Math.max(bw - 0.5, 0.4), ysc(0) - ysc(c), "#1f77b4", 0.85);
  });
  const uniform = total / cells.length;
  s.line(xsc(0), ysc(uniform), xsc(cells.length), ysc(uniform), "#d62728", 1.5, "6 3");
  const p = row.chiSquarePvalue;
  s.text(xr[1] - 6, yr[1] + 14,
    `uniform=${uniform.toFixed(1)}; chi2 p=${p === null ? "n/a" : p.toFixed(3)}`,
    11, "end", "#d62728");
  return { id: "entrance-histogram", svg: s.render() };
}

/** SRW escape ratio and normalized prefactor ratios against M. */
export function srwConvergence(report: Report): Figure | null {
  const srw = report.srw;
  if (!srw || srw.rows.length === 0) return null;
  const rows = [...srw.rows].sort((a, b) => a.M - b.M);
  const s = new Svg("SRW convergence: escape ratio and K normalization vs M");
  const { xr, yr } = s.plotArea();
  const xsc = logScale([rows[0].M / 1.3, rows[rows.length - 1].M * 1.3], xr);
  const series: Array<[string, string, number[]]> = [
    ["escape ratio", "#1f77b4", rows.map((r) => r.escapeRatio)],
    ["K ratio (Theta2)", "#2ca02c", rows.map((r) => r.kasympRatio2)],
    ["K ratio (Theta1)", "#9467bd", rows.map((r) => r.kasympRatio1)],
  ];
  const all = series.flatMap(([, , v]) => v).concat([1]);
  const ysc = linearScale([Math.min(...all) * 0.9, Math.max(...all) * 1.1], yr);
  s.axes(xsc, ysc, "M (log scale)", "ratio", rows.map((r) => r.M));
  s.line(xsc(xsc.domain[0]), ysc(1), xsc(xsc.domain[1]), ysc(1), "#d62728", 1, "4 3");
  let ly = yr[1] + 14;
  for (const [label, color, vals] of series) {
    s.polyline(rows.map((r, i) => [xsc(r.M), ysc(vals[i])]), color, 1.5);
    rows.forEach((r, i) => s.circle(xsc(r.M), ysc(vals[i]), 3, color));
    s.text(xr[1] - 6, ly, label, 11, "end", color);
    ly += 14;
  }
  return { id: "srw-convergence", svg: s.render() };
}

/** The metastable region in the (delta1, delta2) plane. */
export function regionDiagram(report: Report): Figure | null {
  const U = fractionValue(report.model.U);
  const d1 = fractionValue(report.model.delta1);
  const d2 = fractionValue(report.model.delta2);
  const lim = 4 * U * 1.1;
  const s = new Svg("Proper metastable region: d1+d2 < 4U minus both below U");
  const { xr, yr } = s.plotArea();
  const xsc = linearScale([0, lim], xr);
  const ysc = linearScale([0, lim], yr);
  s.axes(xsc, ysc, "delta1 (in units of U=" + U + ")", "delta2");
  // region: d1+d2 < 4U, minus the square d1,d2 < U; the proper region is the
  // pentagon (U,0)-(4U,0)-(0,4U)-(0,U)-(U,U)
  const pent: Array<[number, number]> = [
    [U, 0], [4 * U, 0], [0, 4 * U], [0, U], [U, U],
  ];
  s.polygon(pent.map(([x, y]) => [xsc(x), ysc(y)]), "#1f77b4", 0.25);
  // excluded corner
  s.polygon(
    [[0, 0], [U, 0], [U, U], [0, U]].map(([x, y]) => [xsc(x), ysc(y)]),
    "#999999", 0.35,
  );
  s.line(xsc(4 * U), ysc(0), xsc(0), ysc(4 * U), "#1f77b4", 1.5);
  s.line(xsc(0), ysc(0), xsc(lim / Math.SQRT2 / 1.0), ysc(lim / Math.SQRT2 / 1.0), "#888", 1, "2 3");
  s.text(xsc(lim * 0.62), ysc(lim * 0.66), "d1 = d2", 10, "middle", "#888");
  s.text(xsc(U / 2), ysc(U / 2), "excluded", 10);
  s.circle(xsc(d1), ysc(d2), 5, "#d62728");
  s.text(xsc(d1) + 8, ysc(d2) - 6, `(${d1}, ${d2})`, 11, "start", "#d62728");
  return { id: "region-diagram", svg: s.render() };
}

export const RENDERERS = [
  arrhenius,
  qqExponential,
  entranceHistogram,
  srwConvergence,
  regionDiagram,
];

export function renderAll(report: Report): { figures: Figure[]; skipped: string[] } {
  const figures: Figure[] = [];
  const skipped: string[] = [];
  const names = ["arrhenius", "qq-exponential", "entrance-histogram",
    "srw-convergence", "region-diagram"];
  RENDERERS.forEach((fn, i) => {
    const out = fn(report);
    if (out === null) skipped.push(names[i]);
    else figures.push(out);
  });
  return { figures, skipped };
}
