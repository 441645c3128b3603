/** Minimal deterministic SVG plotting: fixed canvas, fixed styling, no RNG. */

export const W = 640;
export const H = 440;
export const MARGIN = { left: 64, right: 20, top: 36, bottom: 52 };

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const f = ((v: number) =>
    r0 + ((v - d0) / (d1 - d0 || 1)) * (r1 - r0)) as Scale;
  f.domain = domain;
  return f;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const inner = linearScale([Math.log10(domain[0]), Math.log10(domain[1])], range);
  const f = ((v: number) => inner(Math.log10(v))) as Scale;
  f.domain = domain;
  return f;
}

const fmt = (v: number) => (Number.isFinite(v) ? v.toFixed(2) : "0.00");

export function ticks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = Math.pow(10, Math.floor(Math.log10(span / n)));
  const err = (span / n) / step0;
  const step = step0 * (err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1);
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export class Svg {
  private parts: string[] = [];

  constructor(public title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${W}" height="${H}" fill="white"/>`,
      `<text x="${W / 2}" y="22" text-anchor="middle" font-size="15">${esc(title)}</text>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "#333", width = 1, dash = "") {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(pts: Array<[number, number]>, stroke = "#1f77b4", width = 1.5) {
    const d = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  circle(x: number, y: number, r = 3, fill = "#1f77b4") {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, opacity = 1) {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}" opacity="${opacity}"/>`,
    );
  }

  polygon(pts: Array<[number, number]>, fill: string, opacity = 1) {
    const d = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polygon points="${d}" fill="${fill}" opacity="${opacity}"/>`);
  }

  text(x: number, y: number, s: string, size = 11, anchor = "middle", fill = "#222") {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-size="${size}" fill="${fill}">${esc(s)}</text>`,
    );
  }

  axes(xs: Scale, ys: Scale, xlabel: string, ylabel: string, xticks?: number[], yticks?: number[]) {
    const x0 = MARGIN.left, x1 = W - MARGIN.right;
    const y0 = H - MARGIN.bottom, y1 = MARGIN.top;
    this.line(x0, y0, x1, y0);
    this.line(x0, y0, x0, y1);
    for (const t of xticks ?? ticks(xs.domain[0], xs.domain[1])) {
      const px = xs(t);
      if (px < x0 - 0.5 || px > x1 + 0.5) continue;
      this.line(px, y0, px, y0 + 4);
      this.text(px, y0 + 16, trimNum(t));
    }
    for (const t of yticks ?? ticks(ys.domain[0], ys.domain[1])) {
      const py = ys(t);
      if (py > y0 + 0.5 || py < y1 - 0.5) continue;
      this.line(x0 - 4, py, x0, py);
      this.text(x0 - 8, py + 3, trimNum(t), 11, "end");
    }
    this.text((x0 + x1) / 2, H - 14, xlabel, 12);
    this.parts.push(
      `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="12" fill="#222" transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(ylabel)}</text>`,
    );
  }

  plotArea(): { xr: [number, number]; yr: [number, number] } {
    return {
      xr: [MARGIN.left, W - MARGIN.right],
      yr: [H - MARGIN.bottom, MARGIN.top],
    };
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function trimNum(v: number): string {
  const s = v.toPrecision(6);
  return String(Number(s));
}
