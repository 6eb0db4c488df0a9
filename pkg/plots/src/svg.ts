/** Minimal SVG scene helpers: no DOM, no timestamps, pure string building. */

export type Scale = (value: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  return (value) => r0 + ((value - d0) / span) * (r1 - r0);
}

export function extent(values: number[], pad = 0.05): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    lo = 0;
    hi = 1;
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const margin = (hi - lo) * pad;
  return [lo - margin, hi + margin];
}

const fmt = (v: number) => {
  const rounded = Math.round(v * 1000) / 1000;
  return Math.abs(rounded) < 1e-12 ? "0" : String(rounded);
};

export function polylinePath(xs: number[], ys: number[]): string {
  return xs.map((x, i) => `${i === 0 ? "M" : "L"}${fmt(x)},${fmt(ys[i])}`).join("");
}

export function line(xs: number[], ys: number[], stroke: string, width = 1.5): string {
  return `<path d="${polylinePath(xs, ys)}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`;
}

/** Closed band between lower and upper curves, for +/- one standard deviation. */
export function band(xs: number[], lower: number[], upper: number[], fill: string): string {
  const forward = polylinePath(xs, upper);
  const reverse = [...xs]
    .reverse()
    .map((x, i) => `L${fmt(x)},${fmt(lower[lower.length - 1 - i])}`)
    .join("");
  return `<path d="${forward}${reverse}Z" fill="${fill}" fill-opacity="0.25" stroke="none"/>`;
}

export function circle(x: number, y: number, r: number, fill: string): string {
  return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}" stroke="#333" stroke-width="0.5"/>`;
}

export function triangle(x: number, y: number, size: number, fill: string): string {
  const h = size;
  const points = `${fmt(x)},${fmt(y - h)} ${fmt(x - h)},${fmt(y + h)} ${fmt(x + h)},${fmt(y + h)}`;
  return `<polygon points="${points}" fill="${fill}" stroke="#333" stroke-width="0.5"/>`;
}

export function rect(x: number, y: number, w: number, h: number, fill: string, opacity = 1): string {
  return `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}" fill-opacity="${opacity}"/>`;
}

export function text(x: number, y: number, content: string, size = 10, anchor = "middle"): string {
  return `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" text-anchor="${anchor}" font-family="sans-serif">${escapeXml(content)}</text>`;
}

export function escapeXml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function ticks(lo: number, hi: number, count = 5): number[] {
  const span = hi - lo;
  if (span <= 0) {
    return [lo];
  }
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((c) => span / c <= count + 1) ?? 10 * step;
  const first = Math.ceil(lo / chosen) * chosen;
  const result: number[] = [];
  for (let v = first; v <= hi + 1e-12; v += chosen) {
    result.push(Math.abs(v) < chosen / 1e6 ? 0 : v);
  }
  return result;
}

export interface PanelBox {
  x: number;
  y: number;
  width: number;
  height: number;
}

/** Framed panel with tick marks and labels; returns SVG plus data-space scales. */
export function panel(
  box: PanelBox,
  xDomain: [number, number],
  yDomain: [number, number],
  title: string,
  xLabel: string
): { parts: string[]; sx: Scale; sy: Scale } {
  const sx = linearScale(xDomain[0], xDomain[1], box.x, box.x + box.width);
  const sy = linearScale(yDomain[0], yDomain[1], box.y + box.height, box.y);
  const parts: string[] = [];
  parts.push(
    `<rect x="${box.x}" y="${box.y}" width="${box.width}" height="${box.height}" fill="none" stroke="#444" stroke-width="1"/>`
  );
  parts.push(text(box.x + box.width / 2, box.y - 6, title, 11));
  parts.push(text(box.x + box.width / 2, box.y + box.height + 28, xLabel, 10));
  for (const t of ticks(xDomain[0], xDomain[1], 5)) {
    const px = sx(t);
    parts.push(`<line x1="${px}" y1="${box.y + box.height}" x2="${px}" y2="${box.y + box.height + 4}" stroke="#444"/>`);
    parts.push(text(px, box.y + box.height + 15, trimNumber(t), 8));
  }
  for (const t of ticks(yDomain[0], yDomain[1], 4)) {
    const py = sy(t);
    parts.push(`<line x1="${box.x - 4}" y1="${py}" x2="${box.x}" y2="${py}" stroke="#444"/>`);
    parts.push(text(box.x - 6, py + 3, trimNumber(t), 8, "end"));
  }
  return { parts, sx, sy };
}

function trimNumber(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-3)) {
    return v.toExponential(1);
  }
  return String(Math.round(v * 10000) / 10000);
}

export function document(width: number, height: number, body: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n<rect width="${width}" height="${height}" fill="white"/>\n` +
    body.join("\n") +
    "\n</svg>\n"
  );
}
