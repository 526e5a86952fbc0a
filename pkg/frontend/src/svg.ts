/** Minimal deterministic SVG assembly: scales, axes, series primitives. */

export const WIDTH = 760;
export const HEIGHT = 440;
export const MARGIN = { top: 40, right: 160, bottom: 52, left: 64 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export interface Scale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  return fn;
}

export function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function fmtCoord(v: number): string {
  return Number.isFinite(v) ? v.toFixed(2) : "0";
}

export function ticks(domain: [number, number], count: number): number[] {
  const [lo, hi] = domain;
  if (!(hi > lo)) return [lo];
  const out: number[] = [];
  for (let i = 0; i <= count; i++) out.push(lo + ((hi - lo) * i) / count);
  return out;
}

export function axes(x: Scale, y: Scale, xLabel: string, yLabel: string, title: string): string {
  const left = MARGIN.left;
  const right = WIDTH - MARGIN.right;
  const top = MARGIN.top;
  const bottom = HEIGHT - MARGIN.bottom;
  const parts: string[] = [];
  parts.push(`<text x="${(left + right) / 2}" y="20" text-anchor="middle" font-size="15" font-weight="bold">${esc(title)}</text>`);
  parts.push(`<line x1="${left}" y1="${bottom}" x2="${right}" y2="${bottom}" stroke="#333"/>`);
  parts.push(`<line x1="${left}" y1="${top}" x2="${left}" y2="${bottom}" stroke="#333"/>`);
  for (const t of ticks(x.domain, 5)) {
    const px = x(t);
    parts.push(`<line x1="${fmtCoord(px)}" y1="${bottom}" x2="${fmtCoord(px)}" y2="${bottom + 5}" stroke="#333"/>`);
    parts.push(`<text x="${fmtCoord(px)}" y="${bottom + 20}" text-anchor="middle" font-size="11">${formatTick(t)}</text>`);
  }
  for (const t of ticks(y.domain, 5)) {
    const py = y(t);
    parts.push(`<line x1="${left - 5}" y1="${fmtCoord(py)}" x2="${left}" y2="${fmtCoord(py)}" stroke="#333"/>`);
    parts.push(`<text x="${left - 9}" y="${fmtCoord(py + 4)}" text-anchor="end" font-size="11">${formatTick(t)}</text>`);
    parts.push(`<line x1="${left}" y1="${fmtCoord(py)}" x2="${right}" y2="${fmtCoord(py)}" stroke="#eee"/>`);
  }
  parts.push(`<text x="${(left + right) / 2}" y="${HEIGHT - 14}" text-anchor="middle" font-size="12">${esc(xLabel)}</text>`);
  parts.push(`<text x="18" y="${(top + bottom) / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 18 ${(top + bottom) / 2})">${esc(yLabel)}</text>`);
  return parts.join("\n");
}

function formatTick(t: number): string {
  const rounded = Math.round(t * 1000) / 1000;
  return String(rounded);
}

export function legend(labels: string[]): string {
  const x = WIDTH - MARGIN.right + 12;
  return labels
    .map((label, i) => {
      const y = MARGIN.top + 10 + i * 20;
      return (
        `<rect x="${x}" y="${y - 9}" width="12" height="12" fill="${PALETTE[i % PALETTE.length]}"/>` +
        `<text x="${x + 18}" y="${y + 2}" font-size="12">${esc(label)}</text>`
      );
    })
    .join("\n");
}

export function document(body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}
