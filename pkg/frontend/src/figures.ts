/**
 * The five figure kinds rendered from `fairauction` artifacts.
 *
 * Every plotted mark carries `data-*` attributes holding the exact strings
 * from the source artifact (no rounding, no smoothing), so a consumer can
 * verify that the figure and the data agree byte-for-byte.
 */

import {
  ArtifactError,
  MatchEntry,
  ProfileRow,
  TheoryRow,
  WelfareRow,
  loadMatchJson,
  loadProfileCsv,
  loadTheoryCsv,
  loadWelfareCsv,
  seriesLabel,
} from "./csv";
import * as svg from "./svg";

export type FigureKind = "profile" | "unfair_fraction" | "welfare_by_k" | "theory_curves" | "param_match";

export const FIGURE_KINDS: FigureKind[] = [
  "profile",
  "unfair_fraction",
  "welfare_by_k",
  "theory_curves",
  "param_match",
];

export interface FigureSpec {
  kind: FigureKind;
  input: string;
  /** Second input for param_match: the match JSON path. */
  match?: string;
  output?: string;
}

function groupBy<T>(rows: T[], key: (row: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = out.get(k);
    if (bucket) bucket.push(row);
    else out.set(k, [row]);
  }
  return out;
}

const plotRange = {
  x: [svg.MARGIN.left, svg.WIDTH - svg.MARGIN.right] as [number, number],
  y: [svg.HEIGHT - svg.MARGIN.bottom, svg.MARGIN.top] as [number, number],
};

// ---------------------------------------------------------------------------
// profile: p90 allocation difference per similarity bucket, one line per rule
// ---------------------------------------------------------------------------

export function renderProfile(rows: ProfileRow[]): string {
  const series = groupBy(rows, (r) => seriesLabel(r.algorithm, r.ell));
  const lo = Math.min(...rows.map((r) => parseFloat(r.bucketLo)));
  const hi = Math.max(...rows.map((r) => parseFloat(r.bucketHi)));
  const x = svg.linearScale([lo, hi], plotRange.x);
  const y = svg.linearScale([0, 1], plotRange.y);

  const parts: string[] = [svg.axes(x, y, "bid similarity bucket", "90th pct allocation difference", "Bid-stability profile")];
  let idx = 0;
  for (const [label, group] of series) {
    const color = svg.PALETTE[idx % svg.PALETTE.length];
    const pts = group.map((r) => {
      const mid = (parseFloat(r.bucketLo) + parseFloat(r.bucketHi)) / 2;
      return { px: x(mid), py: y(parseFloat(r.p90AllocDiff)), row: r };
    });
    const path = pts.map((p) => `${svg.fmtCoord(p.px)},${svg.fmtCoord(p.py)}`).join(" ");
    parts.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    for (const p of pts) {
      parts.push(
        `<circle cx="${svg.fmtCoord(p.px)}" cy="${svg.fmtCoord(p.py)}" r="3.2" fill="${color}" ` +
          `data-series="${svg.esc(label)}" data-bucket-lo="${svg.esc(p.row.bucketLo)}" ` +
          `data-bucket-hi="${svg.esc(p.row.bucketHi)}" data-y="${svg.esc(p.row.p90AllocDiff)}"/>`,
      );
    }
    idx += 1;
  }
  parts.push(svg.legend([...series.keys()]));
  return svg.document(parts.join("\n"));
}

// ---------------------------------------------------------------------------
// unfair_fraction: fraction of pairs with a complete allocation flip, bars
// ---------------------------------------------------------------------------

export function renderUnfairFraction(rows: ProfileRow[]): string {
  const series = groupBy(rows, (r) => seriesLabel(r.algorithm, r.ell));
  const nBuckets = Math.max(...[...series.values()].map((g) => g.length));
  const x = svg.linearScale([0, nBuckets], plotRange.x);
  const y = svg.linearScale([0, 1], plotRange.y);
  const baseline = plotRange.y[0];

  const parts: string[] = [
    svg.axes(
      svg.linearScale([Math.min(...rows.map((r) => parseFloat(r.bucketLo))), Math.max(...rows.map((r) => parseFloat(r.bucketHi)))], plotRange.x),
      y,
      "bid similarity bucket",
      "fraction of pairs with difference 1",
      "Complete allocation flips per bucket",
    ),
  ];
  const nSeries = series.size;
  let sIdx = 0;
  for (const [label, group] of series) {
    const color = svg.PALETTE[sIdx % svg.PALETTE.length];
    group.forEach((r, b) => {
      const cell = x(b + 1) - x(b);
      const barWidth = (cell * 0.8) / nSeries;
      const px = x(b) + cell * 0.1 + sIdx * barWidth;
      const py = y(parseFloat(r.fracDiffOne));
      parts.push(
        `<rect x="${svg.fmtCoord(px)}" y="${svg.fmtCoord(py)}" width="${svg.fmtCoord(barWidth)}" ` +
          `height="${svg.fmtCoord(baseline - py)}" fill="${color}" ` +
          `data-series="${svg.esc(label)}" data-bucket-lo="${svg.esc(r.bucketLo)}" ` +
          `data-bucket-hi="${svg.esc(r.bucketHi)}" data-y="${svg.esc(r.fracDiffOne)}"/>`,
      );
    });
    sIdx += 1;
  }
  parts.push(svg.legend([...series.keys()]));
  return svg.document(parts.join("\n"));
}

// ---------------------------------------------------------------------------
// welfare_by_k: welfare ratio per bidder-count slice, plus the overall level
// ---------------------------------------------------------------------------

export function renderWelfareByK(rows: WelfareRow[]): string {
  const sliced = rows.filter((r) => r.kSlice !== "all");
  if (sliced.length === 0) {
    throw new ArtifactError("welfare CSV has no per-k slices to plot");
  }
  const ks = sliced.map((r) => parseInt(r.kSlice, 10));
  const x = svg.linearScale([Math.min(...ks), Math.max(...ks)], plotRange.x);
  const y = svg.linearScale([0, 1], plotRange.y);

  const parts: string[] = [svg.axes(x, y, "distinct bidders per auction", "welfare ratio", "Welfare by auction size")];
  const series = groupBy(sliced, (r) => seriesLabel(r.algorithm, r.ell));
  const overall = groupBy(rows.filter((r) => r.kSlice === "all"), (r) => seriesLabel(r.algorithm, r.ell));
  let idx = 0;
  for (const [label, group] of series) {
    const color = svg.PALETTE[idx % svg.PALETTE.length];
    const pts = group
      .map((r) => ({ k: parseInt(r.kSlice, 10), row: r }))
      .sort((a, b) => a.k - b.k);
    const path = pts.map((p) => `${svg.fmtCoord(x(p.k))},${svg.fmtCoord(y(parseFloat(p.row.ratio)))}`).join(" ");
    parts.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    for (const p of pts) {
      parts.push(
        `<circle cx="${svg.fmtCoord(x(p.k))}" cy="${svg.fmtCoord(y(parseFloat(p.row.ratio)))}" r="3.2" fill="${color}" ` +
          `data-series="${svg.esc(label)}" data-k="${svg.esc(p.row.kSlice)}" data-y="${svg.esc(p.row.ratio)}"/>`,
      );
    }
    const all = overall.get(label);
    if (all && all.length > 0) {
      const py = y(parseFloat(all[0].ratio));
      parts.push(
        `<line x1="${plotRange.x[0]}" y1="${svg.fmtCoord(py)}" x2="${plotRange.x[1]}" y2="${svg.fmtCoord(py)}" ` +
          `stroke="${color}" stroke-dasharray="6 4" stroke-width="1" ` +
          `data-series="${svg.esc(label)}" data-k="all" data-y="${svg.esc(all[0].ratio)}"/>`,
      );
    }
    idx += 1;
  }
  parts.push(svg.legend([...series.keys()]));
  return svg.document(parts.join("\n"));
}

// ---------------------------------------------------------------------------
// theory_curves: stability constraints per exponent and the welfare floor
// ---------------------------------------------------------------------------

export function renderTheoryCurves(rows: TheoryRow[]): string {
  const stability = rows.filter((r) => r.curve === "stability_bound");
  const welfare = rows.filter((r) => r.curve === "welfare_ratio_bound");
  if (stability.length === 0 && welfare.length === 0) {
    throw new ArtifactError("theory CSV has neither stability_bound nor welfare_ratio_bound rows");
  }
  const parts: string[] = [];
  const labels: string[] = [];
  let idx = 0;

  if (stability.length > 0) {
    const xs = stability.map((r) => parseFloat(r.x));
    const x = svg.linearScale([Math.min(...xs), Math.max(...xs)], plotRange.x);
    const y = svg.linearScale([0, 1], plotRange.y);
    parts.push(svg.axes(x, y, "similarity ratio / exponent", "bound value", "Stability constraints and welfare floor"));
    for (const [ell, group] of groupBy(stability, (r) => r.ell)) {
      const color = svg.PALETTE[idx % svg.PALETTE.length];
      const label = `stability bound (${ell})`;
      labels.push(label);
      const path = group
        .map((r) => `${svg.fmtCoord(x(parseFloat(r.x)))},${svg.fmtCoord(y(parseFloat(r.y)))}`)
        .join(" ");
      parts.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
      for (const r of group) {
        parts.push(
          `<circle cx="${svg.fmtCoord(x(parseFloat(r.x)))}" cy="${svg.fmtCoord(y(parseFloat(r.y)))}" r="2.2" fill="${color}" ` +
            `data-series="${svg.esc(label)}" data-x="${svg.esc(r.x)}" data-y="${svg.esc(r.y)}"/>`,
        );
      }
      idx += 1;
    }
  }

  if (welfare.length > 0) {
    const xs = welfare.map((r) => parseFloat(r.x));
    const x = svg.linearScale([Math.min(...xs), Math.max(...xs)], plotRange.x);
    const y = svg.linearScale([0, 1], plotRange.y);
    if (stability.length === 0) {
      parts.push(svg.axes(x, y, "deduction exponent", "worst-case welfare ratio", "Welfare floor"));
    }
    const color = svg.PALETTE[idx % svg.PALETTE.length];
    const label = "welfare ratio floor";
    labels.push(label);
    const sorted = [...welfare].sort((a, b) => parseFloat(a.x) - parseFloat(b.x));
    const path = sorted
      .map((r) => `${svg.fmtCoord(x(parseFloat(r.x)))},${svg.fmtCoord(y(parseFloat(r.y)))}`)
      .join(" ");
    parts.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.8" stroke-dasharray="2 3"/>`);
    for (const r of sorted) {
      parts.push(
        `<circle cx="${svg.fmtCoord(x(parseFloat(r.x)))}" cy="${svg.fmtCoord(y(parseFloat(r.y)))}" r="2.2" fill="${color}" ` +
          `data-series="${svg.esc(label)}" data-x="${svg.esc(r.x)}" data-y="${svg.esc(r.y)}"/>`,
      );
    }
  }

  parts.push(svg.legend(labels));
  return svg.document(parts.join("\n"));
}

// ---------------------------------------------------------------------------
// param_match: matched parameter pairs and their profile-ratio spread
// ---------------------------------------------------------------------------

export function renderParamMatch(entries: MatchEntry[]): string {
  const sorted = [...entries].sort((a, b) => a.ell - b.ell);
  const maxSpread = Math.max(...sorted.map((e) => e.spread), 1e-12);
  const x = svg.linearScale([0, sorted.length], plotRange.x);
  const y = svg.linearScale([0, maxSpread * 1.15], plotRange.y);
  const baseline = plotRange.y[0];

  const parts: string[] = [svg.axes(x, y, "matched parameter pair", "profile ratio spread", "Parameter matching")];
  sorted.forEach((e, i) => {
    const color = svg.PALETTE[i % svg.PALETTE.length];
    const cell = x(i + 1) - x(i);
    const px = x(i) + cell * 0.2;
    const py = y(e.spread);
    parts.push(
      `<rect x="${svg.fmtCoord(px)}" y="${svg.fmtCoord(py)}" width="${svg.fmtCoord(cell * 0.6)}" ` +
        `height="${svg.fmtCoord(baseline - py)}" fill="${color}" ` +
        `data-ell="${e.ell}" data-best-ell-prime="${e.best_ell_prime}" data-y="${e.spread}"/>`,
    );
    parts.push(
      `<text x="${svg.fmtCoord(px + cell * 0.3)}" y="${svg.fmtCoord(baseline + 16)}" text-anchor="middle" font-size="11">` +
        `${e.ell} -&gt; ${e.best_ell_prime}</text>`,
    );
  });
  return svg.document(parts.join("\n"));
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

export function renderFigure(spec: FigureSpec): string {
  switch (spec.kind) {
    case "profile":
      return renderProfile(loadProfileCsv(spec.input));
    case "unfair_fraction":
      return renderUnfairFraction(loadProfileCsv(spec.input));
    case "welfare_by_k":
      return renderWelfareByK(loadWelfareCsv(spec.input));
    case "theory_curves":
      return renderTheoryCurves(loadTheoryCsv(spec.input));
    case "param_match":
      return renderParamMatch(loadMatchJson(spec.match ?? spec.input));
    default:
      throw new ArtifactError(`unknown figure kind: ${(spec as { kind: string }).kind}`);
  }
}
