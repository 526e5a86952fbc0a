/**
 * Strict loaders for the artifact CSVs written by the `fairauction` CLI.
 *
 * Values are kept as raw strings alongside parsed numbers: the raw string is
 * what gets embedded in the rendered SVG, so plotted values are exactly the
 * artifact values with no reformatting.
 */

import * as fs from "fs";
import Papa from "papaparse";

export class ArtifactError extends Error {}

export interface ProfileRow {
  algorithm: string;
  ell: string;
  bucketLo: string;
  bucketHi: string;
  pairCount: string;
  sampledCount: string;
  p90AllocDiff: string;
  fracDiffOne: string;
}

export interface WelfareRow {
  algorithm: string;
  ell: string;
  kSlice: string;
  totalWelfare: string;
  totalOptimal: string;
  ratio: string;
}

export interface TheoryRow {
  curve: string;
  ell: string;
  x: string;
  y: string;
}

export interface MatchEntry {
  ell: number;
  best_ell_prime: number;
  spread: number;
}

const PROFILE_HEADER = [
  "algorithm",
  "ell",
  "bucket_lo",
  "bucket_hi",
  "pair_count",
  "sampled_count",
  "p90_alloc_diff",
  "frac_diff_one",
];
const WELFARE_HEADER = ["algorithm", "ell", "k_slice", "total_welfare", "total_optimal", "ratio"];
const THEORY_HEADER = ["curve", "ell", "x", "y"];

function readRows(path: string, expectedHeader: string[]): string[][] {
  if (!fs.existsSync(path)) {
    throw new ArtifactError(`input file not found: ${path}`);
  }
  const text = fs.readFileSync(path, "utf-8");
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new ArtifactError(`failed to parse ${path}: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new ArtifactError(`${path} is empty`);
  }
  const header = rows[0];
  if (header.length !== expectedHeader.length || header.some((h, i) => h !== expectedHeader[i])) {
    throw new ArtifactError(
      `${path}: header [${header.join(",")}] does not match expected [${expectedHeader.join(",")}]`,
    );
  }
  const body = rows.slice(1);
  if (body.length === 0) {
    throw new ArtifactError(`${path} has a header but no data rows`);
  }
  for (const row of body) {
    if (row.length !== expectedHeader.length) {
      throw new ArtifactError(`${path}: row has ${row.length} fields, expected ${expectedHeader.length}`);
    }
  }
  return body;
}

export function loadProfileCsv(path: string): ProfileRow[] {
  return readRows(path, PROFILE_HEADER).map((r) => ({
    algorithm: r[0],
    ell: r[1],
    bucketLo: r[2],
    bucketHi: r[3],
    pairCount: r[4],
    sampledCount: r[5],
    p90AllocDiff: r[6],
    fracDiffOne: r[7],
  }));
}

export function loadWelfareCsv(path: string): WelfareRow[] {
  return readRows(path, WELFARE_HEADER).map((r) => ({
    algorithm: r[0],
    ell: r[1],
    kSlice: r[2],
    totalWelfare: r[3],
    totalOptimal: r[4],
    ratio: r[5],
  }));
}

export function loadTheoryCsv(path: string): TheoryRow[] {
  return readRows(path, THEORY_HEADER).map((r) => ({ curve: r[0], ell: r[1], x: r[2], y: r[3] }));
}

export function loadMatchJson(path: string): MatchEntry[] {
  if (!fs.existsSync(path)) {
    throw new ArtifactError(`input file not found: ${path}`);
  }
  let parsed: unknown;
  try {
    parsed = JSON.parse(fs.readFileSync(path, "utf-8"));
  } catch (err) {
    throw new ArtifactError(`failed to parse ${path}: ${err}`);
  }
  if (!Array.isArray(parsed) || parsed.length === 0) {
    throw new ArtifactError(`${path} must hold a nonempty JSON array`);
  }
  return parsed.map((entry, i) => {
    const e = entry as Record<string, unknown>;
    for (const key of ["ell", "best_ell_prime", "spread"]) {
      if (typeof e[key] !== "number") {
        throw new ArtifactError(`${path}: entry ${i} is missing numeric field '${key}'`);
      }
    }
    return { ell: e.ell as number, best_ell_prime: e.best_ell_prime as number, spread: e.spread as number };
  });
}

/** Label of one plotted series: the algorithm plus its parameter, if any. */
export function seriesLabel(algorithm: string, ell: string): string {
  return ell === "" ? algorithm : `${algorithm} (${ell})`;
}
