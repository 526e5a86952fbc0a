/**
 * Figure renderer CLI.
 *
 *   node dist/cli.js --kind profile --input profiles.csv --output profile.svg
 *   node dist/cli.js --kind param_match --input match.json --output match.svg
 *
 * Exits 0 on success, 1 on bad arguments or unreadable/mismatched inputs.
 */

import * as fs from "fs";
import { ArtifactError } from "./csv";
import { FIGURE_KINDS, FigureKind, FigureSpec, renderFigure } from "./figures";

function parseArgs(argv: string[]): FigureSpec {
  const opts: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new ArtifactError(`bad argument ${flag}; flags are --kind --input [--match] --output`);
    }
    opts[flag.slice(2)] = value;
  }
  const kind = opts["kind"] as FigureKind;
  if (!FIGURE_KINDS.includes(kind)) {
    throw new ArtifactError(`--kind must be one of ${FIGURE_KINDS.join(", ")}`);
  }
  if (!opts["input"]) {
    throw new ArtifactError("--input is required");
  }
  if (!opts["output"]) {
    throw new ArtifactError("--output is required");
  }
  return { kind, input: opts["input"], match: opts["match"], output: opts["output"] };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const rendered = renderFigure(spec);
    fs.writeFileSync(spec.output!, rendered, "utf-8");
    return 0;
  } catch (err) {
    if (err instanceof ArtifactError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
