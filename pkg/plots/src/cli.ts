#!/usr/bin/env node
/** One-shot file-to-file figure renderer.
 *
 * Usage: plot <figure-kind> --in <csv>[,<csv>] --out <image.svg>
 */

import { writeFileSync } from "fs";
import { MissingColumnError } from "./csv";
import { FIGURE_KINDS, FigureKind, render } from "./figures";

export interface Args {
  kind: FigureKind;
  inputs: string[];
  out: string;
}

export function parseArgs(argv: string[]): Args {
  const [kind, ...rest] = argv;
  if (!kind || !FIGURE_KINDS.includes(kind as FigureKind)) {
    throw new Error(`figure kind must be one of: ${FIGURE_KINDS.join(", ")}`);
  }
  const inputs: string[] = [];
  let out = "";
  for (let i = 0; i < rest.length; i++) {
    if (rest[i] === "--in") {
      inputs.push(...rest[++i].split(",").filter((s) => s.length > 0));
    } else if (rest[i] === "--out") {
      out = rest[++i];
    } else {
      throw new Error(`unknown argument ${rest[i]}`);
    }
  }
  if (inputs.length === 0 || !out) {
    throw new Error("both --in and --out are required");
  }
  return { kind: kind as FigureKind, inputs, out };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    return 2;
  }
  try {
    writeFileSync(args.out, render(args.kind, args.inputs), "utf8");
  } catch (error) {
    if (error instanceof MissingColumnError) {
      console.error(`error: ${error.message}`);
      return 3;
    }
    console.error(`error: ${(error as Error).message}`);
    return 1;
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
