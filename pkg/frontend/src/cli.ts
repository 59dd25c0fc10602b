#!/usr/bin/env node
/** figkit <kind> --in <csv...> --out <img.svg> [--title <text>]
 *
 * Renders an experiment CSV (schema version 1) into a deterministic SVG plus
 * a sidecar caption file (<out>.caption.txt). Exit codes: 0 ok, 1 bad
 * input/schema, 2 I/O failure.
 */

import { readFileSync, writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import {
  Figure,
  renderBoxplot,
  renderDensitySweep,
  renderSizeSweep,
  renderTimingTable,
} from "./figures.js";
import { FIGURE_KINDS, FigureKind, Row, SchemaError, parseCsv } from "./schema.js";

const RENDERERS: Record<FigureKind, (rows: Row[], title: string) => Figure> = {
  boxplot: renderBoxplot,
  density_sweep: renderDensitySweep,
  size_sweep: renderSizeSweep,
  timing_table: renderTimingTable,
};

const DEFAULT_TITLES: Record<FigureKind, string> = {
  boxplot: "Achieved sum-rates",
  density_sweep: "Generalization over density",
  size_sweep: "Generalization over network size",
  timing_table: "Inference time",
};

export function run(argv: string[]): number {
  const args = yargs(argv)
    .command("$0 <kind>", "render a figure from experiment CSVs", (y) =>
      y.positional("kind", { choices: FIGURE_KINDS, demandOption: true }),
    )
    .option("in", { type: "string", array: true, demandOption: true, describe: "input CSV path(s)" })
    .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
    .option("title", { type: "string", describe: "figure title" })
    .strict()
    .exitProcess(false)
    .fail((msg) => {
      throw new SchemaError(msg);
    })
    .parseSync();

  const kind = args.kind as FigureKind;
  if (!args.out.endsWith(".svg")) {
    throw new SchemaError(`output must be an .svg path, got ${args.out}`);
  }

  const rows: Row[] = [];
  for (const path of args.in as string[]) {
    let text: string;
    try {
      text = readFileSync(path, "utf8");
    } catch (err) {
      console.error(`error: cannot read ${path}: ${(err as Error).message}`);
      return 2;
    }
    rows.push(...parseCsv(text, kind, path));
  }

  const figure = RENDERERS[kind](rows, args.title ?? DEFAULT_TITLES[kind]);
  try {
    writeFileSync(args.out, figure.svg);
    writeFileSync(`${args.out}.caption.txt`, figure.caption + "\n");
  } catch (err) {
    console.error(`error: cannot write ${args.out}: ${(err as Error).message}`);
    return 2;
  }
  console.log(`wrote ${args.out}`);
  return 0;
}

export function main(): number {
  try {
    return run(hideBin(process.argv));
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && /cli\.(js|ts)$/.test(process.argv[1])) {
  process.exit(main());
}
