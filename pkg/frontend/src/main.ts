/**
 * CLI: render simulator result CSVs into SVG charts.
 *
 * Usage:
 *   report-plots --csv results.csv --figure fig5 --out fig5.svg
 *
 * Exit codes: 0 success, 1 bad arguments or schema violation, 2 runtime error.
 */

import { parseArgs } from "node:util";

import { FIGURES } from "./figures.js";
import { renderFile } from "./render.js";
import { SchemaError } from "./schema.js";

const USAGE = `usage: report-plots --csv <results.csv> --figure <id> --out <chart.svg>
figure ids: ${[...FIGURES.keys()].join(", ")}`;

export function main(argv: string[]): number {
  let values: { csv?: string; figure?: string; out?: string; help?: boolean };
  try {
    values = parseArgs({
      args: argv,
      options: {
        csv: { type: "string" },
        figure: { type: "string" },
        out: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    }).values;
  } catch (err) {
    console.error(`argument error: ${(err as Error).message}`);
    console.error(USAGE);
    return 1;
  }
  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  if (!values.csv || !values.figure || !values.out) {
    console.error("argument error: --csv, --figure, and --out are all required");
    console.error(USAGE);
    return 1;
  }
  try {
    const result = renderFile(values.csv, values.figure, values.out);
    console.log(
      `wrote ${result.outPath} (${result.figureId}, ${result.seriesCount} series: ${result.methods.join(", ")})`,
    );
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`file error: ${(err as Error).message}`);
      return 1;
    }
    console.error(`runtime error: ${(err as Error).message}`);
    return 2;
  }
}

const invokedDirectly = process.argv[1] && import.meta.url.endsWith(
  process.argv[1].split("/").pop() ?? "",
);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
