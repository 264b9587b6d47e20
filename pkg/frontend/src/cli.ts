/** Chart rendering CLI.
 *
 * Usage:
 *   node dist/cli.js entropy    --metrics metrics.csv --out outdir
 *   node dist/cli.js objectives --metrics metrics.csv --out outdir
 *   node dist/cli.js redundancy --metrics metrics.csv --out outdir
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import {
  plotEntropyBySolver,
  plotNormalizedObjectives,
  plotRedundancyScaling,
} from "./charts.js";
import { parseMetricsCsv } from "./schema.js";

const CHARTS: Record<string, { file: string; render: (rows: any) => string }> = {
  entropy: { file: "entropy_by_solver.svg", render: plotEntropyBySolver },
  objectives: {
    file: "normalized_objectives.svg",
    render: plotNormalizedObjectives,
  },
  redundancy: { file: "redundancy_scaling.svg", render: plotRedundancyScaling },
};

function parseArgs(argv: string[]): { command: string; metrics: string; out: string } {
  const [command, ...rest] = argv;
  const options: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith("--") || rest[i + 1] === undefined) {
      throw new Error(`bad argument: ${key}`);
    }
    options[key.slice(2)] = rest[i + 1];
  }
  if (!command || !(command in CHARTS)) {
    throw new Error(
      `usage: cli.js <${Object.keys(CHARTS).join("|")}> --metrics FILE --out DIR`
    );
  }
  return {
    command,
    metrics: options.metrics ?? "metrics.csv",
    out: options.out ?? "out",
  };
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  const rows = parseMetricsCsv(readFileSync(args.metrics, "utf-8"));
  const chart = CHARTS[args.command];
  const svg = chart.render(rows);
  mkdirSync(args.out, { recursive: true });
  const path = join(args.out, chart.file);
  writeFileSync(path, svg);
  console.log(`wrote ${path} (${svg.length} bytes)`);
  return 0;
}

const isMain = process.argv[1]?.endsWith("cli.js");
if (isMain) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(String(err));
    process.exit(1);
  }
}
