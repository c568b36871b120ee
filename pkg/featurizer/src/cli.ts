#!/usr/bin/env node
// featurize --in mols.csv --scheme rdkit2d --out mols.rdkit2d.csv [--pair]

import { runFeaturizeJob } from "./featurize.js";
import { Scheme, SCHEMES } from "./schemes.js";

function usage(): never {
  console.error(
    `usage: featurize --in <mols.csv> --scheme <${SCHEMES.join("|")}> `
    + "--out <table.csv> [--pair]");
  process.exit(2);
}

export function main(argv: string[]): number {
  const args = new Map<string, string>();
  let pair = false;
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i]!;
    if (a === "--pair") { pair = true; continue; }
    if (!a.startsWith("--") || i + 1 >= argv.length) usage();
    args.set(a.slice(2), argv[++i]!);
  }
  const input = args.get("in");
  const scheme = args.get("scheme") as Scheme | undefined;
  const output = args.get("out");
  if (!input || !scheme || !output) usage();
  try {
    const manifest = runFeaturizeJob({ input, scheme, output, pairMode: pair });
    console.log(`wrote ${manifest.n_output_rows} rows x ${manifest.width} `
      + `features to ${output} (${manifest.skipped.length} skipped)`);
    return 0;
  } catch (e) {
    console.error(`featurize: ${(e as Error).message}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
