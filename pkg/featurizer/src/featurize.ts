// Featurization driver: parse each SMILES, compute the scheme vector (two
// concatenated vectors in pair mode), skip unparseable rows with a manifest
// entry, and emit the canonical feature table plus a manifest JSON.

import * as fs from "node:fs";

import { InputTable, OutputRow, readInputTable, writeFeatureTable } from "./io.js";
import { featurizeMolecule, EXPECTED_WIDTHS, Scheme, SCHEMES } from "./schemes.js";
import { parseSMILES } from "./smiles.js";

export interface FeaturizeJob {
  input: string;
  scheme: Scheme;
  output: string;
  pairMode: boolean;
}

export interface Manifest {
  scheme: string;
  pair_mode: boolean;
  toolkit: { name: string; version: string };
  width: number;
  expected_width: number;
  width_mismatch_warning: boolean;
  column_names: string[];
  n_input_rows: number;
  n_output_rows: number;
  skipped: { id: string; reason: string }[];
  featurize_seconds: number;
}

export const TOOLKIT = { name: "mol-featurizer", version: "0.1.0" };

export function runFeaturizeJob(job: FeaturizeJob): Manifest {
  if (!SCHEMES.includes(job.scheme)) {
    throw new Error(`unknown scheme '${job.scheme}'`);
  }
  const t0 = process.hrtime.bigint();
  const input = readInputTable(job.input);
  if (job.pairMode && !input.hasSmiles2) {
    throw new Error("pair mode requires a smiles_2 column");
  }
  const rows: OutputRow[] = [];
  const skipped: { id: string; reason: string }[] = [];
  let names: string[] | null = null;

  for (const row of input.rows) {
    try {
      const first = featurizeMolecule(parseSMILES(row.smiles), job.scheme);
      let values = first.values;
      let colNames = first.names;
      if (job.pairMode) {
        const second = featurizeMolecule(parseSMILES(row.smiles2 ?? ""), job.scheme);
        values = [...first.values, ...second.values];
        colNames = [
          ...first.names.map((n) => `a_${n}`),
          ...second.names.map((n) => `b_${n}`),
        ];
      }
      if (names === null) names = colNames;
      rows.push({
        id: row.id, y: row.y, split: row.split, fold: row.fold,
        group: row.group, covariates: row.covariates, features: values,
      });
    } catch (e) {
      skipped.push({ id: row.id, reason: (e as Error).message });
    }
  }
  if (!rows.length) throw new Error("no valid molecules in the input");
  const width = rows[0]!.features.length;
  writeFeatureTable(job.output, input, rows, width);

  const expected = EXPECTED_WIDTHS[job.scheme] * (job.pairMode ? 2 : 1);
  const manifest: Manifest = {
    scheme: job.scheme,
    pair_mode: job.pairMode,
    toolkit: TOOLKIT,
    width,
    expected_width: expected,
    width_mismatch_warning: width !== expected,
    column_names: names ?? [],
    n_input_rows: input.rows.length,
    n_output_rows: rows.length,
    skipped,
    featurize_seconds: Number(process.hrtime.bigint() - t0) / 1e9,
  };
  if (manifest.width_mismatch_warning) {
    console.warn(`warning: ${job.scheme} emitted width ${width}, the reference `
      + `toolkit reports ${expected} (descriptor lists drift across toolkits)`);
  }
  fs.writeFileSync(`${job.output}.manifest.json`,
                   JSON.stringify(manifest, null, 1));
  return manifest;
}
