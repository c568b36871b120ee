// Input SMILES tables and canonical feature-table output.
//
// Input CSV columns: id, smiles [, smiles_2, c_* covariates, y,
// split | fold, group]. Output CSV follows the downstream harness schema:
// id [, y][, split | fold][, group], c_* passed through unchanged, then
// positional feature columns f_0..f_{d-1}; descriptive feature names live
// in the manifest. Missing values are written as empty cells.

import * as fs from "node:fs";
import * as path from "node:path";

export interface InputRow {
  id: string;
  smiles: string;
  smiles2?: string;
  y?: string;
  split?: string;
  fold?: string;
  group?: string;
  covariates: Record<string, string>;
}

export interface InputTable {
  rows: InputRow[];
  covariateNames: string[];
  hasY: boolean;
  hasSplit: boolean;
  hasFold: boolean;
  hasGroup: boolean;
  hasSmiles2: boolean;
}

export function parseCsvLine(line: string): string[] {
  const out: string[] = [];
  let cur = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i]!;
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') { cur += '"'; i++; }
        else quoted = false;
      } else cur += ch;
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      out.push(cur);
      cur = "";
    } else cur += ch;
  }
  out.push(cur);
  return out;
}

export function readInputTable(file: string): InputTable {
  const text = fs.readFileSync(file, "utf-8");
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (!lines.length) throw new Error(`${file}: empty file`);
  const header = parseCsvLine(lines[0]!);
  const col = (name: string) => header.indexOf(name);
  if (col("id") < 0 || col("smiles") < 0) {
    throw new Error(`${file}: need 'id' and 'smiles' columns`);
  }
  const covariateNames = header.filter((h) => h.startsWith("c_"));
  const rows: InputRow[] = [];
  for (let li = 1; li < lines.length; li++) {
    const vals = parseCsvLine(lines[li]!);
    if (vals.length !== header.length) {
      throw new Error(`${file}: row ${li + 1} has ${vals.length} fields, `
        + `header has ${header.length}`);
    }
    const get = (name: string) => {
      const i = col(name);
      return i >= 0 ? vals[i]! : undefined;
    };
    const covariates: Record<string, string> = {};
    for (const c of covariateNames) covariates[c] = vals[col(c)]!;
    rows.push({
      id: get("id")!,
      smiles: get("smiles")!,
      smiles2: get("smiles_2"),
      y: get("y"),
      split: get("split"),
      fold: get("fold"),
      group: get("group"),
      covariates,
    });
  }
  return {
    rows,
    covariateNames,
    hasY: col("y") >= 0,
    hasSplit: col("split") >= 0,
    hasFold: col("fold") >= 0,
    hasGroup: col("group") >= 0,
    hasSmiles2: col("smiles_2") >= 0,
  };
}

export interface OutputRow {
  id: string;
  y?: string;
  split?: string;
  fold?: string;
  group?: string;
  covariates: Record<string, string>;
  features: number[];
}

function esc(v: string): string {
  return /[",\n]/.test(v) ? `"${v.replace(/"/g, '""')}"` : v;
}

export function writeFeatureTable(file: string, input: InputTable,
                                  rows: OutputRow[], width: number): void {
  const header: string[] = ["id"];
  if (input.hasY) header.push("y");
  if (input.hasSplit) header.push("split");
  if (input.hasFold) header.push("fold");
  if (input.hasGroup) header.push("group");
  header.push(...input.covariateNames);
  for (let i = 0; i < width; i++) header.push(`f_${i}`);

  const lines = [header.join(",")];
  for (const row of rows) {
    const cells: string[] = [esc(row.id)];
    if (input.hasY) cells.push(row.y ?? "");
    if (input.hasSplit) cells.push(row.split ?? "");
    if (input.hasFold) cells.push(row.fold ?? "");
    if (input.hasGroup) cells.push(esc(row.group ?? ""));
    for (const c of input.covariateNames) cells.push(row.covariates[c] ?? "");
    for (const v of row.features) {
      cells.push(Number.isFinite(v) ? formatNumber(v) : "");
    }
    lines.push(cells.join(","));
  }
  fs.mkdirSync(path.dirname(path.resolve(file)), { recursive: true });
  fs.writeFileSync(file, lines.join("\n") + "\n");
}

export function formatNumber(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 2 ** 31) return String(v);
  return String(v);
}
