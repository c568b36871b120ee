import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { runFeaturizeJob, Manifest } from "../src/featurize.js";
import { parseCsvLine } from "../src/io.js";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "featurize-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function writeInput(name: string, lines: string[]): string {
  const p = path.join(dir, name);
  fs.writeFileSync(p, lines.join("\n") + "\n");
  return p;
}

const MOLS = [
  "id,smiles,y,split",
  "aspirin,CC(=O)Oc1ccccc1C(=O)O,1.2,train",
  "caffeine,CN1C=NC2=C1C(=O)N(C(=O)N2C)C,0.5,train",
  "ethanol,CCO,-0.3,test",
];

describe("featurize jobs", () => {
  it("emits a morgan table with width 2048 and a manifest", () => {
    const input = writeInput("mols.csv", MOLS);
    const out = path.join(dir, "mols.morgan.csv");
    const manifest = runFeaturizeJob({ input, scheme: "morgan", output: out,
                                       pairMode: false });
    expect(manifest.width).toBe(2048);
    expect(manifest.width_mismatch_warning).toBe(false);
    expect(manifest.n_output_rows).toBe(3);
    const header = parseCsvLine(fs.readFileSync(out, "utf-8").split("\n")[0]!);
    expect(header.slice(0, 3)).toEqual(["id", "y", "split"]);
    expect(header.filter((h) => h.startsWith("f_"))).toHaveLength(2048);
  });

  it("is byte-identical across runs apart from manifest timing", () => {
    const input = writeInput("mols.csv", MOLS);
    const o1 = path.join(dir, "a.csv");
    const o2 = path.join(dir, "b.csv");
    runFeaturizeJob({ input, scheme: "rdkit2d", output: o1, pairMode: false });
    runFeaturizeJob({ input, scheme: "rdkit2d", output: o2, pairMode: false });
    expect(fs.readFileSync(o1)).toEqual(fs.readFileSync(o2));
    const m1: Manifest = JSON.parse(fs.readFileSync(`${o1}.manifest.json`, "utf-8"));
    const m2: Manifest = JSON.parse(fs.readFileSync(`${o2}.manifest.json`, "utf-8"));
    m1.featurize_seconds = m2.featurize_seconds = 0;
    expect(m1).toEqual(m2);
  });

  it("skips invalid SMILES with a manifest entry", () => {
    const input = writeInput("bad.csv", [
      "id,smiles",
      "ok,CCO",
      "broken,C1CC",
      "alsu,ZZTOP",
    ]);
    const out = path.join(dir, "bad.rdkit2d.csv");
    const manifest = runFeaturizeJob({ input, scheme: "rdkit2d", output: out,
                                       pairMode: false });
    expect(manifest.n_output_rows).toBe(1);
    expect(manifest.skipped.map((s) => s.id).sort()).toEqual(["alsu", "broken"]);
    expect(manifest.skipped[0]!.reason.length).toBeGreaterThan(0);
  });

  it("fails loudly when nothing parses", () => {
    const input = writeInput("none.csv", ["id,smiles", "a,NOPE["]);
    expect(() => runFeaturizeJob({ input, scheme: "morgan",
                                   output: path.join(dir, "x.csv"),
                                   pairMode: false })).toThrow(/no valid/);
  });

  it("flags width drift against the reference toolkit widths", () => {
    const input = writeInput("mols.csv", MOLS);
    const manifest = runFeaturizeJob({ input, scheme: "rdkit2d",
                                       output: path.join(dir, "w.csv"),
                                       pairMode: false });
    expect(manifest.expected_width).toBe(217);
    expect(manifest.width_mismatch_warning).toBe(manifest.width !== 217);
  });
});

const PAIRS = [
  "id,smiles,smiles_2,c_temp,c_phi,y",
  "p1,CC(C)CO,c1ccccc1,300.0,0.25,1.0",
  "p2,CCO,CCO,310.0,0.5,2.0",
  "p3,c1ccccc1,CC(C)CO,320.0,0.75,3.0",
];

describe("pair mode", () => {
  it("doubles the width and passes covariates through", () => {
    const input = writeInput("pairs.csv", PAIRS);
    const out = path.join(dir, "pairs.rdkit2d.csv");
    const single = runFeaturizeJob({
      input: writeInput("m.csv", ["id,smiles", "x,CCO"]),
      scheme: "rdkit2d", output: path.join(dir, "m.out.csv"), pairMode: false });
    const manifest = runFeaturizeJob({ input, scheme: "rdkit2d", output: out,
                                       pairMode: true });
    expect(manifest.width).toBe(2 * single.width);
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n");
    const header = parseCsvLine(lines[0]!);
    expect(header).toContain("c_temp");
    expect(header).toContain("c_phi");
    const row = parseCsvLine(lines[1]!);
    expect(row[header.indexOf("c_temp")]).toBe("300.0");
  });

  it("identical molecules give identical halves", () => {
    const input = writeInput("pairs.csv", PAIRS);
    const out = path.join(dir, "pairs.csv.out");
    const manifest = runFeaturizeJob({ input, scheme: "rdkit2d", output: out,
                                       pairMode: true });
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n");
    const header = parseCsvLine(lines[0]!);
    const featStart = header.findIndex((h) => h === "f_0");
    const half = manifest.width / 2;
    const p2 = parseCsvLine(lines[2]!);  // CCO | CCO
    expect(p2.slice(featStart, featStart + half))
      .toEqual(p2.slice(featStart + half, featStart + 2 * half));
  });

  it("swapping the SMILES columns swaps the halves exactly", () => {
    const input = writeInput("pairs.csv", PAIRS);
    const out = path.join(dir, "pairs.out.csv");
    const manifest = runFeaturizeJob({ input, scheme: "rdkit2d", output: out,
                                       pairMode: true });
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n");
    const header = parseCsvLine(lines[0]!);
    const featStart = header.findIndex((h) => h === "f_0");
    const half = manifest.width / 2;
    const p1 = parseCsvLine(lines[1]!);  // CC(C)CO | benzene
    const p3 = parseCsvLine(lines[3]!);  // benzene | CC(C)CO
    expect(p1.slice(featStart, featStart + half))
      .toEqual(p3.slice(featStart + half, featStart + 2 * half));
    expect(p1.slice(featStart + half, featStart + 2 * half))
      .toEqual(p3.slice(featStart, featStart + half));
  });

  it("requires the smiles_2 column", () => {
    const input = writeInput("nopair.csv", ["id,smiles", "a,CCO"]);
    expect(() => runFeaturizeJob({ input, scheme: "rdkit2d",
                                   output: path.join(dir, "x.csv"),
                                   pairMode: true })).toThrow(/smiles_2/);
  });
});
