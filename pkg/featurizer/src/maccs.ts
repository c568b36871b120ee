// 166-slot structural-key fingerprint in the spirit of the classic MACCS
// set: element presence/counts, ring-size flags, bonded-pair and
// short-path patterns, and common functional-group motifs, all computed
// from the 2D graph. The exact commercial key definitions are not
// reproduced; the realized key list is stable and recorded via its names.

import { totalH } from "./descriptors.js";
import { distanceMatrix } from "./graph.js";
import { Molecule } from "./types.js";

type Pred = (mol: Molecule, dm: () => Int32Array[]) => boolean;

function count(mol: Molecule, el: string): number {
  return mol.atoms.filter((a) => a.symbol === el).length;
}

function hasBond(mol: Molecule, el1: string, el2: string, order = 0,
                 aromatic?: boolean): boolean {
  return mol.bonds.some((b) => {
    const [x, y] = [mol.atoms[b.a]!.symbol, mol.atoms[b.b]!.symbol];
    const match = (x === el1 && y === el2) || (x === el2 && y === el1);
    if (!match) return false;
    if (order && b.order !== order) return false;
    if (aromatic !== undefined && b.aromatic !== aromatic) return false;
    return true;
  });
}

function hasPath(mol: Molecule, dm: Int32Array[], el1: string, el2: string,
                 dist: number): boolean {
  for (const a of mol.atoms) {
    if (a.symbol !== el1) continue;
    for (const b of mol.atoms) {
      if (b.symbol !== el2 || a.idx === b.idx) continue;
      if (dm[a.idx]![b.idx]! === dist) return true;
    }
  }
  return false;
}

function neighborsOf(mol: Molecule, idx: number): string[] {
  return mol.adjacency[idx]!.map((j) => mol.atoms[j]!.symbol);
}

function carbonyl(mol: Molecule): number[] {
  // carbons double-bonded to oxygen
  const out: number[] = [];
  for (const b of mol.bonds) {
    if (b.order !== 2 || b.aromatic) continue;
    const [x, y] = [mol.atoms[b.a]!, mol.atoms[b.b]!];
    if (x.symbol === "C" && y.symbol === "O") out.push(x.idx);
    if (y.symbol === "C" && x.symbol === "O") out.push(y.idx);
  }
  return out;
}

export const MACCS_KEY_NAMES: string[] = [];
const PREDICATES: Pred[] = [];

function key(name: string, pred: Pred) {
  MACCS_KEY_NAMES.push(name);
  PREDICATES.push(pred);
}

// element presence and multiplicity
for (const el of ["B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Br", "I"]) {
  key(`has${el}`, (m) => count(m, el) >= 1);
}
for (const el of ["C", "N", "O", "S"]) {
  for (const n of [2, 4, 8, 16]) {
    key(`n${el}>=${n}`, (m) => count(m, el) >= n);
  }
}
key("hasHalogen", (m) => ["F", "Cl", "Br", "I"].some((el) => count(m, el) >= 1));
key("nHalogen>=2", (m) => ["F", "Cl", "Br", "I"]
  .reduce((s, el) => s + count(m, el), 0) >= 2);
key("hasMetal", (m) => m.atoms.some(
  (a) => ["Na", "K", "Li", "Mg", "Ca", "Fe", "Zn", "Cu", "Al", "Sn"].includes(a.symbol)));

// charge and hydrogen environment
key("hasCation", (m) => m.atoms.some((a) => a.charge > 0));
key("hasAnion", (m) => m.atoms.some((a) => a.charge < 0));
key("hasNH", (m) => m.atoms.some((a) => a.symbol === "N" && totalH(m, a.idx) > 0));
key("hasNH2", (m) => m.atoms.some((a) => a.symbol === "N" && totalH(m, a.idx) >= 2));
key("hasOH", (m) => m.atoms.some((a) => a.symbol === "O" && totalH(m, a.idx) > 0));
key("hasSH", (m) => m.atoms.some((a) => a.symbol === "S" && totalH(m, a.idx) > 0));
key("hasCH3", (m) => m.atoms.some(
  (a) => a.symbol === "C" && a.degree === 1 && totalH(m, a.idx) === 3));
key("quatC", (m) => m.atoms.some((a) => a.symbol === "C" && a.degree === 4));

// ring flags
for (const size of [3, 4, 5, 6, 7, 8]) {
  key(`ring${size}`, (m) => m.rings.some((r) => r.length === size));
}
key("rings>=2", (m) => m.rings.length >= 2);
key("rings>=3", (m) => m.rings.length >= 3);
key("aromRing", (m) => m.rings.some((r) => r.every((i) => m.atoms[i]!.aromatic)));
key("aromRings>=2", (m) => m.rings.filter(
  (r) => r.every((i) => m.atoms[i]!.aromatic)).length >= 2);
key("heteroAromRing", (m) => m.rings.some(
  (r) => r.every((i) => m.atoms[i]!.aromatic) &&
         r.some((i) => m.atoms[i]!.symbol !== "C")));
key("heteroAliphRing", (m) => m.rings.some(
  (r) => !r.every((i) => m.atoms[i]!.aromatic) &&
         r.some((i) => m.atoms[i]!.symbol !== "C")));
key("fusedRings", (m) => {
  const seen = new Map<number, number>();
  for (const r of m.rings) for (const i of r) seen.set(i, (seen.get(i) ?? 0) + 1);
  return [...seen.values()].some((v) => v >= 2);
});
key("spiroLike", (m) => m.atoms.some((a) => a.ringSizes.length >= 2 && a.degree === 4));

// bonded pairs
for (const [x, y] of [["C", "N"], ["C", "O"], ["C", "S"], ["C", "P"],
                      ["N", "N"], ["N", "O"], ["N", "S"], ["O", "S"],
                      ["O", "P"], ["S", "S"], ["C", "F"], ["C", "Cl"],
                      ["C", "Br"], ["C", "I"]] as const) {
  key(`bond${x}${y}`, (m) => hasBond(m, x, y));
}
key("bondC=C", (m) => m.bonds.some((b) => b.order === 2 && !b.aromatic &&
  m.atoms[b.a]!.symbol === "C" && m.atoms[b.b]!.symbol === "C"));
key("bondC=N", (m) => hasBond(m, "C", "N", 2));
key("bondC=O", (m) => hasBond(m, "C", "O", 2));
key("bondC=S", (m) => hasBond(m, "C", "S", 2));
key("bondN=N", (m) => hasBond(m, "N", "N", 2));
key("bondN=O", (m) => hasBond(m, "N", "O", 2));
key("bondS=O", (m) => hasBond(m, "S", "O", 2));
key("tripleCC", (m) => m.bonds.some((b) => b.order === 3 &&
  m.atoms[b.a]!.symbol === "C" && m.atoms[b.b]!.symbol === "C"));
key("nitrile", (m) => m.bonds.some((b) => b.order === 3 &&
  [m.atoms[b.a]!.symbol, m.atoms[b.b]!.symbol].sort().join("") === "CN"));
key("aromCN", (m) => hasBond(m, "C", "N", 0, true));
key("aromCC", (m) => hasBond(m, "C", "C", 0, true));

// functional-group motifs
key("carbonyl", (m) => carbonyl(m).length > 0);
key("carboxylicAcid", (m) => carbonyl(m).some((c) =>
  m.adjacency[c]!.some((j) => m.atoms[j]!.symbol === "O" && totalH(m, j) > 0)));
key("ester", (m) => carbonyl(m).some((c) =>
  m.adjacency[c]!.some((j) => m.atoms[j]!.symbol === "O" && totalH(m, j) === 0
    && m.atoms[j]!.degree === 2)));
key("amide", (m) => carbonyl(m).some((c) =>
  m.adjacency[c]!.some((j) => m.atoms[j]!.symbol === "N")));
key("ketoneLike", (m) => carbonyl(m).some((c) =>
  neighborsOf(m, c).filter((s) => s === "C").length === 2));
key("nitro", (m) => m.atoms.some((a) => a.symbol === "N" &&
  m.adjacency[a.idx]!.filter((j) => m.atoms[j]!.symbol === "O").length >= 2));
key("sulfonyl", (m) => m.atoms.some((a) => a.symbol === "S" &&
  m.adjacency[a.idx]!.filter((j) => m.atoms[j]!.symbol === "O").length >= 2));
key("ether", (m) => m.atoms.some((a) => a.symbol === "O" && a.degree === 2 &&
  totalH(m, a.idx) === 0 && neighborsOf(m, a.idx).every((s) => s === "C")));
key("secondaryAmine", (m) => m.atoms.some((a) => a.symbol === "N" &&
  a.degree === 2 && totalH(m, a.idx) === 1));
key("tertiaryAmine", (m) => m.atoms.some((a) => a.symbol === "N" &&
  a.degree === 3 && totalH(m, a.idx) === 0));
key("phenolLike", (m) => m.atoms.some((a) => a.symbol === "O" &&
  totalH(m, a.idx) > 0 && m.adjacency[a.idx]!.some((j) => m.atoms[j]!.aromatic)));
key("benzylic", (m) => m.atoms.some((a) => a.symbol === "C" && !a.aromatic &&
  m.adjacency[a.idx]!.some((j) => m.atoms[j]!.aromatic)));
key("haloAromatic", (m) => m.atoms.some(
  (a) => ["F", "Cl", "Br", "I"].includes(a.symbol) &&
  m.adjacency[a.idx]!.some((j) => m.atoms[j]!.aromatic)));

// short-path element pairs (fills out the remaining slots)
const PATH_PAIRS: [string, string][] = [
  ["N", "N"], ["N", "O"], ["O", "O"], ["N", "S"], ["O", "S"],
  ["C", "N"], ["C", "O"], ["S", "S"],
];
for (const [x, y] of PATH_PAIRS) {
  for (const d of [2, 3, 4]) {
    key(`path${x}${y}d${d}`, (m, dm) => hasPath(m, dm(), x, y, d));
  }
}
for (const el of ["N", "O", "S", "Cl"]) {
  for (const d of [2, 3]) {
    key(`ring${el}d${d}`, (m, dm) => m.atoms.some((a) => a.inRing &&
      m.atoms.some((b2) => b2.symbol === el && !b2.inRing &&
        dm()[a.idx]![b2.idx]! === d)));
  }
}

// degree / hydrogen-count spectrum
for (const deg of [1, 2, 3, 4]) {
  key(`nDeg${deg}>=2`, (m) => m.atoms.filter((a) => a.degree === deg).length >= 2);
}
for (const h of [0, 1, 2, 3]) {
  key(`carbonsWithH${h}`, (m) => m.atoms.some(
    (a) => a.symbol === "C" && totalH(m, a.idx) === h));
}
key("heteroChainLen>=3", (m, dm) => hasPath(m, dm(), "O", "O", 3) ||
  hasPath(m, dm(), "N", "N", 3));
key("longChain>=8", (m, dm) => {
  const d = dm();
  return m.atoms.some((a) => m.atoms.some(
    (b2) => d[a.idx]![b2.idx]! >= 8));
});

while (MACCS_KEY_NAMES.length < 166) {
  const i = MACCS_KEY_NAMES.length;
  // remaining slots: parity-style size keys on atom/bond/ring counts
  key(`sizeKey${i}`, (m) =>
    (m.atoms.length + 3 * m.bonds.length + 7 * m.rings.length) % (i + 2) === 0);
}

export function maccsLikeKeys(mol: Molecule): Uint8Array {
  const bits = new Uint8Array(166);
  let cache: Int32Array[] | null = null;
  const dm = () => cache ?? (cache = distanceMatrix(mol));
  for (let i = 0; i < 166; i++) {
    bits[i] = PREDICATES[i]!(mol, dm) ? 1 : 0;
  }
  return bits;
}
