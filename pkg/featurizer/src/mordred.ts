// Extended 2D descriptor set: a superset of the compact block plus
// systematic families (Moreau-Broto autocorrelations over atomic
// properties, distance-distribution counts, surface-area bins, typed atom
// counts, electrotopological state sums, pharmacophore-style pair counts,
// information indices). Everything is computed from the 2D graph only.

import { elementProps, logPContribution } from "./contrib.js";
import { DescriptorBlock, hetNeighborCount, rdkit2dBlock, totalH } from "./descriptors.js";
import { distanceMatrix } from "./graph.js";
import { Molecule } from "./types.js";

const AUTOCORR_PROPS = ["m", "v", "e", "p", "i", "d"] as const;
const MAX_LAG = 7;

function atomProperty(mol: Molecule, idx: number, prop: string): number {
  const a = mol.atoms[idx]!;
  const p = elementProps(a.symbol);
  switch (prop) {
    case "m": return p.mass;
    case "v": return p.vdw ** 3;
    case "e": return p.en;
    case "p": return p.pol;
    case "i": return p.ion;
    default: return a.degree;
  }
}

function autocorrelations(mol: Molecule, dm: Int32Array[]): DescriptorBlock {
  const names: string[] = [];
  const values: number[] = [];
  const n = mol.atoms.length;
  for (const prop of AUTOCORR_PROPS) {
    const raw = Array.from({ length: n }, (_, i) => atomProperty(mol, i, prop));
    const mean = raw.reduce((s, v) => s + v, 0) / Math.max(n, 1);
    for (let lag = 0; lag <= MAX_LAG; lag++) {
      let ats = 0, atsc = 0, pairs = 0;
      for (let i = 0; i < n; i++) {
        for (let j = i; j < n; j++) {
          const d = dm[i]![j]!;
          if (d !== lag) continue;
          ats += raw[i]! * raw[j]!;
          atsc += (raw[i]! - mean) * (raw[j]! - mean);
          pairs++;
        }
      }
      names.push(`ATS${lag}${prop}`, `AATS${lag}${prop}`, `ATSC${lag}${prop}`);
      values.push(ats, pairs ? ats / pairs : NaN, atsc);
    }
  }
  return { names, values };
}

function distanceCounts(dm: Int32Array[], n: number): DescriptorBlock {
  const names: string[] = [];
  const values: number[] = [];
  for (let d = 1; d <= 10; d++) {
    let count = 0;
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) if (dm[i]![j]! === d) count++;
    }
    names.push(`DPath${d}`);
    values.push(count);
  }
  return { names, values };
}

function vsaBins(mol: Molecule): DescriptorBlock {
  const names: string[] = [];
  const values: number[] = [];
  const logpEdges = [-1.0, -0.6, -0.3, -0.1, 0.0, 0.1, 0.2, 0.3, 0.5];
  const enEdges = [2.0, 2.3, 2.6, 2.9, 3.2, 3.5];
  const logpBins = new Array<number>(logpEdges.length + 1).fill(0);
  const enBins = new Array<number>(enEdges.length + 1).fill(0);
  for (const a of mol.atoms) {
    const surface = 4 * Math.PI * elementProps(a.symbol).vdw ** 2;
    const lp = logPContribution(a.symbol, a.aromatic,
                                hetNeighborCount(mol, a.idx), a.inRing);
    let bin = logpEdges.findIndex((e) => lp <= e);
    if (bin < 0) bin = logpEdges.length;
    logpBins[bin]! += surface;
    const en = elementProps(a.symbol).en;
    bin = enEdges.findIndex((e) => en <= e);
    if (bin < 0) bin = enEdges.length;
    enBins[bin]! += surface;
  }
  logpBins.forEach((v, i) => { names.push(`SlogPVSA${i + 1}`); values.push(v); });
  enBins.forEach((v, i) => { names.push(`SENVSA${i + 1}`); values.push(v); });
  return { names, values };
}

function typedAtomCounts(mol: Molecule): DescriptorBlock {
  const names: string[] = [];
  const values: number[] = [];
  for (const el of ["C", "N", "O", "S", "P", "F", "Cl", "Br", "I"]) {
    for (const [tag, pred] of [
      ["Arom", (a: typeof mol.atoms[number]) => a.aromatic],
      ["Ring", (a: typeof mol.atoms[number]) => a.inRing && !a.aromatic],
      ["Chain", (a: typeof mol.atoms[number]) => !a.inRing],
    ] as const) {
      names.push(`n${el}${tag}`);
      values.push(mol.atoms.filter((a) => a.symbol === el && pred(a)).length);
    }
  }
  return { names, values };
}

function estateSums(mol: Molecule): DescriptorBlock {
  // Kier-Hall style intrinsic states aggregated per element
  const names: string[] = [];
  const values: number[] = [];
  const n = mol.atoms.length;
  const intrinsic = mol.atoms.map((a) => {
    const delta = Math.max(a.degree, 1);
    const dv = Math.max(elementProps(a.symbol).en * 2 - totalH(mol, a.idx), 1);
    return ((2 ** 2 / 1) * dv + 1) / delta;
  });
  const dm = distanceMatrix(mol);
  const state = new Array<number>(n).fill(0);
  for (let i = 0; i < n; i++) {
    let perturb = 0;
    for (let j = 0; j < n; j++) {
      if (i === j || dm[i]![j]! < 0) continue;
      perturb += (intrinsic[i]! - intrinsic[j]!) / (dm[i]![j]! + 1) ** 2;
    }
    state[i] = intrinsic[i]! + perturb;
  }
  for (const el of ["C", "N", "O", "S", "Hal"]) {
    const members = mol.atoms.filter((a) => el === "Hal"
      ? ["F", "Cl", "Br", "I"].includes(a.symbol) : a.symbol === el);
    const sum = members.reduce((s, a) => s + state[a.idx]!, 0);
    names.push(`EState${el}`, `EStateMax${el}`);
    values.push(sum, members.length
      ? Math.max(...members.map((a) => state[a.idx]!)) : 0);
  }
  return { names, values };
}

function pharmacophorePairs(mol: Molecule, dm: Int32Array[]): DescriptorBlock {
  const names: string[] = [];
  const values: number[] = [];
  const types: Record<string, number[]> = { D: [], A: [], R: [], X: [] };
  for (const a of mol.atoms) {
    if (["N", "O", "S"].includes(a.symbol) && totalH(mol, a.idx) > 0) types.D!.push(a.idx);
    if ((a.symbol === "N" || a.symbol === "O") && a.charge <= 0) types.A!.push(a.idx);
    if (a.aromatic) types.R!.push(a.idx);
    if (["F", "Cl", "Br", "I"].includes(a.symbol)) types.X!.push(a.idx);
  }
  const bins: [number, number][] = [[1, 2], [3, 4], [5, 7], [8, 99]];
  const keys = Object.keys(types);
  for (let ti = 0; ti < keys.length; ti++) {
    for (let tj = ti; tj < keys.length; tj++) {
      for (let b = 0; b < bins.length; b++) {
        const [lo, hi] = bins[b]!;
        let count = 0;
        for (const i of types[keys[ti]!]!) {
          for (const j of types[keys[tj]!]!) {
            if (i >= j && ti === tj) continue;
            const d = dm[i]![j]!;
            if (d >= lo && d <= hi) count++;
          }
        }
        names.push(`PP${keys[ti]}${keys[tj]}B${b + 1}`);
        values.push(count);
      }
    }
  }
  return { names, values };
}

function infoIndices(mol: Molecule): DescriptorBlock {
  const entropy = (counts: Map<string, number>) => {
    const total = [...counts.values()].reduce((s, v) => s + v, 0);
    if (!total) return 0;
    let h = 0;
    for (const v of counts.values()) {
      const p = v / total;
      h -= p * Math.log2(p);
    }
    return h;
  };
  const byEl = new Map<string, number>();
  const byElDeg = new Map<string, number>();
  const byDeg = new Map<string, number>();
  for (const a of mol.atoms) {
    byEl.set(a.symbol, (byEl.get(a.symbol) ?? 0) + 1);
    byElDeg.set(`${a.symbol}${a.degree}`, (byElDeg.get(`${a.symbol}${a.degree}`) ?? 0) + 1);
    byDeg.set(String(a.degree), (byDeg.get(String(a.degree)) ?? 0) + 1);
  }
  return {
    names: ["InfoElement", "InfoElementDegree", "InfoDegree"],
    values: [entropy(byEl), entropy(byElDeg), entropy(byDeg)],
  };
}

function ringSpectrum(mol: Molecule): DescriptorBlock {
  const names: string[] = [];
  const values: number[] = [];
  for (let size = 3; size <= 12; size++) {
    const all = mol.rings.filter((r) => r.length === size);
    const arom = all.filter((r) => r.every((i) => mol.atoms[i]!.aromatic));
    names.push(`nRing${size}`, `nAromRing${size}`);
    values.push(all.length, arom.length);
  }
  return { names, values };
}

export function mordredLikeBlock(mol: Molecule): DescriptorBlock {
  const dm = distanceMatrix(mol);
  const blocks = [
    rdkit2dBlock(mol),
    autocorrelations(mol, dm),
    distanceCounts(dm, mol.atoms.length),
    vsaBins(mol),
    typedAtomCounts(mol),
    estateSums(mol),
    pharmacophorePairs(mol, dm),
    infoIndices(mol),
    ringSpectrum(mol),
  ];
  return {
    names: blocks.flatMap((b) => b.names),
    values: blocks.flatMap((b) => b.values),
  };
}
