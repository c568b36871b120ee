// Compact 2D descriptor block: constitutional counts, hydrogen bonding,
// ring statistics, rotatable bonds, connectivity/shape indices, coarse
// logP/TPSA sums. Descriptors that are undefined for a molecule (e.g.
// Balaban J on disconnected graphs) come back as NaN and are written as
// missing values downstream.

import { connectedComponents, distanceMatrix } from "./graph.js";
import { elementProps, logPContribution, tpsaContribution } from "./contrib.js";
import { Molecule } from "./types.js";

export interface DescriptorBlock {
  names: string[];
  values: number[];
}

export function totalH(mol: Molecule, idx: number): number {
  const a = mol.atoms[idx]!;
  return a.implicitH + Math.max(a.explicitH, 0);
}

export function hasDouble(mol: Molecule, idx: number): boolean {
  return mol.bonds.some((b) => b.order === 2 && (b.a === idx || b.b === idx));
}

export function hetNeighborCount(mol: Molecule, idx: number): number {
  return mol.adjacency[idx]!.filter(
    (j) => !["C", "H"].includes(mol.atoms[j]!.symbol)).length;
}

export function molWeight(mol: Molecule): number {
  let w = 0;
  for (const a of mol.atoms) {
    w += elementProps(a.symbol).mass;
    w += totalH(mol, a.idx) * elementProps("H").mass;
  }
  return w;
}

export function countRotatableBonds(mol: Molecule): number {
  let rot = 0;
  for (const b of mol.bonds) {
    if (b.order !== 1 || b.aromatic || b.inRing) continue;
    if (mol.atoms[b.a]!.degree < 2 || mol.atoms[b.b]!.degree < 2) continue;
    rot++;
  }
  return rot;
}

export function computeLogP(mol: Molecule): number {
  let sum = 0;
  for (const a of mol.atoms) {
    sum += logPContribution(a.symbol, a.aromatic, hetNeighborCount(mol, a.idx),
                            a.inRing);
    sum += totalH(mol, a.idx) * logPContribution("H", false, 0, false);
  }
  return sum;
}

export function computeTPSA(mol: Molecule): number {
  let sum = 0;
  for (const a of mol.atoms) {
    sum += tpsaContribution(a.symbol, a.aromatic, totalH(mol, a.idx),
                            a.degree, a.charge, hasDouble(mol, a.idx));
  }
  return sum;
}

export function hBondDonors(mol: Molecule): number {
  return mol.atoms.filter(
    (a) => ["N", "O", "S"].includes(a.symbol) && totalH(mol, a.idx) > 0).length;
}

export function hBondAcceptors(mol: Molecule): number {
  return mol.atoms.filter(
    (a) => (a.symbol === "N" || a.symbol === "O") && a.charge <= 0).length;
}

function valenceDegree(mol: Molecule, idx: number): number {
  // simple valence-electron based delta-v
  const a = mol.atoms[idx]!;
  const valenceElectrons: Record<string, number> = {
    B: 3, C: 4, N: 5, O: 6, F: 7, Si: 4, P: 5, S: 6, Cl: 7, Br: 7, I: 7,
  };
  const zv = valenceElectrons[a.symbol] ?? 4;
  return Math.max(zv - totalH(mol, idx), 1);
}

function chiIndices(mol: Molecule): Record<string, number> {
  const deg = mol.atoms.map((a) => a.degree);
  const dv = mol.atoms.map((a) => valenceDegree(mol, a.idx));
  const inv = (d: number) => (d > 0 ? 1 / Math.sqrt(d) : 0);
  let chi0 = 0, chi0v = 0;
  for (let i = 0; i < deg.length; i++) {
    chi0 += inv(deg[i]!);
    chi0v += inv(dv[i]!);
  }
  let chi1 = 0, chi1v = 0;
  for (const b of mol.bonds) {
    chi1 += inv(deg[b.a]! * deg[b.b]!);
    chi1v += inv(dv[b.a]! * dv[b.b]!);
  }
  return { chi0, chi1, chi0v, chi1v };
}

function kappaIndices(mol: Molecule): Record<string, number> {
  const n = mol.atoms.length;
  const p1 = mol.bonds.length;
  let p2 = 0;
  for (const a of mol.atoms) {
    const d = a.degree;
    p2 += (d * (d - 1)) / 2;
  }
  let p3 = 0;
  for (const b of mol.bonds) {
    p3 += (mol.atoms[b.a]!.degree - 1) * (mol.atoms[b.b]!.degree - 1);
  }
  p3 -= 3 * countSubring3(mol);
  const kappa = (p: number, k: number) => {
    if (p <= 0) return 0;
    const top = k === 1 ? n * (n - 1) ** 2 : k === 2 ? (n - 1) * (n - 2) ** 2
      : n % 2 ? (n - 1) * (n - 3) ** 2 : (n - 3) * (n - 2) ** 2;
    return top / (p * p);
  };
  return { kappa1: kappa(p1, 1), kappa2: kappa(p2, 2), kappa3: kappa(Math.max(p3, 0), 3) };
}

function countSubring3(mol: Molecule): number {
  return mol.rings.filter((r) => r.length === 3).length;
}

function wienerAndShape(mol: Molecule) {
  const dm = distanceMatrix(mol);
  const n = mol.atoms.length;
  let wiener = 0, harary = 0;
  let connected = true;
  const ecc = new Array<number>(n).fill(0);
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      const d = dm[i]![j]!;
      if (d < 0) { connected = false; continue; }
      wiener += d;
      harary += 1 / d;
    }
    for (let j = 0; j < n; j++) {
      if (dm[i]![j]! > ecc[i]!) ecc[i] = dm[i]![j]!;
    }
  }
  const diameter = Math.max(...ecc, 0);
  const radius = n ? Math.min(...ecc) : 0;
  return { wiener: connected ? wiener : NaN, harary: connected ? harary : NaN,
           diameter, radius, dm, connected };
}

function balabanJ(mol: Molecule, dm: Int32Array[], connected: boolean): number {
  if (!connected || mol.bonds.length === 0) return NaN;
  const n = mol.atoms.length;
  const s = new Array<number>(n).fill(0);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) s[i]! += Math.max(dm[i]![j]!, 0);
  }
  const m = mol.bonds.length;
  const mu = m - n + 1;
  let sum = 0;
  for (const b of mol.bonds) sum += 1 / Math.sqrt(s[b.a]! * s[b.b]!);
  return (m / (mu + 1)) * sum;
}

export function rdkit2dBlock(mol: Molecule): DescriptorBlock {
  const names: string[] = [];
  const values: number[] = [];
  const put = (name: string, v: number) => { names.push(name); values.push(v); };

  const atoms = mol.atoms;
  const nHeavy = atoms.length;
  const hTotal = atoms.reduce((s, a) => s + totalH(mol, a.idx), 0);
  put("MolWt", molWeight(mol));
  put("HeavyAtomCount", nHeavy);
  put("TotalAtomCount", nHeavy + hTotal);
  put("TotalHCount", hTotal);
  for (const el of ["C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B"]) {
    put(`Num${el}`, atoms.filter((a) => a.symbol === el).length);
  }
  put("NumHalogen", atoms.filter((a) => ["F", "Cl", "Br", "I"].includes(a.symbol)).length);
  put("NumHeteroatoms", atoms.filter((a) => !["C", "H"].includes(a.symbol)).length);
  put("FormalChargeSum", atoms.reduce((s, a) => s + a.charge, 0));
  put("FormalChargeAbs", atoms.reduce((s, a) => s + Math.abs(a.charge), 0));

  put("NumHBD", hBondDonors(mol));
  put("NumHBA", hBondAcceptors(mol));
  put("NHOHCount", atoms.filter((a) => ["N", "O"].includes(a.symbol))
      .reduce((s, a) => s + totalH(mol, a.idx), 0));
  put("NOCount", atoms.filter((a) => ["N", "O"].includes(a.symbol)).length);

  const rings = mol.rings;
  const aromaticRing = (r: number[]) => r.every((i) => atoms[i]!.aromatic);
  put("RingCount", rings.length);
  put("NumAromaticRings", rings.filter(aromaticRing).length);
  put("NumAliphaticRings", rings.filter((r) => !aromaticRing(r)).length);
  for (const size of [3, 4, 5, 6, 7, 8]) {
    put(`NumR${size}`, rings.filter((r) => r.length === size).length);
  }
  put("NumAromaticAtoms", atoms.filter((a) => a.aromatic).length);
  put("FractionAromaticAtoms",
      nHeavy ? atoms.filter((a) => a.aromatic).length / nHeavy : 0);
  put("NumRingAtoms", atoms.filter((a) => a.inRing).length);

  put("BondCount", mol.bonds.length);
  put("NumDoubleBonds", mol.bonds.filter((b) => b.order === 2 && !b.aromatic).length);
  put("NumTripleBonds", mol.bonds.filter((b) => b.order === 3).length);
  put("NumAromaticBonds", mol.bonds.filter((b) => b.aromatic).length);
  put("NumRotatableBonds", countRotatableBonds(mol));

  const carbons = atoms.filter((a) => a.symbol === "C");
  const sp3 = carbons.filter((a) => !a.aromatic &&
    !mol.bonds.some((b) => (b.a === a.idx || b.b === a.idx) && b.order > 1));
  put("FractionCSP3", carbons.length ? sp3.length / carbons.length : 0);

  put("MeanAtomicMass", nHeavy
      ? atoms.reduce((s, a) => s + elementProps(a.symbol).mass, 0) / nHeavy : 0);
  put("MeanEN", nHeavy
      ? atoms.reduce((s, a) => s + elementProps(a.symbol).en, 0) / nHeavy : 0);
  put("SumPolarizability", atoms.reduce((s, a) => s + elementProps(a.symbol).pol, 0));
  put("LabuteASAApprox", atoms.reduce(
      (s, a) => s + 4 * Math.PI * elementProps(a.symbol).vdw ** 2, 0));

  put("LogP", computeLogP(mol));
  put("TPSA", computeTPSA(mol));

  const chi = chiIndices(mol);
  put("Chi0", chi.chi0!);
  put("Chi1", chi.chi1!);
  put("Chi0v", chi.chi0v!);
  put("Chi1v", chi.chi1v!);
  const kap = kappaIndices(mol);
  put("Kappa1", kap.kappa1!);
  put("Kappa2", kap.kappa2!);
  put("Kappa3", kap.kappa3!);

  let m1 = 0, m2 = 0;
  for (const a of atoms) m1 += a.degree * a.degree;
  for (const b of mol.bonds) m2 += atoms[b.a]!.degree * atoms[b.b]!.degree;
  put("ZagrebM1", m1);
  put("ZagrebM2", m2);

  const shape = wienerAndShape(mol);
  put("WienerIndex", shape.wiener);
  put("HararyIndex", shape.harary);
  put("GraphDiameter", shape.diameter);
  put("GraphRadius", shape.radius);
  put("BalabanJ", balabanJ(mol, shape.dm, shape.connected));

  const degCounts = [0, 0, 0, 0, 0];
  for (const a of atoms) degCounts[Math.min(a.degree, 4)]!++;
  for (let d = 0; d <= 4; d++) put(`DegreeCount${d}`, degCounts[d]!);

  put("NumFragments", connectedComponents(mol).length);
  return { names, values };
}
