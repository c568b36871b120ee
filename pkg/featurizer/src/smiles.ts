// SMILES parser covering the organic subset, bracket atoms (isotope,
// charge, explicit H, chirality tags), branches, ring closures (including
// %nn), aromatic lowercase forms, and dot-separated fragments. Stereo
// markers are accepted and ignored; descriptors here are 2D.

import { Atom, Bond, BondOrder, Molecule, SmilesError } from "./types.js";

const ORGANIC = new Set(["B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"]);
const AROMATIC_ORGANIC = new Set(["b", "c", "n", "o", "p", "s"]);
const TWO_LETTER = new Set(["Cl", "Br"]);

const VALENCES: Record<string, number[]> = {
  B: [3], C: [4], N: [3, 5], O: [2], P: [3, 5], S: [2, 4, 6],
  F: [1], Cl: [1], Br: [1], I: [1],
};

interface RingOpen {
  atom: number;
  order: BondOrder | 0;   // 0 = unspecified
  aromatic: boolean;
}

export function parseSMILES(smiles: string): Molecule {
  const s = smiles.trim();
  if (!s) throw new SmilesError("empty SMILES");
  const atoms: Atom[] = [];
  const bonds: Bond[] = [];
  const stack: number[] = [];
  const ringMap = new Map<number, RingOpen>();
  let prev = -1;
  let pendingOrder: BondOrder | 0 = 0;
  let pendingAromatic = false;
  let i = 0;

  const addAtom = (symbol: string, aromatic: boolean, charge = 0,
                   isotope = 0, explicitH = -1): number => {
    atoms.push({
      symbol, aromatic, charge, isotope, explicitH,
      idx: atoms.length, implicitH: 0, degree: 0, inRing: false, ringSizes: [],
    });
    return atoms.length - 1;
  };

  const addBond = (a: number, b: number, order: BondOrder | 0, aromatic: boolean) => {
    if (a === b) throw new SmilesError(`self-bond at atom ${a}`);
    const arom = aromatic || (atoms[a].aromatic && atoms[b].aromatic && order === 0);
    bonds.push({ a, b, order: order === 0 ? 1 : order, aromatic: arom, inRing: false });
  };

  const connect = (idx: number) => {
    if (prev >= 0) addBond(prev, idx, pendingOrder, pendingAromatic);
    pendingOrder = 0;
    pendingAromatic = false;
    prev = idx;
  };

  const ringBond = (num: number) => {
    const open = ringMap.get(num);
    if (open === undefined) {
      ringMap.set(num, { atom: prev, order: pendingOrder, aromatic: pendingAromatic });
    } else {
      const order = pendingOrder || open.order;
      addBond(open.atom, prev, order, pendingAromatic || open.aromatic);
      ringMap.delete(num);
    }
    pendingOrder = 0;
    pendingAromatic = false;
  };

  while (i < s.length) {
    const ch = s[i];
    if (ch === "(") {
      if (prev < 0) throw new SmilesError(`branch before any atom at ${i}`);
      stack.push(prev);
      i++;
    } else if (ch === ")") {
      const back = stack.pop();
      if (back === undefined) throw new SmilesError(`unmatched ')' at ${i}`);
      prev = back;
      i++;
    } else if (ch === "-") { pendingOrder = 1; i++; }
    else if (ch === "=") { pendingOrder = 2; i++; }
    else if (ch === "#") { pendingOrder = 3; i++; }
    else if (ch === ":") { pendingAromatic = true; i++; }
    else if (ch === "/" || ch === "\\") { pendingOrder = 1; i++; }
    else if (ch === ".") { prev = -1; pendingOrder = 0; pendingAromatic = false; i++; }
    else if (ch >= "0" && ch <= "9") {
      if (prev < 0) throw new SmilesError(`ring closure before any atom at ${i}`);
      ringBond(Number(ch));
      i++;
    } else if (ch === "%") {
      const num = s.slice(i + 1, i + 3);
      if (!/^\d\d$/.test(num)) throw new SmilesError(`bad %ring number at ${i}`);
      ringBond(Number(num));
      i += 3;
    } else if (ch === "[") {
      const close = s.indexOf("]", i);
      if (close < 0) throw new SmilesError(`unclosed bracket at ${i}`);
      const idx = parseBracket(s.slice(i + 1, close), i, addAtom);
      connect(idx);
      i = close + 1;
    } else {
      const two = s.slice(i, i + 2);
      if (TWO_LETTER.has(two)) {
        connect(addAtom(two, false));
        i += 2;
      } else if (ORGANIC.has(ch)) {
        connect(addAtom(ch, false));
        i++;
      } else if (AROMATIC_ORGANIC.has(ch)) {
        connect(addAtom(ch.toUpperCase(), true));
        i++;
      } else {
        throw new SmilesError(`unexpected character ${ch!} at position ${i}`);
      }
    }
  }
  if (stack.length) throw new SmilesError("unclosed branch");
  if (ringMap.size) {
    throw new SmilesError(`unclosed ring bond(s): ${[...ringMap.keys()].join(",")}`);
  }
  return finalize(atoms, bonds, s);
}

function parseBracket(
  body: string, pos: number,
  addAtom: (sym: string, arom: boolean, charge: number, isotope: number,
            explicitH: number) => number,
): number {
  const m = body.match(
    /^(\d+)?([A-Z][a-z]?|[bcnops]|se|as)(@{1,2}|@TH\d|@AL\d)?(H\d*)?([+-]+\d*|\+\d+|-\d+)?(:\d+)?$/);
  if (!m) throw new SmilesError(`cannot parse bracket atom [${body}] at ${pos}`);
  const isotope = m[1] ? Number(m[1]) : 0;
  let symbol = m[2]!;
  const aromatic = symbol[0] === symbol[0]!.toLowerCase();
  if (aromatic) symbol = symbol[0]!.toUpperCase() + symbol.slice(1);
  let explicitH = 0;
  if (m[4]) explicitH = m[4] === "H" ? 1 : Number(m[4].slice(1));
  let charge = 0;
  if (m[5]) {
    const c = m[5];
    if (/^[+-]+$/.test(c)) {
      charge = (c[0] === "+" ? 1 : -1) * c.length;
    } else {
      charge = Number(c.replace("+", ""));
    }
  }
  return addAtom(symbol, aromatic, charge, isotope, explicitH);
}

function finalize(atoms: Atom[], bonds: Bond[], smiles: string): Molecule {
  const adjacency: number[][] = atoms.map(() => []);
  for (const b of bonds) {
    adjacency[b.a]!.push(b.b);
    adjacency[b.b]!.push(b.a);
  }
  const rings = findSmallRings(atoms.length, bonds, adjacency);
  const ringAtoms = new Set<number>();
  const ringBondKeys = new Set<string>();
  for (const ring of rings) {
    for (let k = 0; k < ring.length; k++) {
      ringAtoms.add(ring[k]!);
      const a = ring[k]!, b = ring[(k + 1) % ring.length]!;
      ringBondKeys.add(bondKey(a, b));
      for (const atomIdx of [a]) atoms[atomIdx]!.ringSizes.push(ring.length);
    }
  }
  for (const b of bonds) b.inRing = ringBondKeys.has(bondKey(b.a, b.b));
  for (const a of atoms) {
    a.degree = adjacency[a.idx]!.length;
    a.inRing = ringAtoms.has(a.idx);
  }
  perceiveAromaticRings(atoms, bonds, rings);
  for (const a of atoms) a.implicitH = implicitHydrogens(a, bonds);
  return { atoms, bonds, adjacency, rings, smiles };
}

function bondKey(a: number, b: number): string {
  return a < b ? `${a}-${b}` : `${b}-${a}`;
}

// Shortest cycle through each bond (BFS), deduplicated; an SSSR-style
// approximation adequate for ring counts and ring-size descriptors.
function findSmallRings(n: number, bonds: Bond[], adjacency: number[][]): number[][] {
  const seen = new Set<string>();
  const rings: number[][] = [];
  for (const bond of bonds) {
    const ring = shortestCycleThrough(bond, n, adjacency);
    if (ring && ring.length <= 12) {
      const key = [...ring].sort((x, y) => x - y).join(",");
      if (!seen.has(key)) {
        seen.add(key);
        rings.push(ring);
      }
    }
  }
  return rings;
}

function shortestCycleThrough(bond: Bond, n: number,
                              adjacency: number[][]): number[] | null {
  // BFS from bond.a to bond.b avoiding the bond itself
  const prev = new Array<number>(n).fill(-1);
  const dist = new Array<number>(n).fill(-1);
  dist[bond.a] = 0;
  const queue = [bond.a];
  while (queue.length) {
    const u = queue.shift()!;
    for (const v of adjacency[u]!) {
      if (u === bond.a && v === bond.b) continue;
      if (u === bond.b && v === bond.a) continue;
      if (dist[v] < 0) {
        dist[v] = dist[u]! + 1;
        prev[v] = u;
        queue.push(v);
      }
    }
  }
  if (dist[bond.b] < 0) return null;
  const path = [bond.b];
  let cur = bond.b;
  while (cur !== bond.a) {
    cur = prev[cur]!;
    path.push(cur);
  }
  return path;
}

// Mark 5-7 rings aromatic when every member is plausibly sp2: already
// flagged aromatic, carries a double bond, or is a lone-pair heteroatom
// in a 5-ring. Handles Kekule-form inputs well enough for ring counting
// and fingerprint invariants.
function perceiveAromaticRings(atoms: Atom[], bonds: Bond[], rings: number[][]) {
  const doubleAt = new Array<boolean>(atoms.length).fill(false);
  for (const b of bonds) {
    if (b.order === 2) { doubleAt[b.a] = true; doubleAt[b.b] = true; }
  }
  const bondByKey = new Map<string, Bond>();
  for (const b of bonds) bondByKey.set(bondKey(b.a, b.b), b);
  for (const ring of rings) {
    if (ring.length < 5 || ring.length > 7) continue;
    const ok = ring.every((idx) => {
      const a = atoms[idx]!;
      if (a.aromatic || doubleAt[idx]) return true;
      return ring.length === 5 && ["N", "O", "S"].includes(a.symbol);
    });
    if (!ok) continue;
    for (const idx of ring) atoms[idx]!.aromatic = true;
    for (let k = 0; k < ring.length; k++) {
      const b = bondByKey.get(bondKey(ring[k]!, ring[(k + 1) % ring.length]!));
      if (b) b.aromatic = true;
    }
  }
}

function implicitHydrogens(atom: Atom, bonds: Bond[]): number {
  if (atom.explicitH >= 0) return atom.explicitH;  // bracket atom: as written
  const valences = VALENCES[atom.symbol];
  if (!valences) return 0;
  let sum = 0;
  for (const b of bonds) {
    if (b.a !== atom.idx && b.b !== atom.idx) continue;
    sum += b.aromatic ? 1.5 : b.order;
  }
  const need = Math.ceil(sum - 1e-9);
  let target = atom.charge !== 0
    ? (atom.symbol === "C" ? 4 - Math.abs(atom.charge)
                           : valences[0]! + atom.charge)
    : -1;
  if (target < 0) {
    target = valences.find((v) => v >= need) ?? valences[valences.length - 1]!;
  }
  return Math.max(0, target - need);
}
