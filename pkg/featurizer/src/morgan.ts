// Circular (Morgan) fingerprints: iterative neighborhood hashing of atom
// invariants, folded into a fixed-width bit vector. Hashing is FNV-1a over
// integer sequences, so outputs are identical across runs and platforms.

import { Molecule } from "./types.js";

const ATOMIC_NUMBER: Record<string, number> = {
  H: 1, B: 5, C: 6, N: 7, O: 8, F: 9, Si: 14, P: 15, S: 16, Cl: 17,
  As: 33, Se: 34, Br: 35, I: 53, Fe: 26, Zn: 30, Na: 11, K: 19, Li: 3,
  Mg: 12, Ca: 20, Al: 13, Sn: 50, Cu: 29, Mn: 25, Co: 27, Ni: 28, Cr: 24,
};

export function atomicNumber(symbol: string): number {
  return ATOMIC_NUMBER[symbol] ?? 0;
}

function fnv1a(values: number[]): number {
  let h = 0x811c9dc5;
  for (const v of values) {
    // mix four bytes of each 32-bit value
    for (let shift = 0; shift < 32; shift += 8) {
      h ^= (v >>> shift) & 0xff;
      h = Math.imul(h, 0x01000193) >>> 0;
    }
  }
  return h >>> 0;
}

function bondCode(order: number, aromatic: boolean): number {
  return aromatic ? 4 : order;
}

export function morganFingerprint(mol: Molecule, radius = 2,
                                  nBits = 2048): Uint8Array {
  const bits = new Uint8Array(nBits);
  const n = mol.atoms.length;
  let inv = new Array<number>(n);
  for (let i = 0; i < n; i++) {
    const a = mol.atoms[i]!;
    inv[i] = fnv1a([
      atomicNumber(a.symbol), a.degree, a.implicitH + Math.max(a.explicitH, 0),
      a.charge & 0xff, a.aromatic ? 1 : 0, a.inRing ? 1 : 0,
    ]);
    bits[inv[i]! % nBits] = 1;
  }
  const neighborBonds: [number, number][][] = mol.atoms.map(() => []);
  for (const b of mol.bonds) {
    neighborBonds[b.a]!.push([bondCode(b.order, b.aromatic), b.b]);
    neighborBonds[b.b]!.push([bondCode(b.order, b.aromatic), b.a]);
  }
  for (let r = 1; r <= radius; r++) {
    const next = new Array<number>(n);
    for (let i = 0; i < n; i++) {
      const env = neighborBonds[i]!
        .map(([code, j]) => [code, inv[j]!] as [number, number])
        .sort((x, y) => x[0] - y[0] || x[1] - y[1]);
      const seq = [r, inv[i]!];
      for (const [code, h] of env) seq.push(code, h);
      next[i] = fnv1a(seq);
      bits[next[i]! % nBits] = 1;
    }
    inv = next;
  }
  return bits;
}
