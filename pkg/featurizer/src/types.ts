export interface Atom {
  symbol: string;          // element symbol, e.g. "C", "Cl"
  aromatic: boolean;
  charge: number;
  isotope: number;         // 0 = natural
  explicitH: number;       // H count given in brackets
  idx: number;
  // derived after parsing:
  implicitH: number;
  degree: number;          // heavy-atom neighbors
  inRing: boolean;
  ringSizes: number[];
}

export type BondOrder = 1 | 2 | 3;

export interface Bond {
  a: number;
  b: number;
  order: BondOrder;
  aromatic: boolean;
  inRing: boolean;
}

export interface Molecule {
  atoms: Atom[];
  bonds: Bond[];
  adjacency: number[][];   // neighbor atom indices
  rings: number[][];       // small rings (atom index cycles)
  smiles: string;
}

export class SmilesError extends Error {}
