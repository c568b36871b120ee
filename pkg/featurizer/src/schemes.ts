// Scheme registry: maps a representation name to a per-molecule vector.

import { rdkit2dBlock } from "./descriptors.js";
import { maccsLikeKeys, MACCS_KEY_NAMES } from "./maccs.js";
import { mordredLikeBlock } from "./mordred.js";
import { morganFingerprint } from "./morgan.js";
import { Molecule } from "./types.js";

export const SCHEMES = ["rdkit2d", "mordred2d", "morgan", "rdkit2d_maccs"] as const;
export type Scheme = typeof SCHEMES[number];

// widths reported for these representations by the reference toolkits;
// ours differ (descriptor lists drift across implementations), which the
// manifest surfaces as a warning rather than an error
export const EXPECTED_WIDTHS: Record<Scheme, number> = {
  rdkit2d: 217,
  mordred2d: 1613,
  morgan: 2048,
  rdkit2d_maccs: 383,
};

export interface FeatureVector {
  names: string[];
  values: number[];
}

export function featurizeMolecule(mol: Molecule, scheme: Scheme): FeatureVector {
  switch (scheme) {
    case "rdkit2d":
      return rdkit2dBlock(mol);
    case "mordred2d":
      return mordredLikeBlock(mol);
    case "morgan": {
      const bits = morganFingerprint(mol, 2, 2048);
      return {
        names: Array.from({ length: bits.length }, (_, i) => `morgan${i}`),
        values: Array.from(bits, (b) => b),
      };
    }
    case "rdkit2d_maccs": {
      const base = rdkit2dBlock(mol);
      const keys = maccsLikeKeys(mol);
      return {
        names: [...base.names, ...MACCS_KEY_NAMES.map((n) => `maccs_${n}`)],
        values: [...base.values, ...Array.from(keys, (b) => b)],
      };
    }
  }
}
