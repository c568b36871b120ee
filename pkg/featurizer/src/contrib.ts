// Per-element property tables used by descriptor blocks: average atomic
// mass, Pauling electronegativity, van der Waals radius (angstrom),
// static polarizability (angstrom^3), first ionization energy (eV).
// Values are standard physical-chemistry reference numbers.

export interface ElementProps {
  mass: number;
  en: number;
  vdw: number;
  pol: number;
  ion: number;
}

const TABLE: Record<string, ElementProps> = {
  H:  { mass: 1.008,   en: 2.20, vdw: 1.20, pol: 0.667, ion: 13.598 },
  B:  { mass: 10.811,  en: 2.04, vdw: 1.92, pol: 3.03,  ion: 8.298 },
  C:  { mass: 12.011,  en: 2.55, vdw: 1.70, pol: 1.76,  ion: 11.260 },
  N:  { mass: 14.007,  en: 3.04, vdw: 1.55, pol: 1.10,  ion: 14.534 },
  O:  { mass: 15.999,  en: 3.44, vdw: 1.52, pol: 0.802, ion: 13.618 },
  F:  { mass: 18.998,  en: 3.98, vdw: 1.47, pol: 0.557, ion: 17.423 },
  Si: { mass: 28.086,  en: 1.90, vdw: 2.10, pol: 5.38,  ion: 8.152 },
  P:  { mass: 30.974,  en: 2.19, vdw: 1.80, pol: 3.63,  ion: 10.487 },
  S:  { mass: 32.066,  en: 2.58, vdw: 1.80, pol: 2.90,  ion: 10.360 },
  Cl: { mass: 35.453,  en: 3.16, vdw: 1.75, pol: 2.18,  ion: 12.968 },
  As: { mass: 74.922,  en: 2.18, vdw: 1.85, pol: 4.31,  ion: 9.789 },
  Se: { mass: 78.971,  en: 2.55, vdw: 1.90, pol: 3.77,  ion: 9.752 },
  Br: { mass: 79.904,  en: 2.96, vdw: 1.85, pol: 3.05,  ion: 11.814 },
  I:  { mass: 126.904, en: 2.66, vdw: 1.98, pol: 5.35,  ion: 10.451 },
  Na: { mass: 22.990,  en: 0.93, vdw: 2.27, pol: 24.1,  ion: 5.139 },
  K:  { mass: 39.098,  en: 0.82, vdw: 2.75, pol: 43.1,  ion: 4.341 },
  Li: { mass: 6.94,    en: 0.98, vdw: 1.82, pol: 24.3,  ion: 5.392 },
  Mg: { mass: 24.305,  en: 1.31, vdw: 1.73, pol: 10.6,  ion: 7.646 },
  Ca: { mass: 40.078,  en: 1.00, vdw: 2.31, pol: 22.8,  ion: 6.113 },
  Fe: { mass: 55.845,  en: 1.83, vdw: 2.04, pol: 8.4,   ion: 7.902 },
  Zn: { mass: 65.38,   en: 1.65, vdw: 2.10, pol: 5.75,  ion: 9.394 },
  Al: { mass: 26.982,  en: 1.61, vdw: 1.84, pol: 6.8,   ion: 5.986 },
  Sn: { mass: 118.71,  en: 1.96, vdw: 2.17, pol: 7.7,   ion: 7.344 },
  Cu: { mass: 63.546,  en: 1.90, vdw: 1.96, pol: 6.2,   ion: 7.726 },
};

const FALLBACK: ElementProps = { mass: 50.0, en: 2.0, vdw: 1.8, pol: 3.0, ion: 9.0 };

export function elementProps(symbol: string): ElementProps {
  return TABLE[symbol] ?? FALLBACK;
}

// Coarse hydrophobicity contribution per heavy atom for a Crippen-style
// logP sum: carbons are lipophilic unless tied to heteroatoms; N/O pull
// the total down; halogens push it up.
export function logPContribution(symbol: string, aromatic: boolean,
                                 nHetNeighbors: number, inRing: boolean): number {
  switch (symbol) {
    case "C": {
      let c = aromatic ? 0.29 : 0.14;
      if (!aromatic && inRing) c = 0.21;
      return c - 0.18 * nHetNeighbors;
    }
    case "N": return aromatic ? -0.49 : -0.87;
    case "O": return aromatic ? -0.20 : -0.64;
    case "S": return 0.25;
    case "P": return -0.45;
    case "F": return 0.22;
    case "Cl": return 0.65;
    case "Br": return 0.86;
    case "I": return 1.13;
    case "H": return 0.12;
    default: return -0.08;
  }
}

// Ertl-style polar surface contributions for N/O (and the common S/P
// extension), keyed by a coarse environment classification.
export function tpsaContribution(symbol: string, aromatic: boolean,
                                 hCount: number, degree: number,
                                 charge: number, hasDoubleBond: boolean): number {
  if (symbol === "N") {
    if (charge > 0) return hCount > 0 ? 27.64 : 4.44;
    if (aromatic) return hCount > 0 ? 15.79 : 12.89;
    if (hasDoubleBond) return hCount > 0 ? 23.85 : 12.36;
    if (hCount >= 2) return 26.02;
    if (hCount === 1) return 12.03;
    return 3.24;
  }
  if (symbol === "O") {
    if (charge < 0) return 23.06;
    if (aromatic) return 13.14;
    if (hasDoubleBond) return 17.07;
    if (hCount >= 1) return 20.23;
    return 9.23;
  }
  if (symbol === "S") {
    if (aromatic) return 28.24;
    if (hasDoubleBond) return 32.09;
    return hCount > 0 ? 38.80 : 25.30;
  }
  if (symbol === "P") return 13.59;
  return 0.0;
}
