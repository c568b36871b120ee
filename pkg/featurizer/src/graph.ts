// Topological helpers shared by the descriptor blocks.

import { Molecule } from "./types.js";

/** All-pairs shortest path lengths by BFS; -1 for disconnected pairs. */
export function distanceMatrix(mol: Molecule): Int32Array[] {
  const n = mol.atoms.length;
  const rows: Int32Array[] = [];
  for (let src = 0; src < n; src++) {
    const dist = new Int32Array(n).fill(-1);
    dist[src] = 0;
    const queue = [src];
    while (queue.length) {
      const u = queue.shift()!;
      for (const v of mol.adjacency[u]!) {
        if (dist[v] < 0) {
          dist[v] = dist[u]! + 1;
          queue.push(v);
        }
      }
    }
    rows.push(dist);
  }
  return rows;
}

export function connectedComponents(mol: Molecule): number[][] {
  const n = mol.atoms.length;
  const comp = new Array<number>(n).fill(-1);
  const out: number[][] = [];
  for (let s = 0; s < n; s++) {
    if (comp[s] >= 0) continue;
    const members = [s];
    comp[s] = out.length;
    const queue = [s];
    while (queue.length) {
      const u = queue.shift()!;
      for (const v of mol.adjacency[u]!) {
        if (comp[v] < 0) {
          comp[v] = out.length;
          members.push(v);
          queue.push(v);
        }
      }
    }
    out.push(members);
  }
  return out;
}
