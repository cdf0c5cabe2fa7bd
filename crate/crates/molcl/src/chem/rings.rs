//! Smallest-set-of-smallest-rings perception.
//!
//! Horton-style candidate enumeration followed by GF(2) cycle-space
//! reduction. Candidates are sorted by (length, lexicographic atom set), so
//! the selected basis is deterministic.

/// One perceived ring: its atom set and bond set, both sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ring {
    pub atoms: Vec<usize>,
    pub bonds: Vec<usize>,
}

/// Perceives an SSSR cover of a connected graph given as an edge list.
///
/// Returns `|bonds| - |atoms| + 1` independent simple cycles (empty for
/// acyclic graphs). Every returned cycle is simple and has size >= 3.
pub fn perceive_rings(n_atoms: usize, bonds: &[(usize, usize)]) -> Vec<Ring> {
    if n_atoms == 0 || bonds.len() + 1 <= n_atoms {
        return Vec::new();
    }
    let rank = bonds.len() + 1 - n_atoms;

    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_atoms]; // (neighbor, bond idx)
    for (bi, &(a, b)) in bonds.iter().enumerate() {
        adj[a].push((b, bi));
        adj[b].push((a, bi));
    }
    for nbrs in &mut adj {
        nbrs.sort_unstable();
    }

    // Horton candidates: for every root r and every edge (u, v), the cycle
    // formed by the shortest r..u and r..v paths plus the edge, kept when the
    // two paths only share r.
    let mut candidates: Vec<Ring> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for root in 0..n_atoms {
        let (dist, parent) = bfs(root, &adj);
        for (bi, &(u, v)) in bonds.iter().enumerate() {
            if dist[u] == usize::MAX || dist[v] == usize::MAX {
                continue;
            }
            let pu = path_to_root(u, &parent);
            let pv = path_to_root(v, &parent);
            // Paths must be disjoint apart from the shared root.
            let su: std::collections::HashSet<usize> = pu.iter().copied().collect();
            if pv.iter().filter(|a| su.contains(a)).count() != 1 {
                continue;
            }
            let mut ring_bonds: Vec<usize> = Vec::with_capacity(pu.len() + pv.len() - 1);
            ring_bonds.push(bi);
            collect_path_bonds(&pu, &adj, &mut ring_bonds);
            collect_path_bonds(&pv, &adj, &mut ring_bonds);
            ring_bonds.sort_unstable();
            ring_bonds.dedup();
            let mut ring_atoms: Vec<usize> = pu.iter().chain(pv.iter()).copied().collect();
            ring_atoms.sort_unstable();
            ring_atoms.dedup();
            if ring_atoms.len() < 3 || ring_bonds.len() != ring_atoms.len() {
                continue; // not a simple cycle
            }
            if seen.insert(ring_bonds.clone()) {
                candidates.push(Ring {
                    atoms: ring_atoms,
                    bonds: ring_bonds,
                });
            }
        }
    }
    candidates.sort_by(|x, y| {
        x.atoms
            .len()
            .cmp(&y.atoms.len())
            .then_with(|| x.atoms.cmp(&y.atoms))
    });

    // Greedy GF(2) independence over edge-incidence vectors; rows are kept
    // keyed by their leading bit.
    let words = (bonds.len() + 63) / 64;
    let mut basis: std::collections::HashMap<usize, Vec<u64>> = std::collections::HashMap::new();
    let mut picked: Vec<Ring> = Vec::new();
    for cand in candidates {
        if picked.len() == rank {
            break;
        }
        let mut vec = vec![0u64; words];
        for &bi in &cand.bonds {
            vec[bi / 64] |= 1u64 << (bi % 64);
        }
        loop {
            match leading_bit(&vec) {
                None => break, // linearly dependent
                Some(pivot) => match basis.get(&pivot) {
                    Some(row) => {
                        for (v, r) in vec.iter_mut().zip(row.iter()) {
                            *v ^= r;
                        }
                    }
                    None => {
                        basis.insert(pivot, vec);
                        picked.push(cand);
                        break;
                    }
                },
            }
        }
    }
    picked
}

fn bfs(root: usize, adj: &[Vec<(usize, usize)>]) -> (Vec<usize>, Vec<usize>) {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    dist[root] = 0;
    queue.push_back(root);
    while let Some(v) = queue.pop_front() {
        for &(u, _) in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                parent[u] = v;
                queue.push_back(u);
            }
        }
    }
    (dist, parent)
}

fn path_to_root(mut v: usize, parent: &[usize]) -> Vec<usize> {
    let mut path = vec![v];
    while parent[v] != usize::MAX {
        v = parent[v];
        path.push(v);
    }
    path
}

fn collect_path_bonds(path: &[usize], adj: &[Vec<(usize, usize)>], out: &mut Vec<usize>) {
    for w in path.windows(2) {
        let bi = adj[w[0]]
            .iter()
            .find(|&&(nbr, _)| nbr == w[1])
            .map(|&(_, bi)| bi)
            .expect("path edge exists");
        out.push(bi);
    }
}

fn leading_bit(v: &[u64]) -> Option<usize> {
    for (wi, &w) in v.iter().enumerate() {
        if w != 0 {
            return Some(wi * 64 + w.trailing_zeros() as usize);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acyclic_graph_has_no_rings() {
        assert!(perceive_rings(3, &[(0, 1), (1, 2)]).is_empty());
    }

    #[test]
    fn triangle() {
        let rings = perceive_rings(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(rings.len(), 1);
        assert_eq!(rings[0].atoms, vec![0, 1, 2]);
    }

    #[test]
    fn fused_pair_counts_by_cycle_rank() {
        // Naphthalene-shaped: two fused 6-rings, 10 atoms, 11 bonds.
        let bonds = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (5, 0),
            (3, 6),
            (6, 7),
            (7, 8),
            (8, 9),
            (9, 4),
        ];
        let rings = perceive_rings(10, &bonds);
        assert_eq!(rings.len(), 2);
        assert!(rings.iter().all(|r| r.atoms.len() == 6));
    }

    #[test]
    fn spiro_rings_stay_separate() {
        // Two triangles sharing atom 0.
        let bonds = [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)];
        let rings = perceive_rings(5, &bonds);
        assert_eq!(rings.len(), 2);
        assert!(rings.iter().all(|r| r.atoms.len() == 3));
    }

    #[test]
    fn prefers_small_rings_in_bridged_systems() {
        // Bicyclo[1.1.1]: two bridgeheads (0, 2) joined by three 1-atom
        // bridges; rank 2, smallest cycles are the 4-rings.
        let bonds = [(0, 1), (1, 2), (0, 3), (3, 2), (0, 4), (4, 2)];
        let rings = perceive_rings(5, &bonds);
        assert_eq!(rings.len(), 2);
        assert!(rings.iter().all(|r| r.atoms.len() == 4));
    }
}
