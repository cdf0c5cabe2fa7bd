//! Bemis-Murcko scaffolds and their canonical text keys.

use crate::chem::{BondOrder, MolGraph};
use crate::util::StableHasher;

/// Computes the scaffold key of a molecule: iteratively delete degree-one
/// atoms that are on no ring until none remain, then serialize the surviving
/// ring-and-linker graph canonically. Acyclic molecules map to the empty
/// key, and two molecules share a key exactly when their scaffolds match.
pub fn murcko_scaffold(mol: &MolGraph) -> String {
    if mol.rings.is_empty() {
        return String::new();
    }
    let n = mol.n_atoms();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = vec![0; n];
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (bi, bond) in mol.bonds.iter().enumerate() {
        adj[bond.a].push((bond.b, bi));
        adj[bond.b].push((bond.a, bi));
        degree[bond.a] += 1;
        degree[bond.b] += 1;
    }
    let mut queue: Vec<usize> = (0..n)
        .filter(|&v| degree[v] <= 1 && !mol.atoms[v].in_ring)
        .collect();
    while let Some(v) = queue.pop() {
        if !alive[v] || degree[v] > 1 || mol.atoms[v].in_ring {
            continue;
        }
        alive[v] = false;
        for &(u, _) in &adj[v] {
            if alive[u] {
                degree[u] -= 1;
                if degree[u] <= 1 && !mol.atoms[u].in_ring {
                    queue.push(u);
                }
            }
        }
    }

    let kept: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let index: std::collections::HashMap<usize, usize> =
        kept.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let atoms: Vec<AtomKey> = kept
        .iter()
        .map(|&v| AtomKey {
            z: mol.atoms[v].atomic_number,
            aromatic: mol.atoms[v].aromatic,
            charge: mol.atoms[v].formal_charge,
        })
        .collect();
    let mut bonds: Vec<(usize, usize, u8)> = Vec::new();
    for bond in &mol.bonds {
        if let (Some(&a), Some(&b)) = (index.get(&bond.a), index.get(&bond.b)) {
            let code = match bond.order {
                BondOrder::Single => 1,
                BondOrder::Double => 2,
                BondOrder::Triple => 3,
                BondOrder::Aromatic => 4,
            };
            bonds.push((a, b, code));
        }
    }
    canonical_key(&atoms, &bonds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct AtomKey {
    z: u8,
    aromatic: bool,
    charge: i8,
}

/// Canonical serialization of a small attributed graph.
///
/// Colors start from atom attributes plus degree and are refined by hashing
/// sorted (bond code, neighbor color) lists. When the stable partition still
/// has ties, each member of the first tied cell is individualized in turn
/// and the lexicographically smallest serialization wins, so the key does
/// not depend on input atom order.
fn canonical_key(atoms: &[AtomKey], bonds: &[(usize, usize, u8)]) -> String {
    let n = atoms.len();
    if n == 0 {
        return String::new();
    }
    let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); n];
    for &(a, b, code) in bonds {
        adj[a].push((b, code));
        adj[b].push((a, code));
    }
    let init: Vec<u64> = (0..n)
        .map(|v| {
            let mut h = StableHasher::new();
            h.write_u64(atoms[v].z as u64)
                .write_bool(atoms[v].aromatic)
                .write_i64(atoms[v].charge as i64)
                .write_u64(adj[v].len() as u64);
            h.finish()
        })
        .collect();
    serialize_min(atoms, &adj, init)
}

fn refine(adj: &[Vec<(usize, u8)>], mut colors: Vec<u64>) -> Vec<u64> {
    let n = adj.len();
    loop {
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let mut nbrs: Vec<(u8, u64)> = adj[v].iter().map(|&(u, c)| (c, colors[u])).collect();
            nbrs.sort_unstable();
            let mut h = StableHasher::new();
            h.write_u64(colors[v]);
            for (c, col) in nbrs {
                h.write_u64(c as u64).write_u64(col);
            }
            next.push(h.finish());
        }
        // Stop when the partition stops splitting.
        let classes_before = distinct(&colors);
        let classes_after = distinct(&next);
        colors = next;
        if classes_after == classes_before {
            return colors;
        }
    }
}

fn distinct(colors: &[u64]) -> usize {
    let mut v: Vec<u64> = colors.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

fn serialize_min(atoms: &[AtomKey], adj: &[Vec<(usize, u8)>], colors: Vec<u64>) -> String {
    let colors = refine(adj, colors);
    // Group atoms by color; cells ordered by color value.
    let mut by_color: std::collections::BTreeMap<u64, Vec<usize>> = Default::default();
    for (v, &c) in colors.iter().enumerate() {
        by_color.entry(c).or_default().push(v);
    }
    let first_tied: Option<&Vec<usize>> = by_color.values().find(|cell| cell.len() > 1);
    match first_tied {
        None => serialize(atoms, adj, &colors),
        Some(cell) => {
            let cell = cell.clone();
            let mut best: Option<String> = None;
            for &v in &cell {
                let mut branched = colors.clone();
                // Individualize v with a marker outside the hash image of
                // refine (hash collisions aside, any distinct value works).
                let mut h = StableHasher::new();
                h.write_u64(branched[v]).write_u64(0x1d1d_1d1d);
                branched[v] = h.finish();
                let s = serialize_min(atoms, adj, branched);
                if best.as_ref().map_or(true, |b| s < *b) {
                    best = Some(s);
                }
            }
            best.unwrap()
        }
    }
}

fn serialize(atoms: &[AtomKey], adj: &[Vec<(usize, u8)>], colors: &[u64]) -> String {
    let n = atoms.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| colors[v]);
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let mut parts: Vec<String> = Vec::with_capacity(n + 1);
    for &v in &order {
        let a = &atoms[v];
        parts.push(format!(
            "{}{}{:+}",
            a.z,
            if a.aromatic { "a" } else { "" },
            a.charge
        ));
    }
    let mut edges: Vec<(usize, usize, u8)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for v in 0..n {
        for &(u, code) in &adj[v] {
            let (x, y) = (rank[v].min(rank[u]), rank[v].max(rank[u]));
            if seen.insert((x, y)) {
                edges.push((x, y, code));
            }
        }
    }
    edges.sort_unstable();
    let edge_str: Vec<String> = edges
        .iter()
        .map(|&(x, y, c)| format!("{x}-{y}:{c}"))
        .collect();
    format!("{}|{}", parts.join(","), edge_str.join(","))
}
