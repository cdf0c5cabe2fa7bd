//! SMILES emission. Every atom is written in bracket form with its total
//! hydrogen count, so the output re-parses to a structurally equal graph
//! without any valence re-derivation.

use super::graph::{BondDir, BondOrder, Chirality, MolGraph};
use super::smiles::element_symbol;

/// Serializes a molecule back to SMILES.
pub fn write_smiles(mol: &MolGraph) -> String {
    emit_with_order(mol).0
}

/// Serializes and also returns the emission order: `order[k]` is the
/// original atom index of the k-th atom written. Round-trip tests use the
/// order to compare graphs without isomorphism search.
pub fn emit_with_order(mol: &MolGraph) -> (String, Vec<usize>) {
    let n = mol.n_atoms();
    let incidence = mol.incidence();

    // Recursive DFS spanning tree from atom 0; in an undirected DFS every
    // non-tree edge joins a node to an ancestor, so the ancestor side of a
    // ring closure is always emitted first.
    let mut visited = vec![false; n];
    let mut tree_children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (child, bond)
    let mut back_edges: Vec<Vec<usize>> = vec![Vec::new(); n]; // bond indices opened at atom
    let mut closes_at: Vec<Vec<usize>> = vec![Vec::new(); n]; // bond indices closed at atom
    let mut used_bond = vec![false; mol.n_bonds()];
    fn dfs(
        v: usize,
        mol: &MolGraph,
        incidence: &[Vec<usize>],
        visited: &mut [bool],
        used_bond: &mut [bool],
        tree_children: &mut [Vec<(usize, usize)>],
        back_edges: &mut [Vec<usize>],
        closes_at: &mut [Vec<usize>],
    ) {
        visited[v] = true;
        for &bi in &incidence[v] {
            if used_bond[bi] {
                continue;
            }
            let u = mol.bonds[bi].other(v).unwrap();
            used_bond[bi] = true;
            if visited[u] {
                back_edges[u].push(bi);
                closes_at[v].push(bi);
            } else {
                tree_children[v].push((u, bi));
                dfs(
                    u,
                    mol,
                    incidence,
                    visited,
                    used_bond,
                    tree_children,
                    back_edges,
                    closes_at,
                );
            }
        }
    }
    dfs(
        0,
        mol,
        &incidence,
        &mut visited,
        &mut used_bond,
        &mut tree_children,
        &mut back_edges,
        &mut closes_at,
    );
    let mut out = String::new();
    let mut order = Vec::with_capacity(n);
    let mut ring_digits: std::collections::HashMap<usize, u32> = std::collections::HashMap::new();
    let mut free_digits: std::collections::BinaryHeap<std::cmp::Reverse<u32>> =
        (1..=99).map(std::cmp::Reverse).collect();
    emit_atom(
        mol,
        0,
        None,
        &tree_children,
        &back_edges,
        &closes_at,
        &mut out,
        &mut order,
        &mut ring_digits,
        &mut free_digits,
    );
    (out, order)
}

#[allow(clippy::too_many_arguments)]
fn emit_atom(
    mol: &MolGraph,
    v: usize,
    entered_by: Option<usize>,
    tree_children: &[Vec<(usize, usize)>],
    back_edges: &[Vec<usize>],
    closes_at: &[Vec<usize>],
    out: &mut String,
    order: &mut Vec<usize>,
    ring_digits: &mut std::collections::HashMap<usize, u32>,
    free_digits: &mut std::collections::BinaryHeap<std::cmp::Reverse<u32>>,
) {
    if let Some(bi) = entered_by {
        emit_bond(mol, bi, v, out);
    }
    out.push_str(&atom_token(mol, v));
    order.push(v);

    // Open digits for back edges rooted here.
    for &bi in &back_edges[v] {
        let digit = free_digits.pop().expect("digit pool exhausted").0;
        ring_digits.insert(bi, digit);
        push_digit(out, digit);
    }
    // Close digits for back edges ending here. A closing-site annotation is
    // read by the parser from the closing atom's perspective, so the bond is
    // emitted oriented toward the opening atom.
    for &bi in &closes_at[v] {
        let digit = ring_digits.remove(&bi).expect("ring digit open");
        let open_atom = mol.bonds[bi].other(v).unwrap();
        emit_bond(mol, bi, open_atom, out);
        push_digit(out, digit);
        free_digits.push(std::cmp::Reverse(digit));
    }
    let children = &tree_children[v];
    for (i, &(child, bi)) in children.iter().enumerate() {
        let last = i + 1 == children.len();
        if !last {
            out.push('(');
        }
        emit_atom(
            mol,
            child,
            Some(bi),
            tree_children,
            back_edges,
            closes_at,
            out,
            order,
            ring_digits,
            free_digits,
        );
        if !last {
            out.push(')');
        }
    }
}

fn push_digit(out: &mut String, digit: u32) {
    if digit < 10 {
        out.push_str(&digit.to_string());
    } else {
        out.push('%');
        out.push_str(&format!("{digit:02}"));
    }
}

/// Emits the bond symbol for bond `bi` written toward atom `to`.
fn emit_bond(mol: &MolGraph, bi: usize, to: usize, out: &mut String) {
    let bond = &mol.bonds[bi];
    let forward = bond.b == to; // written in (a -> b) orientation
    match bond.order {
        BondOrder::Single => {
            let dir = if forward {
                bond.direction
            } else {
                bond.direction.flipped()
            };
            match dir {
                BondDir::None => {
                    // Single between two aromatic atoms must be explicit.
                    if mol.atoms[bond.a].aromatic && mol.atoms[bond.b].aromatic {
                        out.push('-');
                    }
                }
                BondDir::EndUpright => out.push('/'),
                BondDir::EndDownright => out.push('\\'),
            }
        }
        BondOrder::Double => out.push('='),
        BondOrder::Triple => out.push('#'),
        BondOrder::Aromatic => {} // default between aromatic atoms
    }
}

fn atom_token(mol: &MolGraph, v: usize) -> String {
    let atom = &mol.atoms[v];
    let mut t = String::from("[");
    let symbol = element_symbol(atom.atomic_number);
    if atom.aromatic {
        t.push_str(&symbol.to_ascii_lowercase());
    } else {
        t.push_str(symbol);
    }
    match atom.chirality {
        Chirality::Unspecified | Chirality::Other => {}
        Chirality::Ccw => t.push('@'),
        Chirality::Cw => t.push_str("@@"),
    }
    let h = atom.total_h();
    if h == 1 {
        t.push('H');
    } else if h > 1 {
        t.push('H');
        t.push_str(&h.to_string());
    }
    let q = atom.formal_charge;
    if q != 0 {
        t.push(if q > 0 { '+' } else { '-' });
        if q.abs() > 1 {
            t.push_str(&q.abs().to_string());
        }
    }
    t.push(']');
    t
}
