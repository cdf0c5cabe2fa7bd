//! Retrosynthetic bond cleavage over link-environment pairs.
//!
//! The pair table ships as `data/brics_rules.tsv` (compiled in, re-parsable
//! from a custom path). Candidate bonds are acyclic single non-aromatic
//! bonds; all matches are cleaved simultaneously and the connected
//! components of what remains are the fragments. No attachment atoms are
//! introduced: fragments are atom-index subsets of the intact graph.

use crate::chem::{BondOrder, MolGraph};
use std::collections::HashMap;
use std::sync::OnceLock;
use thiserror::Error;

/// Partition of a molecule's atoms into fragments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentMap {
    /// Per-atom fragment id; ids are 0-based and contiguous, ordered by the
    /// smallest atom index in each fragment.
    pub assignment: Vec<usize>,
    pub n_fragments: usize,
    /// Indices of the bonds removed by the partition, ascending.
    pub cleaved_bonds: Vec<usize>,
}

impl FragmentMap {
    /// Atom indices of each fragment, ascending within a fragment.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_fragments];
        for (atom, &f) in self.assignment.iter().enumerate() {
            groups[f].push(atom);
        }
        groups
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleTableError {
    #[error("rule table line {0}: {1}")]
    Malformed(usize, String),
    #[error("rule table names unknown link id {0:?}")]
    UnknownLink(String),
}

/// Link environments the predicate engine implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Link {
    L1,
    L3,
    L4,
    L5,
    L6,
    L8,
    L9,
    L10,
    L11,
    L12,
    L13,
    L14,
    L15,
    L16,
}

impl Link {
    fn parse(s: &str) -> Option<Link> {
        Some(match s {
            "L1" => Link::L1,
            "L3" => Link::L3,
            "L4" => Link::L4,
            "L5" => Link::L5,
            "L6" => Link::L6,
            "L8" => Link::L8,
            "L9" => Link::L9,
            "L10" => Link::L10,
            "L11" => Link::L11,
            "L12" => Link::L12,
            "L13" => Link::L13,
            "L14" => Link::L14,
            "L15" => Link::L15,
            "L16" => Link::L16,
            _ => return None,
        })
    }
}

/// The cleavable environment-pair table.
#[derive(Clone, Debug)]
pub struct RuleTable {
    pairs: Vec<(Link, Link)>,
}

impl RuleTable {
    pub fn parse(text: &str) -> Result<RuleTable, RuleTableError> {
        let mut pairs = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            match fields.as_slice() {
                ["pair", a, b] => {
                    let la = Link::parse(a)
                        .ok_or_else(|| RuleTableError::UnknownLink((*a).to_string()))?;
                    let lb = Link::parse(b)
                        .ok_or_else(|| RuleTableError::UnknownLink((*b).to_string()))?;
                    pairs.push((la, lb));
                }
                _ => {
                    return Err(RuleTableError::Malformed(ln + 1, t.to_string()));
                }
            }
        }
        Ok(RuleTable { pairs })
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }
}

/// The table compiled into the binary, parsed once on first use.
pub fn default_rule_table() -> &'static RuleTable {
    static TABLE: OnceLock<RuleTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        RuleTable::parse(include_str!("../../data/brics_rules.tsv"))
            .expect("bundled rule table parses")
    })
}

/// Per-bond context handed to the environment predicates.
struct Ctx<'a> {
    mol: &'a MolGraph,
    incidence: Vec<Vec<usize>>,
}

impl<'a> Ctx<'a> {
    fn new(mol: &'a MolGraph) -> Self {
        Ctx {
            mol,
            incidence: mol.incidence(),
        }
    }

    /// (bond index, neighbor atom) pairs around `v`.
    fn around(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.incidence[v]
            .iter()
            .map(move |&bi| (bi, self.mol.bonds[bi].other(v).unwrap()))
    }

    fn z(&self, v: usize) -> u8 {
        self.mol.atoms[v].atomic_number
    }

    fn aromatic(&self, v: usize) -> bool {
        self.mol.atoms[v].aromatic
    }


    fn has_double_to_oxygen(&self, v: usize) -> bool {
        self.around(v).any(|(bi, w)| {
            self.mol.bonds[bi].order == BondOrder::Double && self.z(w) == 8
        })
    }
}

/// Does atom `u` match `link` for a candidate bond toward `v`?
///
/// `v` only matters for the environments whose definitions constrain the
/// candidate bond partner (L3, L4, L6, L11).
fn matches(ctx: &Ctx, link: Link, u: usize, v: usize) -> bool {
    let mol = ctx.mol;
    let atom = &mol.atoms[u];
    match link {
        Link::L1 => {
            atom.atomic_number == 6
                && !atom.aromatic
                && atom.degree == 3
                && ctx.has_double_to_oxygen(u)
                && ctx.around(u).any(|(bi, w)| {
                    !(mol.bonds[bi].order == BondOrder::Double && ctx.z(w) == 8)
                        && matches!(ctx.z(w), 6 | 7 | 8)
                })
        }
        Link::L3 => atom.atomic_number == 8 && !atom.aromatic && atom.degree == 2 && ctx.z(v) == 6,
        Link::L4 => {
            atom.atomic_number == 6
                && !atom.aromatic
                && atom.degree >= 2
                && ctx
                    .around(u)
                    .all(|(bi, _)| mol.bonds[bi].order != BondOrder::Double)
                && ctx.z(v) == 6
        }
        Link::L5 => {
            atom.atomic_number == 7
                && !atom.aromatic
                && atom.degree >= 2
                && ctx
                    .around(u)
                    .all(|(bi, _)| mol.bonds[bi].order != BondOrder::Double)
                && ctx.around(u).all(|(bi, w)| {
                    mol.bonds[bi].order != BondOrder::Single || matches!(ctx.z(w), 6 | 16)
                })
                && !is_lactam_nitrogen(ctx, u)
        }
        Link::L6 => {
            atom.atomic_number == 6
                && !atom.aromatic
                && !atom.in_ring
                && atom.degree == 3
                && ctx.has_double_to_oxygen(u)
                && matches!(ctx.z(v), 6 | 7 | 8)
        }
        Link::L8 => {
            atom.atomic_number == 6
                && !atom.aromatic
                && !atom.in_ring
                && atom.degree >= 2
                && ctx
                    .around(u)
                    .all(|(bi, _)| mol.bonds[bi].order == BondOrder::Single)
        }
        Link::L9 => {
            atom.atomic_number == 7
                && atom.aromatic
                && atom.formal_charge == 0
                && ctx
                    .around(u)
                    .filter(|&(bi, w)| {
                        mol.bonds[bi].order == BondOrder::Aromatic
                            && matches!(ctx.z(w), 6 | 7 | 8 | 16)
                    })
                    .count()
                    >= 2
        }
        Link::L10 => {
            if atom.atomic_number != 7 || atom.aromatic || !atom.in_ring {
                return false;
            }
            let ring_carbonyl = ctx.around(u).find(|&(bi, w)| {
                mol.bonds[bi].in_ring
                    && ctx.z(w) == 6
                    && !ctx.aromatic(w)
                    && ctx.has_double_to_oxygen(w)
            });
            match ring_carbonyl {
                None => false,
                Some((_, w)) => ctx.around(u).any(|(bi, t)| {
                    t != w && mol.bonds[bi].in_ring && matches!(ctx.z(t), 6 | 7 | 8 | 16)
                }),
            }
        }
        Link::L11 => atom.atomic_number == 16 && !atom.aromatic && atom.degree == 2 && ctx.z(v) == 6,
        Link::L12 => {
            atom.atomic_number == 16
                && !atom.aromatic
                && atom.degree == 4
                && ctx
                    .around(u)
                    .filter(|&(bi, w)| mol.bonds[bi].order == BondOrder::Double && ctx.z(w) == 8)
                    .count()
                    >= 2
                && ctx.around(u).any(|(_, w)| ctx.z(w) == 6)
        }
        Link::L13 => {
            if atom.atomic_number != 6 || atom.aromatic || !atom.in_ring {
                return false;
            }
            let ring_single: Vec<usize> = ctx
                .around(u)
                .filter(|&(bi, _)| {
                    mol.bonds[bi].in_ring && mol.bonds[bi].order == BondOrder::Single
                })
                .map(|(_, w)| w)
                .collect();
            ring_single.iter().any(|&w| {
                matches!(ctx.z(w), 7 | 8 | 16)
                    && ring_single
                        .iter()
                        .any(|&t| t != w && matches!(ctx.z(t), 6 | 7 | 8 | 16))
            })
        }
        Link::L14 => {
            if atom.atomic_number != 6 || !atom.aromatic {
                return false;
            }
            let arom: Vec<usize> = ctx
                .around(u)
                .filter(|&(bi, w)| {
                    mol.bonds[bi].order == BondOrder::Aromatic
                        && matches!(ctx.z(w), 6 | 7 | 8 | 16)
                })
                .map(|(_, w)| w)
                .collect();
            arom.iter().any(|&w| {
                matches!(ctx.z(w), 7 | 8 | 16) && arom.iter().any(|&t| t != w)
            })
        }
        Link::L15 => {
            atom.atomic_number == 6
                && !atom.aromatic
                && atom.in_ring
                && ctx
                    .around(u)
                    .filter(|&(bi, w)| {
                        mol.bonds[bi].in_ring
                            && mol.bonds[bi].order == BondOrder::Single
                            && ctx.z(w) == 6
                            && !ctx.aromatic(w)
                    })
                    .count()
                    >= 2
        }
        Link::L16 => {
            atom.atomic_number == 6
                && atom.aromatic
                && ctx
                    .around(u)
                    .filter(|&(bi, w)| {
                        mol.bonds[bi].order == BondOrder::Aromatic
                            && ctx.z(w) == 6
                            && ctx.aromatic(w)
                    })
                    .count()
                    >= 2
        }
    }
}

/// Ring nitrogen bonded in-ring to a ring carbonyl carbon.
fn is_lactam_nitrogen(ctx: &Ctx, u: usize) -> bool {
    ctx.mol.atoms[u].in_ring
        && ctx.around(u).any(|(bi, w)| {
            ctx.mol.bonds[bi].in_ring
                && ctx.z(w) == 6
                && ctx.mol.atoms[w].in_ring
                && ctx.has_double_to_oxygen(w)
        })
}

/// Bond indices the rule table cleaves in `mol`.
pub fn find_cleavable_bonds(mol: &MolGraph, table: &RuleTable) -> Vec<usize> {
    let ctx = Ctx::new(mol);
    let mut cleaved = Vec::new();
    for (bi, bond) in mol.bonds.iter().enumerate() {
        if bond.order != BondOrder::Single || bond.in_ring {
            continue;
        }
        let (a, b) = (bond.a, bond.b);
        let hit = table.pairs.iter().any(|&(x, y)| {
            (matches(&ctx, x, a, b) && matches(&ctx, y, b, a))
                || (matches(&ctx, y, a, b) && matches(&ctx, x, b, a))
        });
        if hit {
            cleaved.push(bi);
        }
    }
    cleaved
}

/// Partitions a molecule with the default rule table.
pub fn brics_partition(mol: &MolGraph) -> FragmentMap {
    brics_partition_with(mol, default_rule_table())
}

/// Partitions a molecule: cleave every matching bond simultaneously, then
/// return the connected components. Molecules with no matching bonds come
/// back as a single fragment.
pub fn brics_partition_with(mol: &MolGraph, table: &RuleTable) -> FragmentMap {
    let cleaved = find_cleavable_bonds(mol, table);
    let cleaved_set: std::collections::HashSet<usize> = cleaved.iter().copied().collect();
    let n = mol.n_atoms();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (bi, bond) in mol.bonds.iter().enumerate() {
        if !cleaved_set.contains(&bi) {
            adj[bond.a].push(bond.b);
            adj[bond.b].push(bond.a);
        }
    }
    let mut assignment = vec![usize::MAX; n];
    let mut n_fragments = 0;
    for start in 0..n {
        if assignment[start] != usize::MAX {
            continue;
        }
        let id = n_fragments;
        n_fragments += 1;
        let mut stack = vec![start];
        assignment[start] = id;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if assignment[u] == usize::MAX {
                    assignment[u] = id;
                    stack.push(u);
                }
            }
        }
    }
    FragmentMap {
        assignment,
        n_fragments,
        cleaved_bonds: cleaved,
    }
}

/// Extracts one fragment as a standalone graph (atoms renumbered by
/// ascending original index). Used by the idempotence checks.
pub fn extract_fragment(mol: &MolGraph, fm: &FragmentMap, fragment: usize) -> MolGraph {
    let atoms: Vec<usize> = (0..mol.n_atoms())
        .filter(|&v| fm.assignment[v] == fragment)
        .collect();
    let index: HashMap<usize, usize> = atoms.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let mut sub_atoms: Vec<crate::chem::Atom> = atoms.iter().map(|&v| mol.atoms[v].clone()).collect();
    let mut sub_bonds = Vec::new();
    for bond in &mol.bonds {
        if let (Some(&na), Some(&nb)) = (index.get(&bond.a), index.get(&bond.b)) {
            let mut b = bond.clone();
            b.a = na;
            b.b = nb;
            sub_bonds.push(b);
        }
    }
    // Degrees change at the cut sites; rings are re-perceived.
    for a in &mut sub_atoms {
        a.degree = 0;
        a.in_ring = false;
    }
    for b in &mut sub_bonds {
        b.in_ring = false;
    }
    for bi in 0..sub_bonds.len() {
        let (a, b) = (sub_bonds[bi].a, sub_bonds[bi].b);
        sub_atoms[a].degree += 1;
        sub_atoms[b].degree += 1;
    }
    let edge_list: Vec<(usize, usize)> = sub_bonds.iter().map(|b| (b.a, b.b)).collect();
    let rings = crate::chem::rings::perceive_rings(sub_atoms.len(), &edge_list);
    for ring in &rings {
        for &bi in &ring.bonds {
            sub_bonds[bi].in_ring = true;
        }
        for &ai in &ring.atoms {
            sub_atoms[ai].in_ring = true;
        }
    }
    MolGraph {
        atoms: sub_atoms,
        bonds: sub_bonds,
        rings: rings.into_iter().map(|r| r.atoms).collect(),
        source_smiles: String::new(),
    }
}
