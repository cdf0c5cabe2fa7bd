//! SMILES parser for the drug-like subset this toolkit consumes.
//!
//! Supported: the organic subset (B C N O P S F Cl Br I), aromatic lowercase
//! atoms (b c n o p s), bracket atoms with isotope (parsed, discarded),
//! charge, explicit hydrogen count and tetrahedral chirality, bond symbols
//! `- = # :` plus directional `/` `\`, branches, and ring closures
//! (digits and `%nn`). Dot-disconnected inputs are rejected. Aromaticity is
//! taken from the notation, never re-perceived.

use super::graph::{Atom, Bond, BondDir, BondOrder, BondStereo, Chirality, Hybridization, MolGraph};
use super::rings::perceive_rings;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced parenthesis")]
    UnbalancedParenthesis,
    #[error("ring bond {0} opened but never closed")]
    UnclosedRingBond(u32),
    #[error("unknown atom symbol at byte {pos}: {symbol:?}")]
    UnknownAtomSymbol { pos: usize, symbol: String },
    #[error("valence violation on atom {atom}: bond valence {bond_valence} exceeds maximum {max} for element {element}")]
    ValenceViolation {
        atom: usize,
        element: u8,
        bond_valence: u8,
        max: u8,
    },
    #[error("dot-disconnected SMILES rejected (one molecule per graph)")]
    MultiFragmentInput,
    #[error("formal charge {0} outside the supported range -5..=5")]
    ChargeOutOfRange(i32),
    #[error("conflicting bond annotations on ring closure {0}")]
    RingBondMismatch(u32),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("aromatic bond between non-aromatic atoms {0} and {1}")]
    AromaticBondMismatch(usize, usize),
    #[error("aromatic atom {0} is not on a ring")]
    AromaticityOutsideRing(usize),
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

fn syntax(pos: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        pos,
        msg: msg.into(),
    }
}

/// Element symbols indexed by atomic number - 1.
const ELEMENTS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn",
    "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

pub fn atomic_number(symbol: &str) -> Option<u8> {
    ELEMENTS
        .iter()
        .position(|&s| s == symbol)
        .map(|i| (i + 1) as u8)
}

pub fn element_symbol(z: u8) -> &'static str {
    ELEMENTS[(z - 1) as usize]
}

/// Standard valence list for an element adjusted by formal charge, smallest
/// first. Empty means "no implicit hydrogens, no valence check" (metals and
/// other elements never written without brackets).
pub fn default_valences(z: u8, charge: i8) -> &'static [u8] {
    match (z, charge) {
        (1, 0) => &[1],
        (5, 0) => &[3],
        (5, -1) => &[4],
        (6, 0) => &[4],
        (6, 1) | (6, -1) => &[3],
        (7, 0) => &[3],
        (7, 1) => &[4],
        (7, -1) => &[2],
        (8, 0) => &[2],
        (8, 1) => &[3],
        (8, -1) => &[1],
        (15, 0) => &[3, 5],
        (15, 1) => &[4],
        (16, 0) => &[2, 4, 6],
        (16, 1) => &[3, 5],
        (16, -1) => &[1],
        (9, 0) | (17, 0) | (35, 0) | (53, 0) => &[1],
        (9, -1) | (17, -1) | (35, -1) | (53, -1) => &[0],
        _ => &[],
    }
}

/// Computes the implicit hydrogen count of one atom from its incident bond
/// orders following `max(0, default_valence - bond_valence - explicit_h)`.
///
/// Aromatic bonds count 1.5 each and the total is floored before the lookup.
/// Bracket atoms carry their hydrogens explicitly and always get zero. The
/// valence-violation check is skipped for aromatic atoms, whose 1.5-per-bond
/// accounting intentionally overshoots on ring heteroatoms (furan oxygen
/// sums to 3 against a maximum of 2).
pub fn assign_hydrogens(atom: &Atom, incident: &[BondOrder]) -> Result<u8, ParseError> {
    let halves: u32 = incident.iter().map(|o| o.valence_halves()).sum();
    let bond_valence = (halves / 2) as u8;
    let valences = default_valences(atom.atomic_number, atom.formal_charge);
    if valences.is_empty() {
        return Ok(0);
    }
    let max = *valences.last().unwrap();
    let explicit = atom.explicit_h.unwrap_or(0);
    if !atom.aromatic && bond_valence + explicit > max {
        return Err(ParseError::ValenceViolation {
            atom: 0,
            element: atom.atomic_number,
            bond_valence: bond_valence + explicit,
            max,
        });
    }
    if atom.explicit_h.is_some() {
        return Ok(0);
    }
    let default = valences[0];
    Ok(default.saturating_sub(bond_valence))
}

#[derive(Clone, Copy, Debug)]
struct PendingBond {
    order: Option<BondOrder>,
    dir: BondDir,
    pos: usize,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    stack: Vec<usize>,
    pending: Option<PendingBond>,
    ring_open: std::collections::HashMap<u32, (usize, Option<PendingBond>)>,
    after_atom: bool,
}

/// Parses one SMILES string into a [`MolGraph`] with all derived fields
/// (implicit hydrogens, degrees, rings, hybridization) populated.
pub fn parse_smiles(text: &str) -> Result<MolGraph, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    if !trimmed.is_ascii() {
        return Err(syntax(0, "SMILES must be ASCII"));
    }
    let mut p = Parser {
        bytes: trimmed.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        stack: Vec::new(),
        pending: None,
        ring_open: std::collections::HashMap::new(),
        after_atom: false,
    };
    p.run()?;
    p.finish(trimmed)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    self.pos += 1;
                    let Some(prev) = self.prev else {
                        return Err(syntax(self.pos - 1, "branch before any atom"));
                    };
                    if self.pending.is_some() {
                        return Err(syntax(self.pos - 1, "dangling bond before branch"));
                    }
                    self.stack.push(prev);
                    self.after_atom = false;
                }
                b')' => {
                    self.pos += 1;
                    if self.pending.is_some() {
                        return Err(syntax(self.pos - 1, "dangling bond before close paren"));
                    }
                    match self.stack.pop() {
                        Some(a) => self.prev = Some(a),
                        None => return Err(ParseError::UnbalancedParenthesis),
                    }
                    self.after_atom = false;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() {
                        return Err(syntax(self.pos, "two bond symbols in a row"));
                    }
                    if self.prev.is_none() {
                        return Err(syntax(self.pos, "bond before any atom"));
                    }
                    let (order, dir) = match c {
                        b'-' => (Some(BondOrder::Single), BondDir::None),
                        b'=' => (Some(BondOrder::Double), BondDir::None),
                        b'#' => (Some(BondOrder::Triple), BondDir::None),
                        b':' => (Some(BondOrder::Aromatic), BondDir::None),
                        b'/' => (Some(BondOrder::Single), BondDir::EndUpright),
                        _ => (Some(BondOrder::Single), BondDir::EndDownright),
                    };
                    self.pending = Some(PendingBond {
                        order,
                        dir,
                        pos: self.pos,
                    });
                    self.pos += 1;
                }
                b'.' => return Err(ParseError::MultiFragmentInput),
                b'0'..=b'9' => {
                    let d = (c - b'0') as u32;
                    self.pos += 1;
                    self.ring_closure(d)?;
                }
                b'%' => {
                    self.pos += 1;
                    let d1 = self.bump();
                    let d2 = self.bump();
                    match (d1, d2) {
                        (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                            let d = ((a - b'0') as u32) * 10 + (b - b'0') as u32;
                            self.ring_closure(d)?;
                        }
                        _ => return Err(syntax(self.pos, "% must be followed by two digits")),
                    }
                }
                b'[' => {
                    self.pos += 1;
                    let atom = self.bracket_atom()?;
                    self.push_atom(atom)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.push_atom(atom)?;
                }
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, ParseError> {
        let start = self.pos;
        let c = self.bump().unwrap();
        let (symbol, aromatic): (String, bool) = match c {
            b'C' if self.peek() == Some(b'l') => {
                self.pos += 1;
                ("Cl".into(), false)
            }
            b'B' if self.peek() == Some(b'r') => {
                self.pos += 1;
                ("Br".into(), false)
            }
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => {
                ((c as char).to_string(), false)
            }
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                ((c as char).to_ascii_uppercase().to_string(), true)
            }
            _ => {
                return Err(ParseError::UnknownAtomSymbol {
                    pos: start,
                    symbol: (c as char).to_string(),
                })
            }
        };
        let z = atomic_number(&symbol).expect("organic subset symbol");
        Ok(Atom {
            atomic_number: z,
            formal_charge: 0,
            explicit_h: None,
            aromatic,
            chirality: Chirality::Unspecified,
            implicit_h: 0,
            degree: 0,
            in_ring: false,
            hybridization: Hybridization::Other,
        })
    }

    fn bracket_atom(&mut self) -> Result<Atom, ParseError> {
        let start = self.pos;
        // Isotope number: parsed and discarded.
        while self.peek().map_or(false, |c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let sym_start = self.pos;
        let first = self
            .bump()
            .ok_or_else(|| syntax(self.pos, "unterminated bracket atom"))?;
        if !first.is_ascii_alphabetic() {
            return Err(ParseError::UnknownAtomSymbol {
                pos: sym_start,
                symbol: (first as char).to_string(),
            });
        }
        let mut symbol = (first as char).to_string();
        // Two-letter symbols are uppercase + lowercase; single lowercase is
        // an aromatic atom. A lowercase letter after a lowercase letter is
        // never part of the symbol.
        if first.is_ascii_uppercase()
            && self.peek().map_or(false, |c| c.is_ascii_lowercase())
            && atomic_number(&format!("{}{}", symbol, self.peek().unwrap() as char)).is_some()
        {
            symbol.push(self.bump().unwrap() as char);
        }
        let aromatic = first.is_ascii_lowercase();
        if aromatic && !matches!(first, b'b' | b'c' | b'n' | b'o' | b'p' | b's') {
            return Err(ParseError::UnknownAtomSymbol {
                pos: sym_start,
                symbol,
            });
        }
        let lookup = if aromatic {
            symbol.to_ascii_uppercase()
        } else {
            symbol.clone()
        };
        let z = atomic_number(&lookup).ok_or(ParseError::UnknownAtomSymbol {
            pos: sym_start,
            symbol: symbol.clone(),
        })?;

        let mut chirality = Chirality::Unspecified;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                chirality = Chirality::Cw;
            } else {
                chirality = Chirality::Ccw;
            }
        }
        let mut explicit_h: u8 = 0;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            let mut count = 1u8;
            if self.peek().map_or(false, |c| c.is_ascii_digit()) {
                count = self.bump().unwrap() - b'0';
            }
            explicit_h = count;
        }
        let mut charge: i32 = 0;
        if matches!(self.peek(), Some(b'+') | Some(b'-')) {
            let sign: i32 = if self.bump().unwrap() == b'+' { 1 } else { -1 };
            let mut magnitude = 1i32;
            if self.peek().map_or(false, |c| c.is_ascii_digit()) {
                magnitude = 0;
                while self.peek().map_or(false, |c| c.is_ascii_digit()) {
                    magnitude = magnitude * 10 + (self.bump().unwrap() - b'0') as i32;
                }
            } else {
                // Repeated ++ / -- notation.
                while self.peek() == Some(if sign > 0 { b'+' } else { b'-' }) {
                    self.pos += 1;
                    magnitude += 1;
                }
            }
            charge = sign * magnitude;
        }
        if self.bump() != Some(b']') {
            return Err(syntax(start, "unterminated bracket atom"));
        }
        if !(-5..=5).contains(&charge) {
            return Err(ParseError::ChargeOutOfRange(charge));
        }
        Ok(Atom {
            atomic_number: z,
            formal_charge: charge as i8,
            explicit_h: Some(explicit_h),
            aromatic,
            chirality,
            implicit_h: 0,
            degree: 0,
            in_ring: false,
            hybridization: Hybridization::Other,
        })
    }

    fn push_atom(&mut self, atom: Atom) -> Result<(), ParseError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let pending = self.pending.take();
            self.add_bond(prev, idx, pending)?;
        } else if let Some(p) = self.pending.take() {
            return Err(syntax(p.pos, "bond before any atom"));
        }
        self.prev = Some(idx);
        self.after_atom = true;
        Ok(())
    }

    fn ring_closure(&mut self, digit: u32) -> Result<(), ParseError> {
        // Ring digits chain after an atom or its bond symbol (C12, C=1);
        // they are not legal right after parentheses.
        if !self.after_atom {
            return Err(syntax(self.pos, "ring closure not attached to an atom"));
        }
        let Some(cur) = self.prev else {
            return Err(syntax(self.pos, "ring closure before any atom"));
        };
        let pending = self.pending.take();
        match self.ring_open.remove(&digit) {
            None => {
                self.ring_open.insert(digit, (cur, pending));
            }
            Some((open_atom, open_pending)) => {
                if open_atom == cur {
                    return Err(ParseError::RingBondMismatch(digit));
                }
                let merged = merge_ring_bonds(open_pending, pending, digit)?;
                self.add_bond(open_atom, cur, merged)?;
            }
        }
        Ok(())
    }

    fn add_bond(
        &mut self,
        a: usize,
        b: usize,
        pending: Option<PendingBond>,
    ) -> Result<(), ParseError> {
        if self
            .bonds
            .iter()
            .any(|bd| (bd.a == a && bd.b == b) || (bd.a == b && bd.b == a))
        {
            return Err(ParseError::DuplicateBond(a, b));
        }
        let both_aromatic = self.atoms[a].aromatic && self.atoms[b].aromatic;
        let (order, dir) = match pending {
            Some(p) => (p.order.unwrap(), p.dir),
            None => (
                if both_aromatic {
                    BondOrder::Aromatic
                } else {
                    BondOrder::Single
                },
                BondDir::None,
            ),
        };
        if order == BondOrder::Aromatic && !both_aromatic {
            return Err(ParseError::AromaticBondMismatch(a, b));
        }
        self.bonds.push(Bond {
            a,
            b,
            order,
            direction: dir,
            stereo: BondStereo::None,
            in_ring: false,
        });
        Ok(())
    }

    fn finish(mut self, source: &str) -> Result<MolGraph, ParseError> {
        if !self.stack.is_empty() {
            return Err(ParseError::UnbalancedParenthesis);
        }
        if let Some(p) = self.pending {
            return Err(syntax(p.pos, "dangling bond at end of input"));
        }
        if let Some((&digit, _)) = self.ring_open.iter().min_by_key(|(d, _)| **d) {
            return Err(ParseError::UnclosedRingBond(digit));
        }
        if self.atoms.is_empty() {
            return Err(ParseError::EmptyInput);
        }

        // Degrees.
        for bond in &self.bonds {
            self.atoms[bond.a].degree += 1;
            self.atoms[bond.b].degree += 1;
        }

        // Connectivity: the grammar already rejects '.', but check anyway.
        if !is_connected(self.atoms.len(), &self.bonds) {
            return Err(ParseError::MultiFragmentInput);
        }

        // Ring perception and ring flags.
        let edge_list: Vec<(usize, usize)> = self.bonds.iter().map(|b| (b.a, b.b)).collect();
        let rings = perceive_rings(self.atoms.len(), &edge_list);
        for ring in &rings {
            for &bi in &ring.bonds {
                self.bonds[bi].in_ring = true;
            }
            for &ai in &ring.atoms {
                self.atoms[ai].in_ring = true;
            }
        }

        // Aromatic atoms and bonds must sit on rings; aromaticity comes from
        // the notation, so this is the only sanity check applied.
        for bond in &self.bonds {
            if bond.order == BondOrder::Aromatic && !bond.in_ring {
                return Err(ParseError::AromaticityOutsideRing(bond.a));
            }
        }
        for (ai, atom) in self.atoms.iter().enumerate() {
            if atom.aromatic && !atom.in_ring {
                return Err(ParseError::AromaticityOutsideRing(ai));
            }
        }

        // Implicit hydrogens.
        let incidence: Vec<Vec<usize>> = {
            let mut inc = vec![Vec::new(); self.atoms.len()];
            for (bi, bond) in self.bonds.iter().enumerate() {
                inc[bond.a].push(bi);
                inc[bond.b].push(bi);
            }
            inc
        };
        for (ai, atom) in self.atoms.iter_mut().enumerate() {
            let orders: Vec<BondOrder> = incidence[ai]
                .iter()
                .map(|&bi| self.bonds[bi].order)
                .collect();
            atom.implicit_h = assign_hydrogens(atom, &orders).map_err(|e| match e {
                ParseError::ValenceViolation {
                    element,
                    bond_valence,
                    max,
                    ..
                } => ParseError::ValenceViolation {
                    atom: ai,
                    element,
                    bond_valence,
                    max,
                },
                other => other,
            })?;
        }

        // Hybridization heuristic: hypervalent P/S by neighbor count, then
        // triple or two doubles -> sp, any double or aromatic -> sp2,
        // everything else sp3. Elements without valence rules stay `Other`.
        for ai in 0..self.atoms.len() {
            let atom = &self.atoms[ai];
            let doubles = incidence[ai]
                .iter()
                .filter(|&&bi| self.bonds[bi].order == BondOrder::Double)
                .count();
            let triples = incidence[ai]
                .iter()
                .filter(|&&bi| self.bonds[bi].order == BondOrder::Triple)
                .count();
            let neighbors = atom.degree as usize + atom.total_h() as usize;
            let hyb = if default_valences(atom.atomic_number, atom.formal_charge).is_empty()
                && atom.explicit_h.is_none()
            {
                Hybridization::Other
            } else if matches!(atom.atomic_number, 15 | 16) && neighbors == 5 {
                Hybridization::Sp3d
            } else if matches!(atom.atomic_number, 15 | 16) && neighbors >= 6 {
                Hybridization::Sp3d2
            } else if triples >= 1 || doubles >= 2 {
                Hybridization::Sp
            } else if doubles == 1 || atom.aromatic {
                Hybridization::Sp2
            } else {
                Hybridization::Sp3
            };
            self.atoms[ai].hybridization = hyb;
        }

        Ok(MolGraph {
            atoms: self.atoms,
            bonds: self.bonds,
            rings: rings.into_iter().map(|r| r.atoms).collect(),
            source_smiles: source.to_string(),
        })
    }
}

fn merge_ring_bonds(
    open: Option<PendingBond>,
    close: Option<PendingBond>,
    digit: u32,
) -> Result<Option<PendingBond>, ParseError> {
    match (open, close) {
        (None, None) => Ok(None),
        (Some(p), None) => Ok(Some(p)),
        // The closing annotation is written from the far side, so its
        // direction flips when stored on the (open, close) bond.
        (None, Some(p)) => Ok(Some(PendingBond {
            order: p.order,
            dir: p.dir.flipped(),
            pos: p.pos,
        })),
        (Some(o), Some(c)) => {
            let dir_ok = o.dir == c.dir.flipped() || o.dir == BondDir::None || c.dir == BondDir::None;
            if o.order != c.order || !dir_ok {
                return Err(ParseError::RingBondMismatch(digit));
            }
            let dir = if o.dir != BondDir::None {
                o.dir
            } else {
                c.dir.flipped()
            };
            Ok(Some(PendingBond {
                order: o.order,
                dir,
                pos: o.pos,
            }))
        }
    }
}

fn is_connected(n: usize, bonds: &[Bond]) -> bool {
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for b in bonds {
        adj[b.a].push(b.b);
        adj[b.b].push(b.a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}
