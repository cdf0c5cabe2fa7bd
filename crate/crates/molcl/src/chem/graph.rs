//! Attributed molecular graph produced by the SMILES parser.

/// Tetrahedral chirality as written in SMILES (`@` / `@@`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Chirality {
    Unspecified,
    /// `@@`, clockwise.
    Cw,
    /// `@`, counterclockwise.
    Ccw,
    Other,
}

/// Heuristic hybridization class (see [`MolGraph::derive_fields`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Hybridization {
    Sp,
    Sp2,
    Sp3,
    Sp3d,
    Sp3d2,
    Other,
}

/// Covalent bond order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Valence contribution in halves, so aromatic counts as 1.5 without
    /// leaving integer arithmetic (single=2, double=4, triple=6, aromatic=3).
    pub fn valence_halves(self) -> u32 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        }
    }
}

/// Directional single-bond marker (`/` and `\`), stored relative to the
/// bond's (a, b) endpoint order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BondDir {
    None,
    /// `/` when written from a to b.
    EndUpright,
    /// `\` when written from a to b.
    EndDownright,
}

impl BondDir {
    /// The marker as seen when traversing the bond in the opposite direction.
    pub fn flipped(self) -> Self {
        match self {
            BondDir::None => BondDir::None,
            BondDir::EndUpright => BondDir::EndDownright,
            BondDir::EndDownright => BondDir::EndUpright,
        }
    }
}

/// Double-bond stereo annotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BondStereo {
    None,
    Any,
    Z,
    E,
    Cis,
    Trans,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    /// 1..=118.
    pub atomic_number: u8,
    /// -5..=+5.
    pub formal_charge: i8,
    /// Hydrogen count written in a bracket atom; `None` for organic-subset
    /// atoms, whose hydrogens are implicit.
    pub explicit_h: Option<u8>,
    pub aromatic: bool,
    pub chirality: Chirality,
    // Derived fields, populated by the parser.
    pub implicit_h: u8,
    pub degree: u8,
    pub in_ring: bool,
    pub hybridization: Hybridization,
}

impl Atom {
    /// Hydrogens bonded to this atom, explicit plus implicit.
    pub fn total_h(&self) -> u8 {
        self.explicit_h.unwrap_or(0) + self.implicit_h
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub direction: BondDir,
    pub stereo: BondStereo,
    pub in_ring: bool,
}

impl Bond {
    /// The endpoint opposite `atom`, or `None` if `atom` is not an endpoint.
    pub fn other(&self, atom: usize) -> Option<usize> {
        if self.a == atom {
            Some(self.b)
        } else if self.b == atom {
            Some(self.a)
        } else {
            None
        }
    }
}

/// A parsed molecule: atoms, undirected bonds, and an SSSR ring cover.
#[derive(Clone, Debug)]
pub struct MolGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// Smallest set of smallest rings; each entry is a sorted atom-index set.
    pub rings: Vec<Vec<usize>>,
    pub source_smiles: String,
}

impl MolGraph {
    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// Bond indices incident to each atom, in bond order.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.atoms.len()];
        for (bi, bond) in self.bonds.iter().enumerate() {
            inc[bond.a].push(bi);
            inc[bond.b].push(bi);
        }
        inc
    }

    /// Neighbor atom indices of `v`, in bond order.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.bonds
            .iter()
            .filter_map(|b| b.other(v))
            .collect::<Vec<_>>()
    }

    /// The bond joining `a` and `b`, if any.
    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.bonds
            .iter()
            .position(|bd| (bd.a == a && bd.b == b) || (bd.a == b && bd.b == a))
    }
}
