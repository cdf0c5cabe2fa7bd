//! Integer featurization of molecular graphs for the encoder.
//!
//! Each feature maps to a stable code in `1..vocab`; code 0 is the reserved
//! mask code of every feature. The original set carries (atomic, chirality)
//! node features and (bond_type, bond_dir) edge features; the extended set
//! adds (degree, charge, hybridization, aromatic, hydrogen) and (stereo).

use super::graph::{BondDir, BondOrder, BondStereo, Chirality, Hybridization, MolGraph};
use thiserror::Error;

/// Reserved mask code shared by every feature vocabulary.
pub const MASK_CODE: u16 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureSet {
    Original,
    Extended,
}

impl FeatureSet {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Original => "original",
            FeatureSet::Extended => "extended",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "original" => Some(FeatureSet::Original),
            "extended" => Some(FeatureSet::Extended),
            _ => None,
        }
    }

    /// (name, vocabulary size) of each node feature, mask code included.
    pub fn node_features(self) -> &'static [(&'static str, u16)] {
        match self {
            FeatureSet::Original => &[("atomic", 120), ("chirality", 5)],
            FeatureSet::Extended => &[
                ("atomic", 120),
                ("chirality", 5),
                ("degree", 12),
                ("charge", 12),
                ("hybridization", 7),
                ("aromatic", 3),
                ("hydrogen", 7),
            ],
        }
    }

    /// (name, vocabulary size) of each edge feature, mask code included.
    pub fn edge_features(self) -> &'static [(&'static str, u16)] {
        match self {
            FeatureSet::Original => &[("bond_type", 5), ("bond_dir", 4)],
            FeatureSet::Extended => &[("bond_type", 5), ("bond_dir", 4), ("stereo", 7)],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeaturizeError {
    #[error("feature {feature} value {value} outside its declared range")]
    FeatureOutOfRange { feature: &'static str, value: i64 },
}

/// One directed arc of the featurized graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub src: usize,
    pub dst: usize,
    /// Index of the undirected bond this arc came from.
    pub bond: usize,
}

/// Integer-coded graph ready for embedding lookup. Each undirected bond
/// expands to two directed arcs that share edge codes (bond direction codes
/// flip with arc orientation).
#[derive(Clone, Debug)]
pub struct FeaturizedGraph {
    pub n_atoms: usize,
    pub feature_set: FeatureSet,
    /// `n_atoms x node_features` codes, row-major.
    pub node_codes: Vec<u16>,
    pub arcs: Vec<Arc>,
    /// `arcs.len() x edge_features` codes, row-major.
    pub edge_codes: Vec<u16>,
    pub masked: Vec<bool>,
}

impl FeaturizedGraph {
    pub fn n_node_features(&self) -> usize {
        self.feature_set.node_features().len()
    }

    pub fn n_edge_features(&self) -> usize {
        self.feature_set.edge_features().len()
    }

    pub fn node_row(&self, v: usize) -> &[u16] {
        let w = self.n_node_features();
        &self.node_codes[v * w..(v + 1) * w]
    }

    pub fn edge_row(&self, arc: usize) -> &[u16] {
        let w = self.n_edge_features();
        &self.edge_codes[arc * w..(arc + 1) * w]
    }
}

fn chirality_code(c: Chirality) -> u16 {
    match c {
        Chirality::Unspecified => 1,
        Chirality::Cw => 2,
        Chirality::Ccw => 3,
        Chirality::Other => 4,
    }
}

fn hybridization_code(h: Hybridization) -> u16 {
    match h {
        Hybridization::Sp => 1,
        Hybridization::Sp2 => 2,
        Hybridization::Sp3 => 3,
        Hybridization::Sp3d => 4,
        Hybridization::Sp3d2 => 5,
        Hybridization::Other => 6,
    }
}

fn bond_type_code(o: BondOrder) -> u16 {
    match o {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

fn bond_dir_code(d: BondDir) -> u16 {
    match d {
        BondDir::None => 1,
        BondDir::EndUpright => 2,
        BondDir::EndDownright => 3,
    }
}

fn stereo_code(s: BondStereo) -> u16 {
    match s {
        BondStereo::None => 1,
        BondStereo::Any => 2,
        BondStereo::Z => 3,
        BondStereo::E => 4,
        BondStereo::Cis => 5,
        BondStereo::Trans => 6,
    }
}

/// Encodes a molecule under the given feature set.
pub fn featurize(mol: &MolGraph, feature_set: FeatureSet) -> Result<FeaturizedGraph, FeaturizeError> {
    let nf = feature_set.node_features().len();
    let mut node_codes = Vec::with_capacity(mol.n_atoms() * nf);
    for atom in &mol.atoms {
        // Shared ranges from the feature table.
        if !(1..=119).contains(&(atom.atomic_number as u16)) {
            return Err(FeaturizeError::FeatureOutOfRange {
                feature: "atomic",
                value: atom.atomic_number as i64,
            });
        }
        node_codes.push(atom.atomic_number as u16);
        node_codes.push(chirality_code(atom.chirality));
        if feature_set == FeatureSet::Extended {
            if atom.degree > 10 {
                return Err(FeaturizeError::FeatureOutOfRange {
                    feature: "degree",
                    value: atom.degree as i64,
                });
            }
            node_codes.push(atom.degree as u16 + 1);
            if !(-5..=5).contains(&atom.formal_charge) {
                return Err(FeaturizeError::FeatureOutOfRange {
                    feature: "charge",
                    value: atom.formal_charge as i64,
                });
            }
            node_codes.push((atom.formal_charge as i16 + 6) as u16);
            node_codes.push(hybridization_code(atom.hybridization));
            node_codes.push(if atom.aromatic { 2 } else { 1 });
            if atom.total_h() > 5 {
                return Err(FeaturizeError::FeatureOutOfRange {
                    feature: "hydrogen",
                    value: atom.total_h() as i64,
                });
            }
            node_codes.push(atom.total_h() as u16 + 1);
        }
    }

    let mut arcs = Vec::with_capacity(mol.n_bonds() * 2);
    let mut edge_codes = Vec::with_capacity(mol.n_bonds() * 2 * feature_set.edge_features().len());
    for (bi, bond) in mol.bonds.iter().enumerate() {
        for &(src, dst, dir) in &[
            (bond.a, bond.b, bond.direction),
            (bond.b, bond.a, bond.direction.flipped()),
        ] {
            arcs.push(Arc { src, dst, bond: bi });
            edge_codes.push(bond_type_code(bond.order));
            edge_codes.push(bond_dir_code(dir));
            if feature_set == FeatureSet::Extended {
                edge_codes.push(stereo_code(bond.stereo));
            }
        }
    }

    Ok(FeaturizedGraph {
        n_atoms: mol.n_atoms(),
        feature_set,
        node_codes,
        arcs,
        edge_codes,
        masked: vec![false; mol.n_atoms()],
    })
}
