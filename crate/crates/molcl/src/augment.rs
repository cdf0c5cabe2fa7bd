//! Stochastic graph augmentations: 25% atom masking and 25% bond deletion,
//! the two transformations that produce contrastive views.

use crate::chem::{FeaturizedGraph, MolGraph, MASK_CODE};
use crate::util::derive_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Fraction of atoms masked and bonds deleted per view.
pub const MASK_RATE: f64 = 0.25;
pub const DELETE_RATE: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AugmentError {
    #[error("augmentation index {index} out of range ({what})")]
    IndexOutOfRange { what: &'static str, index: usize },
}

/// A sampled augmentation: which atoms to mask and which bonds to delete.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugSpec {
    pub masked_atoms: Vec<usize>,
    pub deleted_bonds: Vec<usize>,
    pub seed: u64,
}

impl AugSpec {
    /// The identity augmentation.
    pub fn empty() -> Self {
        AugSpec {
            masked_atoms: Vec::new(),
            deleted_bonds: Vec::new(),
            seed: 0,
        }
    }
}

/// Half-up rounding of `rate * n`, the sample-count rule (1 of 4 atoms at
/// the 25% rate).
fn round_count(rate: f64, n: usize) -> usize {
    (rate * n as f64 + 0.5).floor() as usize
}

/// Samples an augmentation for `mol`: uniform without replacement,
/// reproducible from the seed.
pub fn sample_augmentation(mol: &MolGraph, seed: u64) -> AugSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_mask = round_count(MASK_RATE, mol.n_atoms());
    let n_del = round_count(DELETE_RATE, mol.n_bonds());
    let mut atoms: Vec<usize> = (0..mol.n_atoms()).collect();
    atoms.shuffle(&mut rng);
    let mut masked_atoms: Vec<usize> = atoms[..n_mask].to_vec();
    masked_atoms.sort_unstable();
    let mut bonds: Vec<usize> = (0..mol.n_bonds()).collect();
    bonds.shuffle(&mut rng);
    let mut deleted_bonds: Vec<usize> = bonds[..n_del].to_vec();
    deleted_bonds.sort_unstable();
    AugSpec {
        masked_atoms,
        deleted_bonds,
        seed,
    }
}

/// Seed for one (molecule, view) slot of a batch. The two views of a
/// molecule draw independent seeds, and the same molecule in a different
/// batch position draws different ones.
pub fn view_seed(batch_seed: u64, molecule_index: usize, view: usize) -> u64 {
    derive_seed(batch_seed, &[molecule_index as u64, view as u64])
}

/// Applies an augmentation to a featurized graph.
///
/// Masked atoms keep their position but every node feature slot becomes the
/// reserved mask code; deleted bonds drop both directed arcs. Atom count and
/// indexing never change, so fragment maps computed on the parent molecule
/// stay valid for the augmented view.
pub fn apply(fg: &FeaturizedGraph, spec: &AugSpec) -> Result<FeaturizedGraph, AugmentError> {
    let mut out = fg.clone();
    let nf = fg.n_node_features();
    for &a in &spec.masked_atoms {
        if a >= fg.n_atoms {
            return Err(AugmentError::IndexOutOfRange {
                what: "atom",
                index: a,
            });
        }
        for slot in 0..nf {
            out.node_codes[a * nf + slot] = MASK_CODE;
        }
        out.masked[a] = true;
    }
    let n_bonds = fg.arcs.len() / 2;
    let delete: std::collections::HashSet<usize> = spec.deleted_bonds.iter().copied().collect();
    for &b in &spec.deleted_bonds {
        if b >= n_bonds {
            return Err(AugmentError::IndexOutOfRange {
                what: "bond",
                index: b,
            });
        }
    }
    if !delete.is_empty() {
        let ef = fg.n_edge_features();
        let mut arcs = Vec::with_capacity(out.arcs.len());
        let mut edge_codes = Vec::with_capacity(out.edge_codes.len());
        for (ai, arc) in out.arcs.iter().enumerate() {
            if !delete.contains(&arc.bond) {
                arcs.push(*arc);
                edge_codes.extend_from_slice(&out.edge_codes[ai * ef..(ai + 1) * ef]);
            }
        }
        out.arcs = arcs;
        out.edge_codes = edge_codes;
    }
    Ok(out)
}
