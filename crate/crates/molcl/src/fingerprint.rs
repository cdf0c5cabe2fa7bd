//! Morgan-style extended-connectivity fingerprints, Tanimoto similarity,
//! and the negative-pair weights built from them.
//!
//! Identifier hashing uses the FNV-1a/splitmix pipeline from [`crate::util`]
//! with fixed constants, so fingerprints are identical across runs and
//! platforms.

use crate::chem::{BondOrder, MolGraph};
use crate::util::StableHasher;
use thiserror::Error;

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_NBITS: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FingerprintError {
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("{0}")]
    DomainError(String),
}

/// Fixed-width binary fingerprint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    bits: Vec<u64>,
    nbits: usize,
    radius: u32,
}

impl Fingerprint {
    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn popcount(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    /// Indices of set bits, ascending.
    pub fn on_bits(&self) -> Vec<usize> {
        (0..self.nbits).filter(|&i| self.get(i)).collect()
    }

    /// Lowercase hex, two digits per byte; bit `i` lives in byte `i / 8`,
    /// position `i % 8` (LSB first).
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.nbits / 4);
        for byte_idx in 0..self.nbits / 8 {
            let byte = (self.bits[byte_idx / 8] >> (8 * (byte_idx % 8))) as u8;
            s.push_str(&format!("{byte:02x}"));
        }
        s
    }
}

/// Bond-order code used inside identifier hashing: single=1, double=2,
/// triple=3, aromatic=4.
fn bond_code(order: BondOrder) -> u64 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Computes the Morgan/ECFP fingerprint of a molecule.
///
/// The initial invariant of an atom hashes (atomic number, formal charge,
/// degree, total hydrogen count, in-ring flag, aromatic flag). Iteration
/// `r` hashes the atom's previous identifier together with the sorted list
/// of (bond code, neighbor identifier) pairs. Every identifier from every
/// iteration (including round 0) folds modulo `nbits` and sets one bit.
pub fn ecfp(mol: &MolGraph, radius: u32, nbits: usize) -> Result<Fingerprint, FingerprintError> {
    if !nbits.is_power_of_two() || nbits < 64 {
        return Err(FingerprintError::DomainError(format!(
            "nbits must be a power of two >= 64, got {nbits}"
        )));
    }
    let mut fp = Fingerprint {
        bits: vec![0u64; nbits / 64],
        nbits,
        radius,
    };

    let mut ids: Vec<u64> = mol
        .atoms
        .iter()
        .map(|a| {
            let mut h = StableHasher::new();
            h.write_u64(a.atomic_number as u64)
                .write_i64(a.formal_charge as i64)
                .write_u64(a.degree as u64)
                .write_u64(a.total_h() as u64)
                .write_bool(a.in_ring)
                .write_bool(a.aromatic);
            h.finish()
        })
        .collect();
    for &id in &ids {
        fp.set((id % nbits as u64) as usize);
    }

    let incidence = mol.incidence();
    for round in 1..=radius {
        let mut next = Vec::with_capacity(ids.len());
        for (ai, _) in mol.atoms.iter().enumerate() {
            let mut nbrs: Vec<(u64, u64)> = incidence[ai]
                .iter()
                .map(|&bi| {
                    let bond = &mol.bonds[bi];
                    (bond_code(bond.order), ids[bond.other(ai).unwrap()])
                })
                .collect();
            nbrs.sort_unstable();
            let mut h = StableHasher::new();
            h.write_u64(round as u64).write_u64(ids[ai]);
            for (code, nid) in nbrs {
                h.write_u64(code).write_u64(nid);
            }
            next.push(h.finish());
        }
        ids = next;
        for &id in &ids {
            fp.set((id % nbits as u64) as usize);
        }
    }
    Ok(fp)
}

/// Tanimoto similarity `|a AND b| / |a OR b|`. Two all-zero fingerprints
/// compare as 1.0.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.nbits != b.nbits {
        return Err(FingerprintError::WidthMismatch(a.nbits, b.nbits));
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for (x, y) in a.bits.iter().zip(b.bits.iter()) {
        inter += (x & y).count_ones() as u64;
        union += (x | y).count_ones() as u64;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// The negative-pair weight `1 - lambda1 * sim`, always in [1-lambda1, 1].
pub fn neg_weight(sim: f64, lambda1: f64) -> Result<f64, FingerprintError> {
    if !(0.0..=1.0).contains(&sim) {
        return Err(FingerprintError::DomainError(format!(
            "similarity {sim} outside [0, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&lambda1) {
        return Err(FingerprintError::DomainError(format!(
            "lambda1 {lambda1} outside [0, 1]"
        )));
    }
    Ok(1.0 - lambda1 * sim)
}

/// Pairwise negative weights for a contrastive batch of `2N` augmented
/// views over `N` source molecules.
#[derive(Clone, Debug)]
pub struct NegWeightMatrix {
    /// Row-major `2N x 2N`.
    pub w: Vec<f64>,
    pub side: usize,
    pub lambda1: f64,
}

impl NegWeightMatrix {
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.w[i * self.side + k]
    }
}

/// Builds the per-view weight matrix from the un-augmented source molecules.
/// View index `i` maps to source molecule `i / 2`; fingerprints are computed
/// once per molecule, not per view.
pub fn build_weight_matrix(
    sources: &[&MolGraph],
    lambda1: f64,
    radius: u32,
    nbits: usize,
) -> Result<NegWeightMatrix, FingerprintError> {
    if sources.is_empty() {
        return Err(FingerprintError::DomainError("empty batch".into()));
    }
    let fps: Vec<Fingerprint> = sources
        .iter()
        .map(|m| ecfp(m, radius, nbits))
        .collect::<Result<_, _>>()?;
    build_weight_matrix_from_fps(&fps, lambda1)
}

/// Same as [`build_weight_matrix`] but over precomputed fingerprints (one
/// per source molecule), as the training cache uses.
pub fn build_weight_matrix_from_fps(
    fps: &[Fingerprint],
    lambda1: f64,
) -> Result<NegWeightMatrix, FingerprintError> {
    let n = fps.len();
    if n == 0 {
        return Err(FingerprintError::DomainError("empty batch".into()));
    }
    let side = 2 * n;
    // Molecule-level similarities first, then expanded to the 2N views.
    let mut sim = vec![0.0f64; n * n];
    for i in 0..n {
        for k in i..n {
            let s = if i == k {
                1.0
            } else {
                tanimoto(&fps[i], &fps[k])?
            };
            sim[i * n + k] = s;
            sim[k * n + i] = s;
        }
    }
    let mut w = vec![0.0f64; side * side];
    for i in 0..side {
        for k in 0..side {
            w[i * side + k] = neg_weight(sim[(i / 2) * n + (k / 2)], lambda1)?;
        }
    }
    Ok(NegWeightMatrix { w, side, lambda1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn benzene_radius0_single_invariant() {
        let m = parse_smiles("c1ccccc1").unwrap();
        let fp = ecfp(&m, 0, 2048).unwrap();
        assert_eq!(fp.popcount(), 1);
    }

    #[test]
    fn ethanol_radius0_three_invariants() {
        // CH3, CH2, OH environments are pairwise distinct; three bits barring
        // fold collisions, which do not occur at 2048 bits for these ids.
        let m = parse_smiles("CCO").unwrap();
        let fp = ecfp(&m, 0, 2048).unwrap();
        assert_eq!(fp.popcount(), 3);
    }

    #[test]
    fn ecfp_deterministic() {
        let m = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let a = ecfp(&m, 2, 2048).unwrap();
        let b = ecfp(&m, 2, 2048).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ecfp_invariant_under_aliasing() {
        let aliases = [
            ("CCO", "OCC"),
            ("CC(C)C", "C(C)(C)C"),
            ("Oc1ccccc1", "c1ccc(O)cc1"),
            ("CCOC(=O)c1ccccc1", "c1ccccc1C(=O)OCC"),
            ("CN1CCCC1", "C1CCN(C)C1"),
        ];
        for (x, y) in aliases {
            let a = ecfp(&parse_smiles(x).unwrap(), 2, 2048).unwrap();
            let b = ecfp(&parse_smiles(y).unwrap(), 2, 2048).unwrap();
            assert_eq!(a, b, "{x} vs {y}");
        }
    }

    #[test]
    fn tanimoto_basics() {
        let m1 = parse_smiles("CCO").unwrap();
        let m2 = parse_smiles("c1ccccc1").unwrap();
        let a = ecfp(&m1, 2, 2048).unwrap();
        let b = ecfp(&m2, 2, 2048).unwrap();
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let s = tanimoto(&a, &b).unwrap();
        assert!((0.0..=1.0).contains(&s));
        let narrow = ecfp(&m1, 2, 64).unwrap();
        assert!(matches!(
            tanimoto(&a, &narrow).unwrap_err(),
            FingerprintError::WidthMismatch(2048, 64)
        ));
    }

    #[test]
    fn tanimoto_hand_sets() {
        // bits {1,2,3} vs {2,3,4}: intersection 2, union 4.
        let mut a = Fingerprint {
            bits: vec![0; 1],
            nbits: 64,
            radius: 0,
        };
        let mut b = a.clone();
        for i in [1, 2, 3] {
            a.set(i);
        }
        for i in [2, 3, 4] {
            b.set(i);
        }
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
        let z = Fingerprint {
            bits: vec![0; 1],
            nbits: 64,
            radius: 0,
        };
        assert_eq!(tanimoto(&z, &z).unwrap(), 1.0);
        assert_eq!(tanimoto(&a, &z).unwrap(), 0.0);
    }

    #[test]
    fn neg_weight_arithmetic() {
        assert_eq!(neg_weight(1.0, 0.5).unwrap(), 0.5);
        assert_eq!(neg_weight(0.0, 0.9).unwrap(), 1.0);
        assert_eq!(neg_weight(0.7, 0.0).unwrap(), 1.0);
        assert!(neg_weight(1.5, 0.5).is_err());
        assert!(neg_weight(0.5, -0.1).is_err());
    }

    #[test]
    fn weight_matrix_views_of_same_molecule() {
        let m1 = parse_smiles("CCO").unwrap();
        let m2 = parse_smiles("c1ccccc1").unwrap();
        let w = build_weight_matrix(&[&m1, &m2], 0.4, 2, 2048).unwrap();
        assert_eq!(w.side, 4);
        // Views 0 and 1 come from molecule 0.
        assert!((w.get(0, 1) - 0.6).abs() < 1e-15);
        assert!((w.get(2, 3) - 0.6).abs() < 1e-15);
        // Symmetry and bounds.
        for i in 0..4 {
            for k in 0..4 {
                assert_eq!(w.get(i, k), w.get(k, i));
                assert!(w.get(i, k) >= 0.6 - 1e-15 && w.get(i, k) <= 1.0);
            }
        }
    }

    #[test]
    fn toluene_closer_to_xylene_than_cyclohexane() {
        // Shared aromatic substructure wins over the saturated ring.
        let toluene = parse_smiles("Cc1ccccc1").unwrap();
        let xylene = parse_smiles("Cc1ccccc1C").unwrap();
        let cyclohexane = parse_smiles("C1CCCCC1").unwrap();
        let ft = ecfp(&toluene, 2, 2048).unwrap();
        let fx = ecfp(&xylene, 2, 2048).unwrap();
        let fc = ecfp(&cyclohexane, 2, 2048).unwrap();
        let s_tx = tanimoto(&ft, &fx).unwrap();
        let s_tc = tanimoto(&ft, &fc).unwrap();
        assert!(
            s_tx > s_tc,
            "expected tanimoto(toluene, o-xylene) = {s_tx} > tanimoto(toluene, cyclohexane) = {s_tc}"
        );
    }

    #[test]
    fn monotone_fold() {
        let m = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let mut prev = 0;
        for nbits in [64, 128, 256, 512, 1024, 2048, 4096] {
            let fp = ecfp(&m, 2, nbits).unwrap();
            assert!(fp.popcount() >= prev, "popcount dropped at {nbits}");
            prev = fp.popcount();
        }
    }

    #[test]
    fn hex_export_stable() {
        let m = parse_smiles("CCO").unwrap();
        let fp = ecfp(&m, 0, 64).unwrap();
        let h = fp.to_hex();
        assert_eq!(h.len(), 16);
        assert_eq!(h, ecfp(&m, 0, 64).unwrap().to_hex());
        // Exactly three set bits somewhere in the word.
        let word = u64::from_str_radix(
            &h.as_bytes()
                .chunks(2)
                .rev()
                .map(|c| std::str::from_utf8(c).unwrap())
                .collect::<String>(),
            16,
        )
        .unwrap();
        assert_eq!(word.count_ones(), 3);
    }
}
