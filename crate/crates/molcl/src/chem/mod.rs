//! SMILES parsing, molecular graphs, and featurization.

pub mod featurize;
pub mod graph;
pub mod rings;
pub mod smiles;
pub mod write;

pub use featurize::{featurize, Arc, FeatureSet, FeaturizeError, FeaturizedGraph, MASK_CODE};
pub use graph::{Atom, Bond, BondDir, BondOrder, BondStereo, Chirality, Hybridization, MolGraph};
pub use smiles::{assign_hydrogens, parse_smiles, ParseError};
pub use write::write_smiles;

/// Reads a corpus file: one SMILES per line, `#` comments and blank lines
/// skipped. Returns (line number, SMILES) pairs; line numbers are 1-based.
pub fn read_corpus_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                None
            } else {
                Some((i + 1, t))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol_structure() {
        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.n_atoms(), 3);
        assert_eq!(m.n_bonds(), 2);
        let z: Vec<u8> = m.atoms.iter().map(|a| a.atomic_number).collect();
        assert_eq!(z, vec![6, 6, 8]);
        assert!(m.bonds.iter().all(|b| b.order == BondOrder::Single));
        let h: Vec<u8> = m.atoms.iter().map(|a| a.implicit_h).collect();
        assert_eq!(h, vec![3, 2, 1]);
        assert!(m.rings.is_empty());
    }

    #[test]
    fn benzene_structure() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(m.n_atoms(), 6);
        assert_eq!(m.n_bonds(), 6);
        assert!(m.atoms.iter().all(|a| a.aromatic && a.atomic_number == 6));
        assert!(m.bonds.iter().all(|b| b.order == BondOrder::Aromatic));
        assert_eq!(m.rings.len(), 1);
        assert_eq!(m.rings[0].len(), 6);
        assert!(m.atoms.iter().all(|a| a.implicit_h == 1));
        assert!(m.atoms.iter().all(|a| a.in_ring));
    }

    #[test]
    fn ammonium_bracket_atom() {
        let m = parse_smiles("[NH4+]").unwrap();
        assert_eq!(m.n_atoms(), 1);
        assert_eq!(m.n_bonds(), 0);
        let a = &m.atoms[0];
        assert_eq!(a.atomic_number, 7);
        assert_eq!(a.formal_charge, 1);
        assert_eq!(a.explicit_h, Some(4));
        assert_eq!(a.implicit_h, 0);
    }

    #[test]
    fn unbalanced_paren_is_rejected() {
        assert_eq!(
            parse_smiles("C(C").unwrap_err(),
            ParseError::UnbalancedParenthesis
        );
        assert_eq!(
            parse_smiles("CC)C").unwrap_err(),
            ParseError::UnbalancedParenthesis
        );
    }

    #[test]
    fn ethyl_benzoate_counts() {
        // Hand count: CCOC(=O)c1ccccc1 has 11 atoms and 11 bonds, one
        // aromatic 6-ring.
        let m = parse_smiles("CCOC(=O)c1ccccc1").unwrap();
        assert_eq!(m.n_atoms(), 11);
        assert_eq!(m.n_bonds(), 11);
        assert_eq!(m.rings.len(), 1);
        assert_eq!(m.rings[0].len(), 6);
    }

    #[test]
    fn misc_parse_errors() {
        assert_eq!(parse_smiles("").unwrap_err(), ParseError::EmptyInput);
        assert_eq!(parse_smiles("   ").unwrap_err(), ParseError::EmptyInput);
        assert_eq!(
            parse_smiles("C1CC").unwrap_err(),
            ParseError::UnclosedRingBond(1)
        );
        assert!(matches!(
            parse_smiles("CXQ").unwrap_err(),
            ParseError::UnknownAtomSymbol { .. }
        ));
        assert_eq!(
            parse_smiles("CC.CC").unwrap_err(),
            ParseError::MultiFragmentInput
        );
        assert!(matches!(
            parse_smiles("C(C)(C)(C)(C)C").unwrap_err(),
            ParseError::ValenceViolation { .. }
        ));
        assert!(matches!(
            parse_smiles("[N+6]").unwrap_err(),
            ParseError::ChargeOutOfRange(6)
        ));
    }

    #[test]
    fn aromatic_valence_accounting() {
        // Fusion carbons of naphthalene carry three aromatic bonds
        // (floor(4.5) = 4), so no hydrogens.
        let m = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(m.rings.len(), 2);
        assert!(m.rings.iter().all(|r| r.len() == 6));
        let h_total: u32 = m.atoms.iter().map(|a| a.implicit_h as u32).sum();
        assert_eq!(h_total, 8);
        // Furan oxygen and thiophene sulfur end up with zero hydrogens.
        let furan = parse_smiles("c1ccoc1").unwrap();
        assert_eq!(furan.atoms[3].implicit_h, 0);
        let thiophene = parse_smiles("c1ccsc1").unwrap();
        assert_eq!(thiophene.atoms[3].implicit_h, 0);
    }

    #[test]
    fn charged_bracket_hydrogens() {
        let m = parse_smiles("[CH3-]").unwrap();
        assert_eq!(m.atoms[0].formal_charge, -1);
        assert_eq!(m.atoms[0].implicit_h, 0);
        assert_eq!(m.atoms[0].total_h(), 3);
    }

    #[test]
    fn directional_bonds_recorded() {
        let m = parse_smiles("C/C=C/C").unwrap();
        assert_eq!(m.bonds[0].direction, BondDir::EndUpright);
        assert_eq!(m.bonds[1].order, BondOrder::Double);
        assert_eq!(m.bonds[2].direction, BondDir::EndUpright);
    }

    #[test]
    fn ring_bond_annotations() {
        // Bond order may be written at either closure site.
        let a = parse_smiles("C=1CCCCC=1").unwrap();
        assert_eq!(a.bonds.last().unwrap().order, BondOrder::Double);
        let b = parse_smiles("C1CCCCC=1").unwrap();
        assert_eq!(b.bonds.last().unwrap().order, BondOrder::Double);
        assert_eq!(
            parse_smiles("C=1CCCCC#1").unwrap_err(),
            ParseError::RingBondMismatch(1)
        );
        // Percent notation.
        let c = parse_smiles("C%12CCCCC%12").unwrap();
        assert_eq!(c.rings.len(), 1);
    }

    #[test]
    fn duplicate_and_self_ring_bonds_rejected() {
        assert!(matches!(
            parse_smiles("C12CC12").unwrap_err(),
            ParseError::DuplicateBond(..)
        ));
        assert_eq!(
            parse_smiles("C11").unwrap_err(),
            ParseError::RingBondMismatch(1)
        );
    }

    #[test]
    fn aromatic_bond_between_aliphatic_atoms_rejected() {
        assert!(matches!(
            parse_smiles("C:C").unwrap_err(),
            ParseError::AromaticBondMismatch(..)
        ));
        assert!(matches!(
            parse_smiles("cc").unwrap_err(),
            ParseError::AromaticityOutsideRing(..)
        ));
    }

    #[test]
    fn biphenyl_single_junction() {
        let m = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        let junction = m.bond_between(5, 6).or_else(|| m.bond_between(0, 6));
        // Atom 5 closes the first ring; the junction links write-order atoms.
        let j = junction.expect("junction bond");
        assert_eq!(m.bonds[j].order, BondOrder::Single);
        assert_eq!(m.rings.len(), 2);
    }

    #[test]
    fn hybridization_heuristic() {
        let m = parse_smiles("C=C").unwrap();
        assert!(m.atoms.iter().all(|a| a.hybridization == Hybridization::Sp2));
        let m = parse_smiles("C#N").unwrap();
        assert!(m.atoms.iter().all(|a| a.hybridization == Hybridization::Sp));
        let m = parse_smiles("CC").unwrap();
        assert!(m.atoms.iter().all(|a| a.hybridization == Hybridization::Sp3));
        let m = parse_smiles("O=C=O").unwrap();
        assert_eq!(m.atoms[1].hybridization, Hybridization::Sp);
        // Hexacoordinate sulfur.
        let m = parse_smiles("FS(F)(F)(F)(F)F").unwrap();
        assert_eq!(m.atoms[1].hybridization, Hybridization::Sp3d2);
    }

    #[test]
    fn isotopes_parsed_and_discarded() {
        let m = parse_smiles("[13CH4]").unwrap();
        assert_eq!(m.atoms[0].atomic_number, 6);
        assert_eq!(m.atoms[0].total_h(), 4);
    }

    #[test]
    fn featurize_ethanol_original() {
        let m = parse_smiles("CCO").unwrap();
        let fg = featurize(&m, FeatureSet::Original).unwrap();
        assert_eq!(fg.n_atoms, 3);
        assert_eq!(fg.arcs.len(), 4);
        assert_eq!(fg.node_row(0), &[6, 1]);
        assert_eq!(fg.node_row(2), &[8, 1]);
        // All arcs single bond, no direction.
        for a in 0..fg.arcs.len() {
            assert_eq!(fg.edge_row(a), &[1, 1]);
        }
    }

    #[test]
    fn featurize_benzene_extended() {
        let m = parse_smiles("c1ccccc1").unwrap();
        let fg = featurize(&m, FeatureSet::Extended).unwrap();
        for v in 0..6 {
            let row = fg.node_row(v);
            // atomic, chirality, degree, charge, hybridization, aromatic, hydrogen
            assert_eq!(row, &[6, 1, 3, 6, 2, 2, 2]);
        }
    }

    #[test]
    fn arc_list_closed_under_reversal() {
        let m = parse_smiles("CC(=O)Oc1ccccc1C(=O)O").unwrap();
        let fg = featurize(&m, FeatureSet::Extended).unwrap();
        let set: std::collections::HashSet<(usize, usize)> =
            fg.arcs.iter().map(|a| (a.src, a.dst)).collect();
        for a in &fg.arcs {
            assert!(set.contains(&(a.dst, a.src)));
        }
        assert_eq!(fg.arcs.len(), 2 * m.n_bonds());
    }

    #[test]
    fn roundtrip_structural_equality() {
        let corpus = [
            "CCO",
            "c1ccccc1",
            "CCOC(=O)c1ccccc1",
            "CC(=O)Oc1ccccc1C(=O)O",
            "[NH4+]",
            "C/C=C/C",
            "C1CC1",
            "c1ccc2ccccc2c1",
            "CC(C)(C)c1ccc(O)cc1",
            "CN1CCC[C@H]1c1cccnc1",
            "OC(=O)CC(O)(CC(O)=O)C(O)=O",
            "c1ccc(-c2ccccc2)cc1",
            "FS(F)(F)(F)(F)F",
            "[O-]S(=O)(=O)c1ccccc1",
        ];
        for smi in corpus {
            let m = parse_smiles(smi).unwrap();
            let (emitted, order) = write::emit_with_order(&m);
            let m2 = parse_smiles(&emitted)
                .unwrap_or_else(|e| panic!("re-parse of {emitted} (from {smi}): {e}"));
            assert_eq!(m2.n_atoms(), m.n_atoms(), "{smi} -> {emitted}");
            assert_eq!(m2.n_bonds(), m.n_bonds(), "{smi} -> {emitted}");
            // order[k] = original index of k-th emitted atom.
            for (new_idx, &orig_idx) in order.iter().enumerate() {
                let a = &m.atoms[orig_idx];
                let b = &m2.atoms[new_idx];
                assert_eq!(a.atomic_number, b.atomic_number);
                assert_eq!(a.formal_charge, b.formal_charge);
                assert_eq!(a.aromatic, b.aromatic);
                assert_eq!(a.total_h(), b.total_h(), "H mismatch in {smi} -> {emitted}");
                assert_eq!(a.chirality, b.chirality);
            }
            let inverse: std::collections::HashMap<usize, usize> =
                order.iter().enumerate().map(|(n, &o)| (o, n)).collect();
            for bond in &m.bonds {
                let (na, nb) = (inverse[&bond.a], inverse[&bond.b]);
                let bi = m2.bond_between(na, nb).expect("bond preserved");
                assert_eq!(m2.bonds[bi].order, bond.order);
                let expect_dir = if m2.bonds[bi].a == na {
                    bond.direction
                } else {
                    bond.direction.flipped()
                };
                assert_eq!(m2.bonds[bi].direction, expect_dir);
            }
            assert_eq!(m2.rings.len(), m.rings.len());
        }
    }

    #[test]
    fn corpus_reader_skips_comments() {
        let lines = read_corpus_lines("# header\nCCO\n\n  c1ccccc1\n");
        assert_eq!(lines, vec![(2, "CCO"), (4, "c1ccccc1")]);
    }
}
