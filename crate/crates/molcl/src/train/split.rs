//! Dataset splits: scaffold-grouped for fine-tuning, seeded random for the
//! pre-training validation slice.

use super::TrainError;
use crate::chem::parse_smiles;
use crate::fragment::murcko_scaffold;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitResult {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
    /// Set when the greedy assignment starves a partition.
    pub warnings: Vec<String>,
}

/// Groups records by Bemis-Murcko scaffold key and greedily assigns whole
/// groups: train until it reaches its share, then valid, remainder to test.
/// Groups are ordered by descending size then lexicographic key, so the
/// split is deterministic; the seed is unused in deterministic mode and
/// kept for interface stability.
pub fn scaffold_split(
    smiles: &[String],
    ratios: (f64, f64, f64),
    _seed: Option<u64>,
) -> Result<SplitResult, TrainError> {
    if smiles.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let (r_train, r_valid, r_test) = ratios;
    if !(r_train >= 0.0 && r_valid >= 0.0 && r_test >= 0.0)
        || (r_train + r_valid + r_test - 1.0).abs() > 1e-9
    {
        return Err(TrainError::Domain(format!(
            "split ratios must sum to 1, got {ratios:?}"
        )));
    }
    let mut groups: std::collections::BTreeMap<String, Vec<usize>> = Default::default();
    for (i, s) in smiles.iter().enumerate() {
        let mol = parse_smiles(s).map_err(|e| TrainError::Parse {
            line: i + 1,
            smiles: s.clone(),
            error: e,
        })?;
        groups.entry(murcko_scaffold(&mol)).or_default().push(i);
    }
    let mut ordered: Vec<(String, Vec<usize>)> = groups.into_iter().collect();
    ordered.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(&b.0)));

    let n = smiles.len() as f64;
    let train_target = r_train * n;
    let valid_target = r_valid * n;
    let mut result = SplitResult {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
        warnings: Vec::new(),
    };
    for (_, group) in ordered {
        if (result.train.len() as f64) < train_target {
            result.train.extend(group);
        } else if (result.valid.len() as f64) < valid_target {
            result.valid.extend(group);
        } else {
            result.test.extend(group);
        }
    }
    result.train.sort_unstable();
    result.valid.sort_unstable();
    result.test.sort_unstable();
    if result.valid.is_empty() && r_valid > 0.0 {
        result.warnings.push("ValidEmpty".to_string());
    }
    if result.test.is_empty() && r_test > 0.0 {
        result.warnings.push("TestEmpty".to_string());
    }
    Ok(result)
}

/// Seeded random split of `n` records into train and validation slices.
/// The validation share rounds half-up with a floor of one record.
pub fn random_split(n: usize, valid_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_valid = ((valid_fraction * n as f64 + 0.5).floor() as usize).clamp(
        usize::from(n > 1),
        n.saturating_sub(1),
    );
    let valid: Vec<usize> = idx[..n_valid].to_vec();
    let train: Vec<usize> = idx[n_valid..].to_vec();
    (train, valid)
}
