//! Contrastive pre-training: seeded shuffling, cached per-molecule
//! derivations, cosine-decayed Adam, best-validation checkpointing, and a
//! CSV step log.

use super::batch::{build_batch, build_cache, contrastive_step, MolRecord};
use super::config::TrainConfig;
use super::optim::{adam_step, cosine_lr, AdamConfig, AdamState};
use super::split::random_split;
use super::TrainError;
use crate::chem::read_corpus_lines;
use crate::nn::{checkpoint, GinModel, ModelConfig};
use crate::util::{atomic_write, derive_seed};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

// Seed-derivation tags, fixed forever for reproducibility.
const TAG_SPLIT: u64 = 1;
const TAG_INIT: u64 = 2;
const TAG_SHUFFLE: u64 = 3;
const TAG_BATCH: u64 = 4;
const TAG_VAL: u64 = 5;

#[derive(Clone, Debug)]
pub struct EpochStats {
    pub mean_train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug)]
pub struct PretrainOutput {
    pub epoch_stats: Vec<EpochStats>,
    pub best_epoch: Option<usize>,
    pub best_val_loss: Option<f64>,
    pub checkpoint_bytes: Vec<u8>,
    pub log_csv: String,
}

impl PretrainOutput {
    pub fn first_epoch_mean(&self) -> f64 {
        self.epoch_stats.first().map_or(f64::NAN, |e| e.mean_train_loss)
    }

    pub fn final_epoch_mean(&self) -> f64 {
        self.epoch_stats.last().map_or(f64::NAN, |e| e.mean_train_loss)
    }
}

/// Pre-trains on a corpus (one SMILES per line) and, when `out_dir` is
/// given, writes `checkpoint.bin`, `train_log.csv`, and `resolved.cfg`
/// there atomically.
pub fn pretrain(
    corpus_text: &str,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<PretrainOutput, TrainError> {
    cfg.validate()?;
    let entries = read_corpus_lines(corpus_text);
    if entries.len() < 2 {
        return Err(TrainError::Domain(format!(
            "pre-training corpus needs at least 2 molecules, got {}",
            entries.len()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_workers())
        .build()
        .map_err(|e| TrainError::Domain(format!("worker pool: {e}")))?;
    pool.install(|| pretrain_inner(&entries, cfg, out_dir))
}

fn pretrain_inner(
    entries: &[(usize, &str)],
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<PretrainOutput, TrainError> {
    let cache = build_cache(entries, cfg.feature_set, cfg.radius, cfg.nbits)?;
    let (train_idx, val_idx) = random_split(
        cache.len(),
        cfg.val_fraction,
        derive_seed(cfg.seed, &[TAG_SPLIT]),
    );
    if train_idx.len() < cfg.batch_size {
        return Err(TrainError::Domain(format!(
            "batch size {} exceeds the training split ({} molecules)",
            cfg.batch_size,
            train_idx.len()
        )));
    }

    let model_cfg = ModelConfig {
        feature_set: cfg.feature_set,
        d: cfg.d,
        d_z: cfg.d_z,
        k_layers: cfg.k_layers,
        n_targets: None,
        separate_fragment_head: cfg.separate_fragment_head,
    };
    let mut model = GinModel::<f32>::init(&model_cfg, derive_seed(cfg.seed, &[TAG_INIT]));
    let mut adam = AdamState::new(&model.params());
    let adam_cfg = AdamConfig {
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        eps: cfg.eps,
        weight_decay: cfg.weight_decay,
        decoupled_weight_decay: cfg.decoupled_weight_decay,
    };

    let batches_per_epoch = train_idx.len() / cfg.batch_size;
    let total_steps = (cfg.epochs * batches_per_epoch) as u64;
    let n_params = model.params().len();

    let mut log = String::from("step,epoch,lr,loss_total,loss_mol,loss_frag\n");
    let mut epoch_stats = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, GinModel<f32>)> = None;
    let mut global_step: u64 = 0;

    for epoch in 0..cfg.epochs {
        let mut order = train_idx.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_SHUFFLE, epoch as u64]));
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0f64;
        for b in 0..batches_per_epoch {
            let sources = &order[b * cfg.batch_size..(b + 1) * cfg.batch_size];
            let batch_seed = derive_seed(cfg.seed, &[TAG_BATCH, epoch as u64, b as u64]);
            let step = (|| -> Result<_, TrainError> {
                let plan = build_batch(&cache, sources, cfg.loss.lambda1, batch_seed)?;
                contrastive_step(&model, &cache, &plan, &cfg.loss, true)
            })()
            .map_err(|e| TrainError::BatchFailed {
                epoch,
                batch: b,
                batch_seed,
                detail: e.to_string(),
            })?;
            let lr = cosine_lr(global_step, total_steps, cfg.lr0)?;
            {
                let grads = step.grads.as_ref().expect("training step has gradients");
                let grad_refs = grads.params();
                let mut param_refs = model.params_mut();
                adam_step(
                    &mut param_refs,
                    &grad_refs,
                    &mut adam,
                    &vec![lr; n_params],
                    &adam_cfg,
                )?;
            }
            global_step += 1;
            epoch_loss += step.loss_total as f64;
            log.push_str(&format!(
                "{},{},{},{},{},{}\n",
                global_step, epoch, lr, step.loss_total, step.loss_mol, step.loss_frag
            ));
        }
        let mean_train_loss = epoch_loss / batches_per_epoch as f64;

        // Validation with epoch-independent batch seeds, so the score is
        // comparable across epochs.
        let val_loss = if val_idx.is_empty() {
            None
        } else {
            let mut weighted = 0.0f64;
            let mut count = 0usize;
            for (b, sources) in val_idx.chunks(cfg.batch_size).enumerate() {
                let batch_seed = derive_seed(cfg.seed, &[TAG_VAL, b as u64]);
                let plan = build_batch(&cache, sources, cfg.loss.lambda1, batch_seed)?;
                let out = contrastive_step(&model, &cache, &plan, &cfg.loss, false)?;
                weighted += out.loss_total as f64 * sources.len() as f64;
                count += sources.len();
            }
            Some(weighted / count as f64)
        };
        if let Some(v) = val_loss {
            if best.as_ref().map_or(true, |(_, bv, _)| v < *bv) {
                best = Some((epoch, v, model.clone()));
            }
        }
        epoch_stats.push(EpochStats {
            mean_train_loss,
            val_loss,
        });
    }

    let (best_epoch, best_val_loss, best_model) = match best {
        Some((e, v, m)) => (Some(e), Some(v), m),
        None => (None, None, model),
    };
    let checkpoint_bytes = checkpoint::to_bytes(&best_model);
    let output = PretrainOutput {
        epoch_stats,
        best_epoch,
        best_val_loss,
        checkpoint_bytes,
        log_csv: log,
    };
    if let Some(dir) = out_dir {
        atomic_write(&dir.join("checkpoint.bin"), &output.checkpoint_bytes)?;
        atomic_write(&dir.join("train_log.csv"), output.log_csv.as_bytes())?;
        atomic_write(&dir.join("resolved.cfg"), cfg.to_text().as_bytes())?;
    }
    Ok(output)
}

/// Caches and exposes the per-molecule derivations of a corpus; the
/// embedding/retrieval commands reuse this without training.
pub fn corpus_cache(corpus_text: &str, cfg: &TrainConfig) -> Result<Vec<MolRecord>, TrainError> {
    let entries = read_corpus_lines(corpus_text);
    build_cache(&entries, cfg.feature_set, cfg.radius, cfg.nbits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_corpus() -> String {
        let families = [
            "CCO", "CCCO", "CCCCO", "CCN", "CCCN", "CCOC", "CCCOC", "CC(C)O", "CC(C)N",
            "c1ccccc1", "Cc1ccccc1", "CCc1ccccc1", "Oc1ccccc1", "COc1ccccc1", "Nc1ccccc1",
            "c1ccncc1", "Cc1ccncc1", "CC(=O)NC", "CC(=O)NCC", "CC(=O)OC", "CC(=O)OCC",
            "C1CCCCC1", "CC1CCCCC1", "C1CCNCC1", "C1CCOCC1",
        ];
        families.join("\n")
    }

    #[test]
    fn loss_decreases_on_tiny_corpus() {
        let mut cfg = TrainConfig::pretrain_defaults();
        cfg.epochs = 6;
        cfg.batch_size = 8;
        cfg.d = 16;
        cfg.d_z = 8;
        cfg.k_layers = 2;
        cfg.workers = 2;
        cfg.seed = 7;
        let out = pretrain(&tiny_corpus(), &cfg, None).unwrap();
        assert_eq!(out.epoch_stats.len(), 6);
        assert!(out.final_epoch_mean() < out.first_epoch_mean());
        assert!(out.best_val_loss.is_some());
        assert!(out.log_csv.starts_with("step,epoch,lr,loss_total,loss_mol,loss_frag\n"));
        // 2 batches per epoch (25 mols -> 24 train -> 3 batches of 8).
        assert_eq!(out.log_csv.lines().count(), 1 + 6 * 3);
    }

    #[test]
    fn deterministic_checkpoints() {
        let mut cfg = TrainConfig::pretrain_defaults();
        cfg.epochs = 2;
        cfg.batch_size = 8;
        cfg.d = 8;
        cfg.d_z = 4;
        cfg.k_layers = 1;
        cfg.seed = 42;
        cfg.workers = 2;
        let a = pretrain(&tiny_corpus(), &cfg, None).unwrap();
        let b = pretrain(&tiny_corpus(), &cfg, None).unwrap();
        assert_eq!(a.checkpoint_bytes, b.checkpoint_bytes);
        assert_eq!(a.log_csv, b.log_csv);
        // A different seed changes the artifacts.
        cfg.seed = 43;
        let c = pretrain(&tiny_corpus(), &cfg, None).unwrap();
        assert_ne!(a.checkpoint_bytes, c.checkpoint_bytes);
    }

    #[test]
    fn batch_size_larger_than_corpus_rejected() {
        let mut cfg = TrainConfig::pretrain_defaults();
        cfg.batch_size = 512;
        let err = pretrain(&tiny_corpus(), &cfg, None).unwrap_err();
        assert!(err.to_string().contains("batch size"), "{err}");
    }

    #[test]
    fn writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = TrainConfig::pretrain_defaults();
        cfg.epochs = 1;
        cfg.batch_size = 8;
        cfg.d = 8;
        cfg.d_z = 4;
        cfg.k_layers = 1;
        let out = pretrain(&tiny_corpus(), &cfg, Some(dir.path())).unwrap();
        let ckpt = std::fs::read(dir.path().join("checkpoint.bin")).unwrap();
        assert_eq!(ckpt, out.checkpoint_bytes);
        let loaded = checkpoint::from_bytes(&ckpt).unwrap();
        assert_eq!(loaded.config.d, 8);
        assert!(dir.path().join("train_log.csv").exists());
        let resolved = std::fs::read_to_string(dir.path().join("resolved.cfg")).unwrap();
        assert!(resolved.contains("batch_size = 8"));
    }
}
