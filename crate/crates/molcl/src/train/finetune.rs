//! Fine-tuning: keep the pre-trained encoder, attach a fresh prediction
//! head, train with per-task losses under scaffold-split model selection.

use super::config::TrainConfig;
use super::dataset::{Dataset, TaskType};
use super::metrics::{mae, rmse, roc_auc, MetricError};
use super::optim::{adam_step, cosine_lr, AdamConfig, AdamState};
use super::split::scaffold_split;
use super::TrainError;
use crate::chem::{featurize, parse_smiles, FeaturizedGraph};
use crate::nn::{
    encode, encode_backward, mlp_backward, predict, readout_graph, readout_graph_backward,
    GinModel, ModelConfig,
};
use crate::util::derive_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const TAG_HEAD_INIT: u64 = 6;
const TAG_FT_SHUFFLE: u64 = 7;

#[derive(Clone, Debug)]
pub struct ColumnReport {
    pub name: String,
    pub task: TaskType,
    /// ROC-AUC for classification, RMSE for regression.
    pub test_primary: Option<f64>,
    /// MAE for regression tasks.
    pub test_mae: Option<f64>,
    /// Primary error divided by the column's label range.
    pub test_scaled: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FinetuneReport {
    pub selection_epoch: Option<usize>,
    pub best_val_metric: Option<f64>,
    pub columns: Vec<ColumnReport>,
    pub warnings: Vec<String>,
}

impl FinetuneReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self.selection_epoch {
            Some(e) => s.push_str(&format!(
                "selected epoch {} (validation metric {})\n",
                e,
                self.best_val_metric.unwrap_or(f64::NAN)
            )),
            None => s.push_str("selected final epoch (no usable validation split)\n"),
        }
        for c in &self.columns {
            let metric_name = match c.task {
                TaskType::Classification => "roc_auc",
                TaskType::Regression => "rmse",
            };
            match c.test_primary {
                Some(v) => {
                    s.push_str(&format!("test {} {} = {v}\n", c.name, metric_name));
                    if let Some(m) = c.test_mae {
                        s.push_str(&format!("test {} mae = {m}\n", c.name));
                    }
                    if let Some(sc) = c.test_scaled {
                        s.push_str(&format!("test {} scaled_error = {sc}\n", c.name));
                    }
                }
                None => s.push_str(&format!("test {} {metric_name} = absent\n", c.name)),
            }
        }
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }
}

/// Builds the fine-tuning model: encoder tensors copied from the
/// checkpointed model, projection head discarded (zeroed), prediction head
/// freshly initialized.
fn attach_prediction_head(encoder: &GinModel<f32>, n_targets: usize, seed: u64) -> GinModel<f32> {
    let config = ModelConfig {
        n_targets: Some(n_targets),
        separate_fragment_head: false,
        ..encoder.config.clone()
    };
    let mut model = GinModel::<f32>::init(&config, seed);
    for (dst, src) in model
        .node_tables
        .iter_mut()
        .chain(model.edge_tables.iter_mut())
        .zip(encoder.node_tables.iter().chain(encoder.edge_tables.iter()))
    {
        dst.data.copy_from_slice(&src.data);
    }
    for (dst, src) in model.layers.iter_mut().zip(encoder.layers.iter()) {
        dst.fc1.w.data.copy_from_slice(&src.fc1.w.data);
        dst.fc1.b.data.copy_from_slice(&src.fc1.b.data);
        dst.fc2.w.data.copy_from_slice(&src.fc2.w.data);
        dst.fc2.b.data.copy_from_slice(&src.fc2.b.data);
    }
    // The projection head plays no role after pre-training.
    for affine in [&mut model.proj.fc1, &mut model.proj.fc2] {
        affine.w.fill_zero();
        affine.b.fill_zero();
    }
    model
}

/// Stable binary cross-entropy with logits and its gradient.
fn bce_with_logits(x: f64, y: f64) -> (f64, f64) {
    let loss = x.max(0.0) - x * y + (1.0 + (-x.abs()).exp()).ln();
    let grad = 1.0 / (1.0 + (-x).exp()) - y;
    (loss, grad)
}

struct Prepared {
    graphs: Vec<FeaturizedGraph>,
}

fn prepare(ds: &Dataset, model: &GinModel<f32>) -> Result<Prepared, TrainError> {
    let graphs: Result<Vec<FeaturizedGraph>, TrainError> = ds
        .smiles
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mol = parse_smiles(s).map_err(|e| TrainError::Parse {
                line: i + 1,
                smiles: s.clone(),
                error: e,
            })?;
            featurize(&mol, model.config.feature_set)
                .map_err(|e| TrainError::Featurize { line: i + 1, error: e })
        })
        .collect();
    Ok(Prepared { graphs: graphs? })
}

/// Representations h_G for a set of records (no augmentation).
fn representations(
    model: &GinModel<f32>,
    graphs: &[FeaturizedGraph],
    idx: &[usize],
) -> Result<Vec<f32>, TrainError> {
    let d = model.config.d;
    let rows: Result<Vec<Vec<f32>>, TrainError> = idx
        .par_iter()
        .map(|&i| {
            let trace = encode(model, &graphs[i]).map_err(TrainError::Nn)?;
            Ok(readout_graph(&trace.out, graphs[i].n_atoms, d))
        })
        .collect();
    let rows = rows?;
    let mut out = vec![0.0f32; idx.len() * d];
    for (r, row) in rows.iter().enumerate() {
        out[r * d..(r + 1) * d].copy_from_slice(row);
    }
    Ok(out)
}

/// Mean validation metric for model selection: higher-is-better for
/// classification (mean ROC-AUC), lower-is-better handled by the caller for
/// regression (mean RMSE).
fn eval_metric(
    model: &GinModel<f32>,
    graphs: &[FeaturizedGraph],
    ds: &Dataset,
    idx: &[usize],
    warnings: &mut Vec<String>,
) -> Result<Option<f64>, TrainError> {
    if idx.is_empty() {
        return Ok(None);
    }
    let h = representations(model, graphs, idx)?;
    let (y, _) = predict(model, &h).map_err(TrainError::Nn)?;
    let n_t = ds.n_labels();
    let mut per_column = Vec::new();
    for c in 0..n_t {
        let mut scores = Vec::new();
        let mut cls_labels = Vec::new();
        let mut reg_labels = Vec::new();
        for (r, &i) in idx.iter().enumerate() {
            if let Some(label) = ds.labels[i][c] {
                scores.push(y[r * n_t + c] as f64);
                cls_labels.push(label >= 0.5);
                reg_labels.push(label);
            }
        }
        if scores.is_empty() {
            warnings.push(format!("column {} has no labels in this split", ds.label_names[c]));
            continue;
        }
        match ds.task_types[c] {
            TaskType::Classification => match roc_auc(&scores, &cls_labels) {
                Ok(auc) => per_column.push(auc),
                Err(MetricError::SingleClass) => warnings.push(format!(
                    "column {} is single-class in this split; skipped",
                    ds.label_names[c]
                )),
                Err(e) => return Err(TrainError::Metric(e)),
            },
            TaskType::Regression => {
                per_column.push(rmse(&scores, &reg_labels).map_err(TrainError::Metric)?)
            }
        }
    }
    if per_column.is_empty() {
        return Ok(None);
    }
    Ok(Some(per_column.iter().sum::<f64>() / per_column.len() as f64))
}

/// Fine-tunes a pre-trained encoder on a labeled dataset. Returns the
/// selected model and the metrics report.
pub fn finetune(
    encoder: &GinModel<f32>,
    ds: &Dataset,
    cfg: &TrainConfig,
) -> Result<(GinModel<f32>, FinetuneReport), TrainError> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if ds.task_types.len() != ds.n_labels() {
        return Err(TrainError::TaskTypeMismatch(format!(
            "{} task types for {} label columns",
            ds.task_types.len(),
            ds.n_labels()
        )));
    }
    let homogeneous = ds.task_types.windows(2).all(|w| w[0] == w[1]);
    if !homogeneous {
        return Err(TrainError::TaskTypeMismatch(
            "mixed classification/regression columns are not supported in one run".into(),
        ));
    }
    let classification = ds.task_types[0] == TaskType::Classification;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_workers())
        .build()
        .map_err(|e| TrainError::Domain(format!("worker pool: {e}")))?;
    pool.install(|| finetune_inner(encoder, ds, cfg, classification))
}

fn finetune_inner(
    encoder: &GinModel<f32>,
    ds: &Dataset,
    cfg: &TrainConfig,
    classification: bool,
) -> Result<(GinModel<f32>, FinetuneReport), TrainError> {
    let mut warnings = Vec::new();
    let split = scaffold_split(&ds.smiles, cfg.split_ratios, Some(cfg.seed))?;
    warnings.extend(split.warnings.iter().cloned());

    let mut model = attach_prediction_head(
        encoder,
        ds.n_labels(),
        derive_seed(cfg.seed, &[TAG_HEAD_INIT]),
    );
    let prepared = prepare(ds, &model)?;
    let graphs = &prepared.graphs;

    // Per-tensor learning rates: encoder scaled by encoder_lr, projection
    // head dead, prediction head at lr0.
    let encoder_lr = cfg.encoder_lr.unwrap_or(cfg.lr0);
    let lrs: Vec<f64> = model
        .named_params()
        .iter()
        .map(|(name, _)| {
            if name.starts_with("pred_") {
                cfg.lr0
            } else if name.starts_with("proj") {
                0.0
            } else {
                encoder_lr
            }
        })
        .collect();
    let mut adam = AdamState::new(&model.params());
    let adam_cfg = AdamConfig {
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        eps: cfg.eps,
        weight_decay: cfg.weight_decay,
        decoupled_weight_decay: cfg.decoupled_weight_decay,
    };

    let d = model.config.d;
    let n_t = ds.n_labels();
    let batches_per_epoch = split.train.len().div_ceil(cfg.batch_size);
    let total_steps = (cfg.epochs * batches_per_epoch) as u64;
    let mut global_step: u64 = 0;
    let mut best: Option<(usize, f64, GinModel<f32>)> = None;
    for epoch in 0..cfg.epochs {
        let mut order = split.train.clone();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_FT_SHUFFLE, epoch as u64]));
        order.shuffle(&mut rng);
        // The last incomplete batch is kept in fine-tuning.
        for sources in order.chunks(cfg.batch_size) {
            let traces: Result<Vec<_>, TrainError> = sources
                .par_iter()
                .map(|&i| encode(&model, &graphs[i]).map_err(TrainError::Nn))
                .collect();
            let traces = traces?;
            let mut h = vec![0.0f32; sources.len() * d];
            for (r, trace) in traces.iter().enumerate() {
                let g = readout_graph(&trace.out, trace.fg.n_atoms, d);
                h[r * d..(r + 1) * d].copy_from_slice(&g);
            }
            let (y, pred_traces) = predict(&model, &h).map_err(TrainError::Nn)?;
            // Per-cell losses over labeled cells only.
            let mut d_y = vec![0.0f32; y.len()];
            let n_cells: usize = sources
                .iter()
                .map(|&i| ds.labels[i].iter().filter(|l| l.is_some()).count())
                .sum();
            if n_cells == 0 {
                continue;
            }
            let scale = 1.0 / n_cells as f64;
            for (r, &i) in sources.iter().enumerate() {
                for c in 0..n_t {
                    let Some(label) = ds.labels[i][c] else {
                        continue;
                    };
                    let x = y[r * n_t + c] as f64;
                    let g = if classification {
                        bce_with_logits(x, label).1
                    } else {
                        2.0 * (x - label)
                    };
                    d_y[r * n_t + c] = (g * scale) as f32;
                }
            }
            // Backward: head, readout, encoder.
            let mut grads = model.zeros_like();
            let d_h = {
                let head = model.pred.as_ref().expect("prediction head attached");
                let ghead = grads.pred.as_mut().expect("gradient head");
                mlp_backward(head, ghead, &pred_traces, &d_y).map_err(TrainError::Nn)?
            };
            for (r, trace) in traces.iter().enumerate() {
                let n_atoms = trace.fg.n_atoms;
                let mut d_nodes = vec![0.0f32; n_atoms * d];
                readout_graph_backward(&d_h[r * d..(r + 1) * d], n_atoms, &mut d_nodes);
                encode_backward(&model, &mut grads, trace, &d_nodes).map_err(TrainError::Nn)?;
            }
            let scale = if cfg.finetune_lr_decay {
                cosine_lr(global_step, total_steps, 1.0)?
            } else {
                1.0
            };
            global_step += 1;
            let step_lrs: Vec<f64> = lrs.iter().map(|l| l * scale).collect();
            let grad_refs = grads.params();
            let mut param_refs = model.params_mut();
            adam_step(&mut param_refs, &grad_refs, &mut adam, &step_lrs, &adam_cfg)?;
        }

        // Model selection on validation.
        if let Some(metric) = eval_metric(&model, graphs, ds, &split.valid, &mut warnings)? {
            let better = match &best {
                None => true,
                Some((_, b, _)) => {
                    if classification {
                        metric > *b
                    } else {
                        metric < *b
                    }
                }
            };
            if better {
                best = Some((epoch, metric, model.clone()));
            }
        }
    }

    let (selection_epoch, best_val_metric, selected) = match best {
        Some((e, v, m)) => (Some(e), Some(v), m),
        None => {
            if !split.valid.is_empty() {
                warnings.push("validation metric unavailable; kept final model".into());
            }
            (None, None, model)
        }
    };

    // Test report for the selected model.
    let mut columns = Vec::new();
    if split.test.is_empty() {
        for c in 0..n_t {
            columns.push(ColumnReport {
                name: ds.label_names[c].clone(),
                task: ds.task_types[c],
                test_primary: None,
                test_mae: None,
                test_scaled: None,
            });
        }
    } else {
        let h = representations(&selected, graphs, &split.test)?;
        let (y, _) = predict(&selected, &h).map_err(TrainError::Nn)?;
        for c in 0..n_t {
            let mut scores = Vec::new();
            let mut cls = Vec::new();
            let mut reg = Vec::new();
            for (r, &i) in split.test.iter().enumerate() {
                if let Some(label) = ds.labels[i][c] {
                    scores.push(y[r * n_t + c] as f64);
                    cls.push(label >= 0.5);
                    reg.push(label);
                }
            }
            let mut report = ColumnReport {
                name: ds.label_names[c].clone(),
                task: ds.task_types[c],
                test_primary: None,
                test_mae: None,
                test_scaled: None,
            };
            if !scores.is_empty() {
                match ds.task_types[c] {
                    TaskType::Classification => match roc_auc(&scores, &cls) {
                        Ok(auc) => report.test_primary = Some(auc),
                        Err(MetricError::SingleClass) => {
                            warnings.push(format!(
                                "test column {} is single-class; ROC-AUC absent",
                                ds.label_names[c]
                            ));
                        }
                        Err(e) => return Err(TrainError::Metric(e)),
                    },
                    TaskType::Regression => {
                        let e = rmse(&scores, &reg).map_err(TrainError::Metric)?;
                        report.test_primary = Some(e);
                        report.test_mae = Some(mae(&scores, &reg).map_err(TrainError::Metric)?);
                        if let Some(range) = ds.label_range(c) {
                            report.test_scaled = Some(e / range);
                        }
                    }
                }
            }
            columns.push(report);
        }
    }

    Ok((
        selected,
        FinetuneReport {
            selection_epoch,
            best_val_metric,
            columns,
            warnings,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::FeatureSet;
    use crate::nn::ModelConfig;

    fn toy_encoder(d: usize) -> GinModel<f32> {
        let cfg = ModelConfig::pretrain(FeatureSet::Extended, d, d / 2, 2);
        GinModel::init(&cfg, 17)
    }

    /// A briefly pre-trained encoder; contrastive training spreads the
    /// representations, which conditions the downstream fits.
    fn pretrained_encoder(d: usize) -> GinModel<f32> {
        let corpus = toy_smiles().join("\n");
        let mut cfg = crate::train::TrainConfig::pretrain_defaults();
        cfg.epochs = 15;
        cfg.batch_size = 8;
        cfg.d = d;
        cfg.d_z = d / 2;
        cfg.k_layers = 2;
        cfg.workers = 2;
        let out = crate::train::pretrain(&corpus, &cfg, None).unwrap();
        crate::nn::checkpoint::from_bytes(&out.checkpoint_bytes).unwrap()
    }

    fn toy_smiles() -> Vec<String> {
        let mut smiles: Vec<String> = [
            "CCO", "CCCO", "CCN", "CCCN", "CCOC", "CC(C)O", "c1ccccc1", "Cc1ccccc1",
            "CCc1ccccc1", "Oc1ccccc1", "c1ccncc1", "Cc1ccncc1", "CC(=O)NC", "CC(=O)OC",
            "C1CCCCC1", "CC1CCCCC1", "C1CCOCC1", "C1CCNCC1", "CCCC", "CCCCC", "CC(C)C",
            "CCOCC", "COC", "CCCCN",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let extras = [
            "CC(=O)Oc1ccccc1", "CS(=O)(=O)NC", "CCOC(=O)C", "NCc1ccccc1", "OCC1CCCCC1",
            "c1ccc2ccccc2c1", "Cc1ccc(O)cc1", "CC(C)Cc1ccccc1", "O=C(O)c1ccccc1",
            "CN1CCCC1", "c1ccoc1", "c1ccsc1", "CC(N)C(=O)O", "CCCC(=O)N", "CC#N",
            "CCS", "CCSC", "C=CC=C", "CC(C)=O", "CCC=O",
        ];
        smiles.extend(extras.iter().map(|s| s.to_string()));
        smiles
    }

    /// Top principal direction of the centered rows by power iteration; the
    /// independent oracle behind the constructed labels.
    fn top_principal_direction(rows: &[Vec<f32>], d: usize) -> Vec<f64> {
        let n = rows.len();
        let mut mu = vec![0f64; d];
        for r in rows {
            for (m, &x) in mu.iter_mut().zip(r.iter()) {
                *m += x as f64 / n as f64;
            }
        }
        let mut v = vec![1f64; d];
        for _ in 0..100 {
            let mut next = vec![0f64; d];
            for r in rows {
                let dot: f64 = r
                    .iter()
                    .zip(&mu)
                    .zip(&v)
                    .map(|((&x, &m), &vi)| (x as f64 - m) * vi)
                    .sum();
                for ((nx, &x), &m) in next.iter_mut().zip(r.iter()).zip(&mu) {
                    *nx += dot * (x as f64 - m) / n as f64;
                }
            }
            let norm: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut next {
                *x /= norm;
            }
            v = next;
        }
        v
    }

    fn representations_of(encoder: &GinModel<f32>, smiles: &[String]) -> Vec<Vec<f32>> {
        let d = encoder.config.d;
        smiles
            .iter()
            .map(|s| {
                let mol = parse_smiles(s).unwrap();
                let fg = featurize(&mol, encoder.config.feature_set).unwrap();
                let trace = encode(encoder, &fg).unwrap();
                readout_graph(&trace.out, fg.n_atoms, d)
            })
            .collect()
    }

    /// Dataset whose label is a fixed linear function of the encoder's own
    /// representation: the projection onto the representations' leading
    /// principal direction (classification thresholds it at the median).
    fn linear_label_dataset(encoder: &GinModel<f32>, classification: bool) -> Dataset {
        let smiles = toy_smiles();
        let d = encoder.config.d;
        let hs = representations_of(encoder, &smiles);
        let v = top_principal_direction(&hs, d);
        let raw: Vec<f64> = hs
            .iter()
            .map(|h| h.iter().zip(&v).map(|(&x, &vi)| x as f64 * vi).sum())
            .collect();
        let mut sorted = raw.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let rows: Vec<Vec<Option<f64>>> = raw
            .iter()
            .map(|&v| {
                vec![Some(if classification {
                    (v > median) as i32 as f64
                } else {
                    v
                })]
            })
            .collect();
        Dataset {
            smiles,
            labels: rows,
            label_names: vec!["y".into()],
            task_types: vec![if classification {
                TaskType::Classification
            } else {
                TaskType::Regression
            }],
        }
    }

    fn fit_stats(model: &GinModel<f32>, ds: &Dataset) -> (Vec<f64>, Vec<f64>) {
        let graphs = prepare(ds, model).unwrap().graphs;
        let idx: Vec<usize> = (0..ds.len()).collect();
        let h = representations(model, &graphs, &idx).unwrap();
        let (y, _) = predict(model, &h).unwrap();
        let preds: Vec<f64> = (0..ds.len()).map(|r| y[r] as f64).collect();
        let labels: Vec<f64> = ds.labels.iter().map(|r| r[0].unwrap()).collect();
        (preds, labels)
    }

    #[test]
    fn frozen_encoder_fits_linear_labels() {
        let encoder = pretrained_encoder(32);
        let ds = linear_label_dataset(&encoder, false);
        let mut cfg = TrainConfig::finetune_defaults();
        cfg.epochs = 200;
        cfg.batch_size = 4;
        cfg.encoder_lr = Some(0.0);
        cfg.lr0 = 1e-2;
        cfg.weight_decay = 0.0;
        cfg.workers = 2;
        cfg.finetune_lr_decay = true;
        // Optimization sanity: train on everything, measure the fit.
        cfg.split_ratios = (1.0, 0.0, 0.0);
        let (model, report) = finetune(&encoder, &ds, &cfg).unwrap();
        let (preds, labels) = fit_stats(&model, &ds);
        let mean = labels.iter().sum::<f64>() / labels.len() as f64;
        let std = (labels.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / labels.len() as f64)
            .sqrt();
        let err = rmse(&preds, &labels).unwrap();
        assert!(
            err < 0.01 * std,
            "rmse {err} vs std {std} (report: {})",
            report.to_text()
        );
        // Frozen encoder: parameters unchanged.
        for (a, b) in model.layers[0]
            .fc1
            .w
            .data
            .iter()
            .zip(encoder.layers[0].fc1.w.data.iter())
        {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn frozen_encoder_bce_drops_within_200_steps() {
        // Head-only training on a linearly separable toy label; mean BCE on
        // the training set must cross below 0.1 within ~200 steps.
        let encoder = pretrained_encoder(16);
        let ds = linear_label_dataset(&encoder, true);
        let mut cfg = TrainConfig::finetune_defaults();
        cfg.batch_size = 8;
        let steps_per_epoch = ds.len().div_ceil(cfg.batch_size);
        cfg.epochs = 200 / steps_per_epoch;
        cfg.encoder_lr = Some(0.0);
        cfg.lr0 = 5e-2;
        cfg.weight_decay = 0.0;
        cfg.workers = 2;
        cfg.split_ratios = (1.0, 0.0, 0.0);
        let (model, _) = finetune(&encoder, &ds, &cfg).unwrap();
        let (preds, labels) = fit_stats(&model, &ds);
        let bce = preds
            .iter()
            .zip(labels.iter())
            .map(|(&x, &y)| bce_with_logits(x, y).0)
            .sum::<f64>()
            / preds.len() as f64;
        assert!(bce < 0.1, "training BCE {bce} after {} epochs", cfg.epochs);
    }

    #[test]
    fn classification_reaches_high_auc() {
        let encoder = toy_encoder(16);
        let ds = linear_label_dataset(&encoder, true);
        let mut cfg = TrainConfig::finetune_defaults();
        cfg.epochs = 100;
        cfg.batch_size = 8;
        cfg.lr0 = 1e-2;
        cfg.weight_decay = 0.0;
        cfg.workers = 2;
        cfg.split_ratios = (1.0, 0.0, 0.0);
        let (model, _report) = finetune(&encoder, &ds, &cfg).unwrap();
        let (preds, labels) = fit_stats(&model, &ds);
        let bools: Vec<bool> = labels.iter().map(|&v| v >= 0.5).collect();
        let auc = roc_auc(&preds, &bools).unwrap();
        assert!(auc > 0.95, "train AUC {auc}");
    }

    #[test]
    fn empty_test_split_reports_absent_metrics() {
        let encoder = toy_encoder(8);
        // Every molecule shares the benzene scaffold: train swallows all.
        let smiles: Vec<String> = (2..12).map(|i| format!("{}c1ccccc1", "C".repeat(i))).collect();
        let ds = Dataset {
            labels: smiles.iter().enumerate().map(|(i, _)| vec![Some(i as f64)]).collect(),
            smiles,
            label_names: vec!["y".into()],
            task_types: vec![TaskType::Regression],
        };
        let mut cfg = TrainConfig::finetune_defaults();
        cfg.epochs = 2;
        cfg.batch_size = 4;
        cfg.workers = 1;
        let (_, report) = finetune(&encoder, &ds, &cfg).unwrap();
        assert!(report.columns[0].test_primary.is_none());
        assert!(report.warnings.iter().any(|w| w.contains("TestEmpty")));
        assert!(report.to_text().contains("absent"));
    }

    #[test]
    fn mixed_task_types_rejected() {
        let encoder = toy_encoder(8);
        let ds = Dataset {
            smiles: vec!["CCO".into(), "CCN".into()],
            labels: vec![vec![Some(1.0), Some(0.5)], vec![Some(0.0), Some(1.5)]],
            label_names: vec!["a".into(), "b".into()],
            task_types: vec![TaskType::Classification, TaskType::Regression],
        };
        let cfg = TrainConfig::finetune_defaults();
        assert!(matches!(
            finetune(&encoder, &ds, &cfg),
            Err(TrainError::TaskTypeMismatch(_))
        ));
    }

    #[test]
    fn model_selection_uses_validation() {
        let encoder = toy_encoder(8);
        let ds = linear_label_dataset(&encoder, false);
        let mut cfg = TrainConfig::finetune_defaults();
        cfg.epochs = 10;
        cfg.batch_size = 8;
        cfg.workers = 2;
        let (_, report) = finetune(&encoder, &ds, &cfg).unwrap();
        assert!(report.selection_epoch.is_some());
        assert!(report.best_val_metric.is_some());
    }
}
