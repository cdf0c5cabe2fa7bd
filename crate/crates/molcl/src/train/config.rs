//! Run configuration: a flat `key = value` text file mirroring
//! [`TrainConfig`]. Every run writes its resolved configuration beside its
//! outputs.

use super::dataset::TaskType;
use super::TrainError;
use crate::chem::FeatureSet;
use crate::loss::LossConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub corpus: Option<String>,
    pub dataset: Option<String>,
    pub task_types: Vec<TaskType>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    /// Encoder learning rate during fine-tuning; zero freezes the encoder.
    pub encoder_lr: Option<f64>,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub decoupled_weight_decay: bool,
    pub loss: LossConfig,
    pub feature_set: FeatureSet,
    pub separate_fragment_head: bool,
    pub d: usize,
    pub d_z: usize,
    pub k_layers: usize,
    pub radius: u32,
    pub nbits: usize,
    pub seed: u64,
    pub deterministic: bool,
    pub workers: usize,
    pub val_fraction: f64,
    pub split_ratios: (f64, f64, f64),
    /// Cosine-anneal the fine-tuning learning rate over all steps.
    /// Pre-training always uses the cosine schedule; fine-tuning holds the
    /// rate constant unless this is set.
    pub finetune_lr_decay: bool,
}

impl TrainConfig {
    /// Pre-training defaults: 50 epochs, batch 512.
    pub fn pretrain_defaults() -> Self {
        TrainConfig {
            corpus: None,
            dataset: None,
            task_types: vec![TaskType::Classification],
            epochs: 50,
            batch_size: 512,
            lr0: 5e-4,
            encoder_lr: None,
            weight_decay: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decoupled_weight_decay: true,
            loss: LossConfig::default(),
            feature_set: FeatureSet::Extended,
            separate_fragment_head: false,
            d: 512,
            d_z: 256,
            k_layers: 5,
            radius: 2,
            nbits: 2048,
            seed: 0,
            deterministic: true,
            workers: 0,
            val_fraction: 0.05,
            split_ratios: (0.8, 0.1, 0.1),
            finetune_lr_decay: false,
        }
    }

    /// Fine-tuning defaults: 100 epochs, batch 32.
    pub fn finetune_defaults() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            ..TrainConfig::pretrain_defaults()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::Domain(
                "epochs and batch_size must be positive".into(),
            ));
        }
        let (a, b, c) = self.split_ratios;
        if (a + b + c - 1.0).abs() > 1e-9 {
            return Err(TrainError::Domain("split ratios must sum to 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(TrainError::Domain("val_fraction must be in [0, 1)".into()));
        }
        self.loss.validate().map_err(TrainError::Loss)?;
        if self.d == 0 || self.d_z == 0 || self.k_layers == 0 {
            return Err(TrainError::Domain("d, d_z, k_layers must be positive".into()));
        }
        Ok(())
    }

    /// Parses a `key = value` run config over the given defaults. Unknown
    /// keys are errors naming the key.
    pub fn parse(text: &str, defaults: TrainConfig) -> Result<TrainConfig, TrainError> {
        let mut cfg = defaults;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                TrainError::Config(format!("line {}: expected 'key = value'", ln + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad =
                |what: &str| TrainError::Config(format!("line {}: bad {what}: {value}", ln + 1));
            match key {
                "corpus" => cfg.corpus = Some(value.to_string()),
                "dataset" => cfg.dataset = Some(value.to_string()),
                "task_types" => {
                    cfg.task_types = value
                        .split(',')
                        .map(|t| TaskType::parse(t).ok_or_else(|| bad("task type")))
                        .collect::<Result<_, _>>()?;
                }
                "epochs" => cfg.epochs = value.parse().map_err(|_| bad("integer"))?,
                "batch_size" => cfg.batch_size = value.parse().map_err(|_| bad("integer"))?,
                "lr0" => cfg.lr0 = value.parse().map_err(|_| bad("number"))?,
                "encoder_lr" => {
                    cfg.encoder_lr = Some(value.parse().map_err(|_| bad("number"))?)
                }
                "weight_decay" => cfg.weight_decay = value.parse().map_err(|_| bad("number"))?,
                "beta1" => cfg.beta1 = value.parse().map_err(|_| bad("number"))?,
                "beta2" => cfg.beta2 = value.parse().map_err(|_| bad("number"))?,
                "eps" => cfg.eps = value.parse().map_err(|_| bad("number"))?,
                "decoupled_weight_decay" => {
                    cfg.decoupled_weight_decay = value.parse().map_err(|_| bad("bool"))?
                }
                "tau" => cfg.loss.tau = value.parse().map_err(|_| bad("number"))?,
                "lambda1" => cfg.loss.lambda1 = value.parse().map_err(|_| bad("number"))?,
                "lambda2" => cfg.loss.lambda2 = value.parse().map_err(|_| bad("number"))?,
                "weight_positive_in_denominator" => {
                    cfg.loss.weight_positive_in_denominator =
                        value.parse().map_err(|_| bad("bool"))?
                }
                "feature_set" => {
                    cfg.feature_set = FeatureSet::parse(value).ok_or_else(|| bad("feature set"))?
                }
                "separate_fragment_head" => {
                    cfg.separate_fragment_head = value.parse().map_err(|_| bad("bool"))?
                }
                "d" => cfg.d = value.parse().map_err(|_| bad("integer"))?,
                "d_z" => cfg.d_z = value.parse().map_err(|_| bad("integer"))?,
                "k_layers" => cfg.k_layers = value.parse().map_err(|_| bad("integer"))?,
                "radius" => cfg.radius = value.parse().map_err(|_| bad("integer"))?,
                "nbits" => cfg.nbits = value.parse().map_err(|_| bad("integer"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("integer"))?,
                "deterministic" => cfg.deterministic = value.parse().map_err(|_| bad("bool"))?,
                "workers" => cfg.workers = value.parse().map_err(|_| bad("integer"))?,
                "val_fraction" => cfg.val_fraction = value.parse().map_err(|_| bad("number"))?,
                "finetune_lr_decay" => {
                    cfg.finetune_lr_decay = value.parse().map_err(|_| bad("bool"))?
                }
                "split_ratios" => {
                    let parts: Vec<f64> = value
                        .split('/')
                        .map(|p| p.trim().parse().map_err(|_| bad("ratio")))
                        .collect::<Result<_, _>>()?;
                    if parts.len() != 3 {
                        return Err(bad("ratio triple (train/valid/test)"));
                    }
                    cfg.split_ratios = (parts[0], parts[1], parts[2]);
                }
                _ => {
                    return Err(TrainError::Config(format!(
                        "line {}: unknown config key {key:?}",
                        ln + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The resolved configuration, re-parsable by [`TrainConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(c) = &self.corpus {
            s.push_str(&format!("corpus = {c}\n"));
        }
        if let Some(d) = &self.dataset {
            s.push_str(&format!("dataset = {d}\n"));
        }
        let tt: Vec<&str> = self.task_types.iter().map(|t| t.name()).collect();
        s.push_str(&format!("task_types = {}\n", tt.join(",")));
        s.push_str(&format!("epochs = {}\n", self.epochs));
        s.push_str(&format!("batch_size = {}\n", self.batch_size));
        s.push_str(&format!("lr0 = {}\n", self.lr0));
        if let Some(e) = self.encoder_lr {
            s.push_str(&format!("encoder_lr = {e}\n"));
        }
        s.push_str(&format!("weight_decay = {}\n", self.weight_decay));
        s.push_str(&format!("beta1 = {}\n", self.beta1));
        s.push_str(&format!("beta2 = {}\n", self.beta2));
        s.push_str(&format!("eps = {}\n", self.eps));
        s.push_str(&format!(
            "decoupled_weight_decay = {}\n",
            self.decoupled_weight_decay
        ));
        s.push_str(&format!("tau = {}\n", self.loss.tau));
        s.push_str(&format!("lambda1 = {}\n", self.loss.lambda1));
        s.push_str(&format!("lambda2 = {}\n", self.loss.lambda2));
        s.push_str(&format!(
            "weight_positive_in_denominator = {}\n",
            self.loss.weight_positive_in_denominator
        ));
        s.push_str(&format!("feature_set = {}\n", self.feature_set.name()));
        s.push_str(&format!(
            "separate_fragment_head = {}\n",
            self.separate_fragment_head
        ));
        s.push_str(&format!("d = {}\n", self.d));
        s.push_str(&format!("d_z = {}\n", self.d_z));
        s.push_str(&format!("k_layers = {}\n", self.k_layers));
        s.push_str(&format!("radius = {}\n", self.radius));
        s.push_str(&format!("nbits = {}\n", self.nbits));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("deterministic = {}\n", self.deterministic));
        s.push_str(&format!("workers = {}\n", self.workers));
        s.push_str(&format!("val_fraction = {}\n", self.val_fraction));
        s.push_str(&format!("finetune_lr_decay = {}\n", self.finetune_lr_decay));
        s.push_str(&format!(
            "split_ratios = {}/{}/{}\n",
            self.split_ratios.0, self.split_ratios.1, self.split_ratios.2
        ));
        s
    }

    /// Worker-pool width: the configured count, or every available core.
    pub fn effective_workers(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}
