//! The GIN encoder's parameter containers and initialization.

use super::tensor::{Scalar, Tensor};
use crate::chem::FeatureSet;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One affine map `y = W x + b` with `W: out x in`, `b: out x 1`.
#[derive(Clone, Debug)]
pub struct Affine<F> {
    pub w: Tensor<F>,
    pub b: Tensor<F>,
}

impl<F: Scalar> Affine<F> {
    fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Affine {
            w: Tensor::zeros(out_dim, in_dim),
            b: Tensor::zeros(out_dim, 1),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols
    }
}

/// Two affine maps with a rectifier between them.
#[derive(Clone, Debug)]
pub struct Mlp<F> {
    pub fc1: Affine<F>,
    pub fc2: Affine<F>,
}

impl<F: Scalar> Mlp<F> {
    fn zeros(in_dim: usize, hidden: usize, out_dim: usize) -> Self {
        Mlp {
            fc1: Affine::zeros(hidden, in_dim),
            fc2: Affine::zeros(out_dim, hidden),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.fc1.in_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.fc1.out_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.fc2.out_dim()
    }
}

/// Hyperparameters fixing every tensor shape in a [`GinModel`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub feature_set: FeatureSet,
    /// Node-state width (the representation h).
    pub d: usize,
    /// Latent width out of the projection head (the vector z).
    pub d_z: usize,
    /// Number of message-passing layers.
    pub k_layers: usize,
    /// Prediction-head width, present when fine-tuning.
    pub n_targets: Option<usize>,
    /// Give fragment latents their own projection head instead of sharing
    /// the molecule head.
    pub separate_fragment_head: bool,
}

impl ModelConfig {
    pub fn pretrain(feature_set: FeatureSet, d: usize, d_z: usize, k_layers: usize) -> Self {
        ModelConfig {
            feature_set,
            d,
            d_z,
            k_layers,
            n_targets: None,
            separate_fragment_head: false,
        }
    }
}

/// All learnable parameters: one embedding table per node/edge feature
/// (rows cover the mask code), K message-passing layers whose combine step
/// is an MLP `d -> 2d -> d`, the projection head `d -> d -> d_z`, and an
/// optional prediction head `d -> d -> n_targets`.
#[derive(Clone, Debug)]
pub struct GinModel<F> {
    pub config: ModelConfig,
    pub node_tables: Vec<Tensor<F>>,
    pub edge_tables: Vec<Tensor<F>>,
    pub layers: Vec<Mlp<F>>,
    pub proj: Mlp<F>,
    pub proj_frag: Option<Mlp<F>>,
    pub pred: Option<Mlp<F>>,
}

impl<F: Scalar> GinModel<F> {
    /// A model of the right shapes with every parameter zero.
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.d;
        let node_tables = config
            .feature_set
            .node_features()
            .iter()
            .map(|&(_, vocab)| Tensor::zeros(vocab as usize, d))
            .collect();
        let edge_tables = config
            .feature_set
            .edge_features()
            .iter()
            .map(|&(_, vocab)| Tensor::zeros(vocab as usize, d))
            .collect();
        let layers = (0..config.k_layers)
            .map(|_| Mlp::zeros(d, 2 * d, d))
            .collect();
        let proj = Mlp::zeros(d, d, config.d_z);
        let proj_frag = config
            .separate_fragment_head
            .then(|| Mlp::zeros(d, d, config.d_z));
        let pred = config.n_targets.map(|t| Mlp::zeros(d, d, t));
        GinModel {
            config: config.clone(),
            node_tables,
            edge_tables,
            layers,
            proj,
            proj_frag,
            pred,
        }
    }

    /// A zero model with the same shapes as `self`; the gradient container.
    pub fn zeros_like(&self) -> Self {
        GinModel::zeros(&self.config)
    }

    /// Random initialization: affine weights uniform in
    /// +-sqrt(6 / (fan_in + fan_out)), biases zero, embeddings normal with
    /// standard deviation 0.1. Deterministic in the seed.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut model = GinModel::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for table in model.node_tables.iter_mut().chain(model.edge_tables.iter_mut()) {
            for v in &mut table.data {
                *v = F::from_f64(0.1 * normal(&mut rng));
            }
        }
        let heads = model
            .layers
            .iter_mut()
            .chain(std::iter::once(&mut model.proj))
            .chain(model.proj_frag.iter_mut())
            .chain(model.pred.iter_mut());
        for mlp in heads {
            for affine in [&mut mlp.fc1, &mut mlp.fc2] {
                let bound = (6.0 / (affine.w.cols + affine.w.rows) as f64).sqrt();
                for v in &mut affine.w.data {
                    *v = F::from_f64(bound * (2.0 * uniform(&mut rng) - 1.0));
                }
            }
        }
        model
    }

    /// The projection head used for fragment rows.
    pub fn fragment_head(&self) -> &Mlp<F> {
        self.proj_frag.as_ref().unwrap_or(&self.proj)
    }

    /// Canonical (name, tensor) listing; the order defines the checkpoint
    /// manifest and the optimizer state layout.
    pub fn named_params(&self) -> Vec<(String, &Tensor<F>)> {
        let mut out = Vec::new();
        for (i, t) in self.node_tables.iter().enumerate() {
            out.push((format!("node_table_{i}"), t));
        }
        for (i, t) in self.edge_tables.iter().enumerate() {
            out.push((format!("edge_table_{i}"), t));
        }
        for (k, mlp) in self.layers.iter().enumerate() {
            out.push((format!("layer{k}_fc1_w"), &mlp.fc1.w));
            out.push((format!("layer{k}_fc1_b"), &mlp.fc1.b));
            out.push((format!("layer{k}_fc2_w"), &mlp.fc2.w));
            out.push((format!("layer{k}_fc2_b"), &mlp.fc2.b));
        }
        for (prefix, mlp) in [("proj", Some(&self.proj)), ("proj_frag", self.proj_frag.as_ref()), ("pred", self.pred.as_ref())]
        {
            if let Some(mlp) = mlp {
                out.push((format!("{prefix}_fc1_w"), &mlp.fc1.w));
                out.push((format!("{prefix}_fc1_b"), &mlp.fc1.b));
                out.push((format!("{prefix}_fc2_w"), &mlp.fc2.w));
                out.push((format!("{prefix}_fc2_b"), &mlp.fc2.b));
            }
        }
        out
    }

    /// Mutable tensors in [`Self::named_params`] order.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out: Vec<&mut Tensor<F>> = Vec::new();
        for t in self.node_tables.iter_mut() {
            out.push(t);
        }
        for t in self.edge_tables.iter_mut() {
            out.push(t);
        }
        for mlp in self.layers.iter_mut() {
            out.push(&mut mlp.fc1.w);
            out.push(&mut mlp.fc1.b);
            out.push(&mut mlp.fc2.w);
            out.push(&mut mlp.fc2.b);
        }
        for mlp in std::iter::once(&mut self.proj)
            .chain(self.proj_frag.iter_mut())
            .chain(self.pred.iter_mut())
        {
            out.push(&mut mlp.fc1.w);
            out.push(&mut mlp.fc1.b);
            out.push(&mut mlp.fc2.w);
            out.push(&mut mlp.fc2.b);
        }
        out
    }

    /// Immutable tensors in the same order.
    pub fn params(&self) -> Vec<&Tensor<F>> {
        self.named_params().into_iter().map(|(_, t)| t).collect()
    }

    /// Accumulates `other`'s tensors into `self`'s (gradient reduction).
    pub fn accumulate(&mut self, other: &Self) {
        let theirs = other.params();
        for (mine, theirs) in self.params_mut().into_iter().zip(theirs) {
            mine.add_assign(theirs);
        }
    }

    pub fn n_parameters(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    /// Casts every parameter (f64 gradient checks load f32 checkpoints).
    pub fn cast<G: Scalar>(&self) -> GinModel<G> {
        let mut out = GinModel::<G>::zeros(&self.config);
        let src = self.params();
        for (dst, src) in out.params_mut().into_iter().zip(src) {
            for (d, s) in dst.data.iter_mut().zip(src.data.iter()) {
                *d = G::from_f64(s.to_f64());
            }
        }
        out
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    // 53-bit mantissa in [0, 1).
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Standard normal via Box-Muller on the ChaCha stream.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = uniform(rng).max(1e-300);
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
