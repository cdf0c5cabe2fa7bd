//! Contrastive batch assembly and the fused forward/backward step.
//!
//! A batch takes N source molecules to 2N augmented views laid out
//! (2n, 2n+1); fragment latent rows group per molecule as all view-A
//! fragments then all view-B fragments. Per-view encoder work fans out
//! across a worker pool in fixed chunks and gradients reduce in chunk
//! order, so results are bit-stable for any worker count.

use super::TrainError;
use crate::augment::{apply, sample_augmentation, view_seed};
use crate::chem::{featurize, parse_smiles, FeatureSet, FeaturizedGraph, MolGraph};
use crate::fingerprint::{build_weight_matrix_from_fps, ecfp, Fingerprint, NegWeightMatrix};
use crate::fragment::{brics_partition, FragmentMap};
use crate::loss::{
    fragment_nt_xent, total_loss, weighted_nt_xent, FragmentPairIndex, LossConfig,
};
use crate::nn::{
    encode, encode_backward, mlp_backward, project, project_fragments, readout_fragments,
    readout_fragments_backward, readout_graph, readout_graph_backward, EncodeTrace, GinModel,
};
use rayon::prelude::*;

/// Everything derived once per molecule and reused across epochs.
#[derive(Clone, Debug)]
pub struct MolRecord {
    pub line: usize,
    pub smiles: String,
    pub mol: MolGraph,
    pub fg: FeaturizedGraph,
    pub fingerprint: Fingerprint,
    pub fragments: FragmentMap,
}

/// Parses and featurizes a corpus slice, computing fingerprints and
/// fragment maps once per molecule. Every-run spot checks recompute a 1%
/// sample from scratch and compare.
pub fn build_cache(
    entries: &[(usize, &str)],
    feature_set: FeatureSet,
    radius: u32,
    nbits: usize,
) -> Result<Vec<MolRecord>, TrainError> {
    let records: Result<Vec<MolRecord>, TrainError> = entries
        .par_iter()
        .map(|&(line, smiles)| {
            let mol = parse_smiles(smiles).map_err(|e| TrainError::Parse {
                line,
                smiles: smiles.to_string(),
                error: e,
            })?;
            let fg = featurize(&mol, feature_set).map_err(|e| TrainError::Featurize {
                line,
                error: e,
            })?;
            let fingerprint = ecfp(&mol, radius, nbits).map_err(TrainError::Fingerprint)?;
            let fragments = brics_partition(&mol);
            Ok(MolRecord {
                line,
                smiles: smiles.to_string(),
                mol,
                fg,
                fingerprint,
                fragments,
            })
        })
        .collect();
    let records = records?;
    // Cache soundness spot check on ~1% of molecules.
    let step = records.len().max(1).min(100);
    for rec in records.iter().step_by(records.len() / step + 1) {
        let fp = ecfp(&rec.mol, radius, nbits).map_err(TrainError::Fingerprint)?;
        debug_assert_eq!(fp, rec.fingerprint);
        let fm = brics_partition(&rec.mol);
        if fp != rec.fingerprint || fm != rec.fragments {
            return Err(TrainError::Domain(
                "cache inconsistency: recomputation differs".into(),
            ));
        }
    }
    Ok(records)
}

/// One contrastive batch: augmented views, weights, and fragment pairing.
pub struct BatchPlan {
    /// Indices into the cache, length N.
    pub sources: Vec<usize>,
    /// Augmented views, length 2N; view i comes from sources[i / 2].
    pub views: Vec<FeaturizedGraph>,
    pub weights: NegWeightMatrix,
    pub pairs: FragmentPairIndex,
    /// Fragment row layout: (view index, fragment id) per latent row.
    pub fragment_rows: Vec<(usize, usize)>,
    pub batch_seed: u64,
}

/// Builds the plan for `sources` (indices into `cache`).
pub fn build_batch(
    cache: &[MolRecord],
    sources: &[usize],
    lambda1: f64,
    batch_seed: u64,
) -> Result<BatchPlan, TrainError> {
    let mut views = Vec::with_capacity(sources.len() * 2);
    for (n, &src) in sources.iter().enumerate() {
        let rec = &cache[src];
        for view in 0..2 {
            let seed = view_seed(batch_seed, n, view);
            let spec = sample_augmentation(&rec.mol, seed);
            views.push(apply(&rec.fg, &spec).map_err(TrainError::Augment)?);
        }
    }
    let fps: Vec<Fingerprint> = sources
        .iter()
        .map(|&s| cache[s].fingerprint.clone())
        .collect();
    let weights = build_weight_matrix_from_fps(&fps, lambda1).map_err(TrainError::Fingerprint)?;

    // Fragment rows: per molecule, view A's fragments then view B's.
    let mut fragment_rows = Vec::new();
    let mut pairs = Vec::new();
    for (n, &src) in sources.iter().enumerate() {
        let m = cache[src].fragments.n_fragments;
        let base = fragment_rows.len();
        for f in 0..m {
            fragment_rows.push((2 * n, f));
        }
        for f in 0..m {
            fragment_rows.push((2 * n + 1, f));
        }
        for f in 0..m {
            pairs.push((base + f, base + m + f));
        }
    }
    Ok(BatchPlan {
        sources: sources.to_vec(),
        views,
        weights,
        pairs: FragmentPairIndex { pairs },
        fragment_rows,
        batch_seed,
    })
}

/// Losses of one batch plus (optionally) the parameter gradients.
pub struct StepOutput {
    pub loss_total: f32,
    pub loss_mol: f32,
    pub loss_frag: f32,
    pub grads: Option<GinModel<f32>>,
}

/// Runs the contrastive objective over one batch: encode both views of
/// every molecule, pool molecule and fragment latents, evaluate the
/// weighted and fragment losses, and (when `with_grads`) backpropagate into
/// a fresh gradient container.
pub fn contrastive_step(
    model: &GinModel<f32>,
    cache: &[MolRecord],
    plan: &BatchPlan,
    loss_cfg: &LossConfig,
    with_grads: bool,
) -> Result<StepOutput, TrainError> {
    let d = model.config.d;
    let d_z = model.config.d_z;
    let n_views = plan.views.len();

    // Forward encoders in parallel; order-preserving collect.
    let traces: Result<Vec<EncodeTrace<f32>>, TrainError> = plan
        .views
        .par_iter()
        .map(|fg| encode(model, fg).map_err(TrainError::Nn))
        .collect();
    let traces = traces?;

    // Readouts.
    let mut graph_rows = vec![0.0f32; n_views * d];
    for (v, trace) in traces.iter().enumerate() {
        let g = readout_graph(&trace.out, trace.fg.n_atoms, d);
        graph_rows[v * d..(v + 1) * d].copy_from_slice(&g);
    }
    let mut frag_rows = vec![0.0f32; plan.fragment_rows.len() * d];
    {
        // Fragment rows are contiguous per (molecule, view) block.
        let mut row = 0;
        for (n, &src) in plan.sources.iter().enumerate() {
            let fm = &cache[src].fragments;
            for view in 0..2 {
                let trace = &traces[2 * n + view];
                let rows =
                    readout_fragments(&trace.out, trace.fg.n_atoms, d, fm).map_err(TrainError::Nn)?;
                frag_rows[row * d..row * d + rows.len()].copy_from_slice(&rows);
                row += fm.n_fragments;
            }
        }
    }

    // Projection heads.
    let (z_mol, mol_traces) = project(model, &graph_rows);
    let (z_frag, frag_traces) = project_fragments(model, &frag_rows);

    // Losses.
    let tau = loss_cfg.tau as f32;
    let mol_out = weighted_nt_xent(
        &z_mol,
        n_views,
        d_z,
        &plan.weights,
        tau,
        loss_cfg.weight_positive_in_denominator,
    )
    .map_err(TrainError::Loss)?;
    let frag_out = fragment_nt_xent(&z_frag, plan.fragment_rows.len(), d_z, &plan.pairs, tau)
        .map_err(TrainError::Loss)?;
    let lambda2 = loss_cfg.lambda2 as f32;
    let loss_total = total_loss(mol_out.loss, frag_out.loss, lambda2).map_err(TrainError::Loss)?;

    if !with_grads {
        return Ok(StepOutput {
            loss_total,
            loss_mol: mol_out.loss,
            loss_frag: frag_out.loss,
            grads: None,
        });
    }

    let mut grads = model.zeros_like();
    // Heads first: molecule latents through proj, fragment latents through
    // the fragment head (the same tensors when shared).
    let d_graph_rows = mlp_backward(&model.proj, &mut grads.proj, &mol_traces, &mol_out.grad)
        .map_err(TrainError::Nn)?;
    let mut frag_grad_scaled = frag_out.grad;
    for g in &mut frag_grad_scaled {
        *g *= lambda2;
    }
    let d_frag_rows = {
        let (head, ghead) = match (&model.proj_frag, &mut grads.proj_frag) {
            (Some(h), Some(g)) => (h, g),
            _ => (&model.proj, &mut grads.proj),
        };
        mlp_backward(head, ghead, &frag_traces, &frag_grad_scaled).map_err(TrainError::Nn)?
    };

    // Per-view node-state gradients, then encoder backward reduced over a
    // fixed binary tree: the summation shape depends only on the view count,
    // so gradients are bit-identical for any worker count.
    let mut frag_row_offsets = vec![0usize; n_views];
    {
        let mut row = 0;
        for (n, &src) in plan.sources.iter().enumerate() {
            let m = cache[src].fragments.n_fragments;
            frag_row_offsets[2 * n] = row;
            frag_row_offsets[2 * n + 1] = row + m;
            row += 2 * m;
        }
    }
    struct BwdCtx<'a> {
        model: &'a GinModel<f32>,
        cache: &'a [MolRecord],
        plan: &'a BatchPlan,
        traces: &'a [EncodeTrace<f32>],
        d_graph_rows: &'a [f32],
        d_frag_rows: &'a [f32],
        frag_row_offsets: &'a [usize],
        d: usize,
        leaf: usize,
    }
    fn backward_tree(ctx: &BwdCtx, lo: usize, hi: usize) -> Result<GinModel<f32>, TrainError> {
        if hi - lo <= ctx.leaf {
            let mut part = ctx.model.zeros_like();
            for v in lo..hi {
                let trace = &ctx.traces[v];
                let n_atoms = trace.fg.n_atoms;
                let mut d_nodes = vec![0.0f32; n_atoms * ctx.d];
                readout_graph_backward(
                    &ctx.d_graph_rows[v * ctx.d..(v + 1) * ctx.d],
                    n_atoms,
                    &mut d_nodes,
                );
                let src = ctx.plan.sources[v / 2];
                let fm = &ctx.cache[src].fragments;
                let off = ctx.frag_row_offsets[v];
                readout_fragments_backward(
                    &ctx.d_frag_rows[off * ctx.d..(off + fm.n_fragments) * ctx.d],
                    fm,
                    ctx.d,
                    &mut d_nodes,
                );
                encode_backward(ctx.model, &mut part, trace, &d_nodes).map_err(TrainError::Nn)?;
            }
            return Ok(part);
        }
        let mid = lo + (hi - lo) / 2;
        let (left, right) = rayon::join(
            || backward_tree(ctx, lo, mid),
            || backward_tree(ctx, mid, hi),
        );
        let mut left = left?;
        left.accumulate(&right?);
        Ok(left)
    }
    let ctx = BwdCtx {
        model,
        cache,
        plan,
        traces: &traces,
        d_graph_rows: &d_graph_rows,
        d_frag_rows: &d_frag_rows,
        frag_row_offsets: &frag_row_offsets,
        d,
        leaf: 4,
    };
    grads.accumulate(&backward_tree(&ctx, 0, n_views)?);

    Ok(StepOutput {
        loss_total,
        loss_mol: mol_out.loss,
        loss_frag: frag_out.loss,
        grads: Some(grads),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cache_of(smiles: &[&str]) -> Vec<MolRecord> {
        let entries: Vec<(usize, &str)> = smiles.iter().enumerate().map(|(i, &s)| (i + 1, s)).collect();
        build_cache(&entries, FeatureSet::Extended, 2, 512).unwrap()
    }

    #[test]
    fn batch_plan_layout() {
        let cache = cache_of(&["CCO", "CCOC(=O)c1ccccc1"]);
        let plan = build_batch(&cache, &[0, 1], 0.5, 99).unwrap();
        assert_eq!(plan.views.len(), 4);
        // Ethyl benzoate has 3 fragments, ethanol 1: rows = 2*1 + 2*3.
        assert_eq!(plan.fragment_rows.len(), 8);
        assert_eq!(plan.pairs.pairs.len(), 4);
        // Ethanol's pair links its two views' single fragments.
        assert_eq!(plan.pairs.pairs[0], (0, 1));
        // Ethyl benzoate's rows: views interleave A-block then B-block.
        assert_eq!(plan.fragment_rows[2], (2, 0));
        assert_eq!(plan.fragment_rows[5], (3, 0));
        assert_eq!(plan.pairs.pairs[1], (2, 5));
        assert_eq!(plan.weights.side, 4);
    }

    #[test]
    fn batch_is_seed_deterministic() {
        let cache = cache_of(&["CCO", "c1ccccc1", "CC(=O)NC"]);
        let a = build_batch(&cache, &[0, 1, 2], 0.5, 7).unwrap();
        let b = build_batch(&cache, &[0, 1, 2], 0.5, 7).unwrap();
        for (x, y) in a.views.iter().zip(b.views.iter()) {
            assert_eq!(x.node_codes, y.node_codes);
            assert_eq!(x.arcs.len(), y.arcs.len());
        }
        let c = build_batch(&cache, &[0, 1, 2], 0.5, 8).unwrap();
        assert!(a
            .views
            .iter()
            .zip(c.views.iter())
            .any(|(x, y)| x.node_codes != y.node_codes || x.arcs.len() != y.arcs.len()));
    }

    #[test]
    fn step_losses_finite_and_grads_nonzero() {
        let cache = cache_of(&["CCO", "c1ccccc1", "CC(=O)NC", "CCc1ccccc1"]);
        let cfg = crate::nn::ModelConfig::pretrain(FeatureSet::Extended, 16, 8, 2);
        let model = GinModel::<f32>::init(&cfg, 3);
        let plan = build_batch(&cache, &[0, 1, 2, 3], 0.5, 11).unwrap();
        let out = contrastive_step(&model, &cache, &plan, &LossConfig::default(), true).unwrap();
        assert!(out.loss_total.is_finite());
        assert!(out.loss_mol.is_finite() && out.loss_frag.is_finite());
        let grads = out.grads.unwrap();
        // Every layer and head tensor touched by the batch has gradient.
        for (name, t) in grads.named_params() {
            let norm: f32 = t.data.iter().map(|v| v * v).sum();
            if name.starts_with("layer") || name.starts_with("proj") {
                assert!(norm > 0.0, "{name} has zero gradient");
            }
        }
    }

    #[test]
    fn grads_identical_for_any_worker_count() {
        // The tree reduction's shape depends only on the view count, so the
        // same step in 1-thread and 4-thread pools is bit-identical.
        let cache = cache_of(&["CCO", "c1ccccc1", "CC(=O)NC", "CCc1ccccc1"]);
        let cfg = crate::nn::ModelConfig::pretrain(FeatureSet::Extended, 8, 4, 2);
        let model = GinModel::<f32>::init(&cfg, 5);
        let plan = build_batch(&cache, &[0, 1, 2, 3], 0.5, 13).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    contrastive_step(&model, &cache, &plan, &LossConfig::default(), true).unwrap()
                })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.loss_total.to_bits(), b.loss_total.to_bits());
        let ga = a.grads.unwrap();
        let gb = b.grads.unwrap();
        for (x, y) in ga.params().iter().zip(gb.params().iter()) {
            for (p, q) in x.data.iter().zip(y.data.iter()) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
    }
}
