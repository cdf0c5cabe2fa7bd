//! Forward passes with traces for exact backpropagation.
//!
//! Message passing follows `a_v = sum over incoming arcs of relu(h_u + eps_uv)`
//! and `h_v = MLP(h_v + a_v)`; the readout is the arithmetic mean over all
//! nodes, masked atoms included. Reductions run in fixed arc/node order, so
//! identical inputs give bit-identical outputs.

use super::model::{GinModel, Mlp};
use super::tensor::{add_slices, matvec_acc, Scalar};
use super::NnError;
use crate::chem::FeaturizedGraph;
use crate::fragment::FragmentMap;

/// Per-layer intermediates kept for the backward pass.
#[derive(Clone, Debug)]
pub struct LayerTrace<F> {
    /// Node states entering the layer, `n x d`.
    pub input: Vec<F>,
    /// Rectifier mask of each arc message, `n_arcs x d`.
    pub msg_mask: Vec<bool>,
    /// MLP input `h + a`, `n x d`.
    pub s: Vec<F>,
    /// Hidden activations `relu(W1 s + b1)`, `n x 2d`.
    pub hidden: Vec<F>,
}

/// Everything the encoder backward pass needs, tied to one featurized view.
#[derive(Clone, Debug)]
pub struct EncodeTrace<F> {
    pub fg: FeaturizedGraph,
    /// Summed edge embeddings per arc, `n_arcs x d`.
    pub eps: Vec<F>,
    pub layers: Vec<LayerTrace<F>>,
    /// Final node states, `n x d`.
    pub out: Vec<F>,
}

fn check_codes(model_vocabs: &[(&'static str, u16)], codes: &[u16], width: usize) -> Result<(), NnError> {
    for chunk in codes.chunks(width) {
        for (slot, &code) in chunk.iter().enumerate() {
            let vocab = model_vocabs[slot].1;
            if code >= vocab {
                return Err(NnError::CodeOutOfVocab {
                    feature: model_vocabs[slot].0,
                    code,
                    vocab,
                });
            }
        }
    }
    Ok(())
}

/// Runs the K-layer encoder over one featurized view, returning final node
/// states (inside the trace) for readout.
pub fn encode<F: Scalar>(model: &GinModel<F>, fg: &FeaturizedGraph) -> Result<EncodeTrace<F>, NnError> {
    if fg.feature_set != model.config.feature_set {
        return Err(NnError::FeatureSetMismatch {
            model: model.config.feature_set.name(),
            graph: fg.feature_set.name(),
        });
    }
    let nf = fg.n_node_features();
    let ne = fg.n_edge_features();
    check_codes(model.config.feature_set.node_features(), &fg.node_codes, nf)?;
    check_codes(model.config.feature_set.edge_features(), &fg.edge_codes, ne)?;

    let d = model.config.d;
    let n = fg.n_atoms;
    let n_arcs = fg.arcs.len();

    // h0: summed node-feature embeddings.
    let mut h = vec![F::zero(); n * d];
    for v in 0..n {
        let row = &mut h[v * d..(v + 1) * d];
        for (slot, &code) in fg.node_row(v).iter().enumerate() {
            add_slices(row, model.node_tables[slot].row(code as usize));
        }
    }
    // eps: summed edge-feature embeddings per arc.
    let mut eps = vec![F::zero(); n_arcs * d];
    for a in 0..n_arcs {
        let row = &mut eps[a * d..(a + 1) * d];
        for (slot, &code) in fg.edge_row(a).iter().enumerate() {
            add_slices(row, model.edge_tables[slot].row(code as usize));
        }
    }

    let mut layers = Vec::with_capacity(model.layers.len());
    for mlp in &model.layers {
        let input = h.clone();
        // Aggregation: s = h, then s_v += relu(h_u + eps) per incoming arc.
        let mut s = h.clone();
        let mut msg_mask = vec![false; n_arcs * d];
        for (ai, arc) in fg.arcs.iter().enumerate() {
            let src = &input[arc.src * d..(arc.src + 1) * d];
            let ep = &eps[ai * d..(ai + 1) * d];
            let dst = &mut s[arc.dst * d..(arc.dst + 1) * d];
            let mask = &mut msg_mask[ai * d..(ai + 1) * d];
            for j in 0..d {
                let m = src[j] + ep[j];
                if m > F::zero() {
                    dst[j] += m;
                    mask[j] = true;
                }
            }
        }
        // Combine: h' = fc2(relu(fc1 s)).
        let hidden_dim = mlp.hidden_dim();
        let mut hidden = vec![F::zero(); n * hidden_dim];
        let mut out = vec![F::zero(); n * d];
        for v in 0..n {
            let sv = &s[v * d..(v + 1) * d];
            let hv = &mut hidden[v * hidden_dim..(v + 1) * hidden_dim];
            hv.copy_from_slice(&mlp.fc1.b.data);
            matvec_acc(&mlp.fc1.w, sv, hv);
            for x in hv.iter_mut() {
                if *x < F::zero() {
                    *x = F::zero();
                }
            }
            let ov = &mut out[v * d..(v + 1) * d];
            ov.copy_from_slice(&mlp.fc2.b.data);
            matvec_acc(&mlp.fc2.w, hv, ov);
        }
        layers.push(LayerTrace {
            input,
            msg_mask,
            s,
            hidden,
        });
        h = out;
    }

    Ok(EncodeTrace {
        fg: fg.clone(),
        eps,
        layers,
        out: h,
    })
}

/// Mean of the final node states over all atoms.
pub fn readout_graph<F: Scalar>(node_states: &[F], n_atoms: usize, d: usize) -> Vec<F> {
    debug_assert_eq!(node_states.len(), n_atoms * d);
    let mut g = vec![F::zero(); d];
    for v in 0..n_atoms {
        add_slices(&mut g, &node_states[v * d..(v + 1) * d]);
    }
    let inv = F::one() / F::from_f64(n_atoms as f64);
    for x in &mut g {
        *x = *x * inv;
    }
    g
}

/// Per-fragment means; row f averages the nodes with assignment f.
pub fn readout_fragments<F: Scalar>(
    node_states: &[F],
    n_atoms: usize,
    d: usize,
    fm: &FragmentMap,
) -> Result<Vec<F>, NnError> {
    if fm.assignment.len() != n_atoms {
        return Err(NnError::PartitionMismatch {
            atoms: n_atoms,
            assigned: fm.assignment.len(),
        });
    }
    let mut rows = vec![F::zero(); fm.n_fragments * d];
    let mut counts = vec![0usize; fm.n_fragments];
    for v in 0..n_atoms {
        let f = fm.assignment[v];
        counts[f] += 1;
        add_slices(
            &mut rows[f * d..(f + 1) * d],
            &node_states[v * d..(v + 1) * d],
        );
    }
    for f in 0..fm.n_fragments {
        let inv = F::one() / F::from_f64(counts[f] as f64);
        for x in &mut rows[f * d..(f + 1) * d] {
            *x = *x * inv;
        }
    }
    Ok(rows)
}

/// Trace of one MLP application to one row.
#[derive(Clone, Debug)]
pub struct MlpTrace<F> {
    pub input: Vec<F>,
    pub hidden: Vec<F>,
}

/// Applies an MLP head row-wise: affine, rectifier, affine. No output
/// normalization; the cosine in the loss handles scale.
pub fn mlp_rows<F: Scalar>(mlp: &Mlp<F>, rows: &[F], width: usize) -> (Vec<F>, Vec<MlpTrace<F>>) {
    debug_assert_eq!(width, mlp.in_dim());
    let n = rows.len() / width;
    let out_dim = mlp.out_dim();
    let mut out = vec![F::zero(); n * out_dim];
    let mut traces = Vec::with_capacity(n);
    for r in 0..n {
        let x = &rows[r * width..(r + 1) * width];
        let mut hidden = mlp.fc1.b.data.clone();
        matvec_acc(&mlp.fc1.w, x, &mut hidden);
        for h in hidden.iter_mut() {
            if *h < F::zero() {
                *h = F::zero();
            }
        }
        let o = &mut out[r * out_dim..(r + 1) * out_dim];
        o.copy_from_slice(&mlp.fc2.b.data);
        matvec_acc(&mlp.fc2.w, &hidden, o);
        traces.push(MlpTrace {
            input: x.to_vec(),
            hidden,
        });
    }
    (out, traces)
}

/// Projection head over graph- or fragment-level rows.
pub fn project<F: Scalar>(model: &GinModel<F>, rows: &[F]) -> (Vec<F>, Vec<MlpTrace<F>>) {
    mlp_rows(&model.proj, rows, model.config.d)
}

/// Projection head used for fragment rows (shared with [`project`] unless
/// the model was built with a separate fragment head).
pub fn project_fragments<F: Scalar>(model: &GinModel<F>, rows: &[F]) -> (Vec<F>, Vec<MlpTrace<F>>) {
    mlp_rows(model.fragment_head(), rows, model.config.d)
}

/// Prediction head mapping representations to targets (logits for
/// classification tasks).
pub fn predict<F: Scalar>(model: &GinModel<F>, rows: &[F]) -> Result<(Vec<F>, Vec<MlpTrace<F>>), NnError> {
    let head = model.pred.as_ref().ok_or(NnError::MissingPredictionHead)?;
    Ok(mlp_rows(head, rows, model.config.d))
}
