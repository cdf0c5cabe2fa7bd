//! Exact reverse-mode gradients for the encoder and heads.
//!
//! Gradients accumulate into a zero-initialized [`GinModel`] mirror, so
//! embedding rows never touched by a batch stay exactly zero. All loops run
//! in fixed order; summation order does not depend on thread scheduling.

use super::forward::{EncodeTrace, MlpTrace};
use super::model::{GinModel, Mlp};
use super::tensor::{matvec_t_acc, outer_acc, Scalar};
use super::NnError;
use crate::fragment::FragmentMap;

/// Backward through one MLP head. `upstream` is `n x out_dim`; returns the
/// gradient w.r.t. the input rows (`n x in_dim`) and accumulates parameter
/// gradients into `grads`.
pub fn mlp_backward<F: Scalar>(
    mlp: &Mlp<F>,
    grads: &mut Mlp<F>,
    traces: &[MlpTrace<F>],
    upstream: &[F],
) -> Result<Vec<F>, NnError> {
    let out_dim = mlp.out_dim();
    let hidden_dim = mlp.hidden_dim();
    let in_dim = mlp.in_dim();
    if upstream.len() != traces.len() * out_dim {
        return Err(NnError::TraceMismatch {
            expected: traces.len() * out_dim,
            got: upstream.len(),
        });
    }
    let mut d_input = vec![F::zero(); traces.len() * in_dim];
    for (r, trace) in traces.iter().enumerate() {
        let g_out = &upstream[r * out_dim..(r + 1) * out_dim];
        // fc2: y = W2 hidden + b2.
        outer_acc(&mut grads.fc2.w, g_out, &trace.hidden);
        for (b, &g) in grads.fc2.b.data.iter_mut().zip(g_out.iter()) {
            *b += g;
        }
        let mut d_hidden = vec![F::zero(); hidden_dim];
        matvec_t_acc(&mlp.fc2.w, g_out, &mut d_hidden);
        // Rectifier: trace.hidden holds relu output, zero means inactive.
        for (dh, &h) in d_hidden.iter_mut().zip(trace.hidden.iter()) {
            if h <= F::zero() {
                *dh = F::zero();
            }
        }
        // fc1.
        outer_acc(&mut grads.fc1.w, &d_hidden, &trace.input);
        for (b, &g) in grads.fc1.b.data.iter_mut().zip(d_hidden.iter()) {
            *b += g;
        }
        matvec_t_acc(
            &mlp.fc1.w,
            &d_hidden,
            &mut d_input[r * in_dim..(r + 1) * in_dim],
        );
    }
    Ok(d_input)
}

/// Backward of the graph-mean readout: spreads `d_graph` (length d) evenly
/// over the node-state gradient.
pub fn readout_graph_backward<F: Scalar>(d_graph: &[F], n_atoms: usize, d_nodes: &mut [F]) {
    let d = d_graph.len();
    let inv = F::one() / F::from_f64(n_atoms as f64);
    for v in 0..n_atoms {
        let row = &mut d_nodes[v * d..(v + 1) * d];
        for (o, &g) in row.iter_mut().zip(d_graph.iter()) {
            *o += g * inv;
        }
    }
}

/// Backward of the fragment-mean readout.
pub fn readout_fragments_backward<F: Scalar>(
    d_rows: &[F],
    fm: &FragmentMap,
    d: usize,
    d_nodes: &mut [F],
) {
    let mut counts = vec![0usize; fm.n_fragments];
    for &f in &fm.assignment {
        counts[f] += 1;
    }
    for (v, &f) in fm.assignment.iter().enumerate() {
        let inv = F::one() / F::from_f64(counts[f] as f64);
        let src = &d_rows[f * d..(f + 1) * d];
        let dst = &mut d_nodes[v * d..(v + 1) * d];
        for (o, &g) in dst.iter_mut().zip(src.iter()) {
            *o += g * inv;
        }
    }
}

/// Backward through the K encoder layers and the embedding lookups.
///
/// `d_nodes` is the gradient on the final node states (`n x d`); parameter
/// gradients accumulate into `grads`, which must mirror `model`'s shapes.
pub fn encode_backward<F: Scalar>(
    model: &GinModel<F>,
    grads: &mut GinModel<F>,
    trace: &EncodeTrace<F>,
    d_nodes: &[F],
) -> Result<(), NnError> {
    let d = model.config.d;
    let n = trace.fg.n_atoms;
    if d_nodes.len() != n * d {
        return Err(NnError::TraceMismatch {
            expected: n * d,
            got: d_nodes.len(),
        });
    }
    if trace.layers.len() != model.layers.len() {
        return Err(NnError::TraceMismatch {
            expected: model.layers.len(),
            got: trace.layers.len(),
        });
    }
    let mut d_h = d_nodes.to_vec();
    let mut d_eps = vec![F::zero(); trace.eps.len()];
    for (k, layer_trace) in trace.layers.iter().enumerate().rev() {
        let mlp = &model.layers[k];
        let gmlp = &mut grads.layers[k];
        let hidden_dim = mlp.hidden_dim();
        // Through the combine MLP, node by node.
        let mut d_s = vec![F::zero(); n * d];
        for v in 0..n {
            let g_out = &d_h[v * d..(v + 1) * d];
            let hidden = &layer_trace.hidden[v * hidden_dim..(v + 1) * hidden_dim];
            outer_acc(&mut gmlp.fc2.w, g_out, hidden);
            for (b, &g) in gmlp.fc2.b.data.iter_mut().zip(g_out.iter()) {
                *b += g;
            }
            let mut d_hidden = vec![F::zero(); hidden_dim];
            matvec_t_acc(&mlp.fc2.w, g_out, &mut d_hidden);
            for (dh, &h) in d_hidden.iter_mut().zip(hidden.iter()) {
                if h <= F::zero() {
                    *dh = F::zero();
                }
            }
            let s_v = &layer_trace.s[v * d..(v + 1) * d];
            outer_acc(&mut gmlp.fc1.w, &d_hidden, s_v);
            for (b, &g) in gmlp.fc1.b.data.iter_mut().zip(d_hidden.iter()) {
                *b += g;
            }
            matvec_t_acc(&mlp.fc1.w, &d_hidden, &mut d_s[v * d..(v + 1) * d]);
        }
        // s_v = h_v + a_v: identity branch plus arc messages.
        let mut d_prev = d_s.clone();
        for (ai, arc) in trace.fg.arcs.iter().enumerate() {
            let mask = &layer_trace.msg_mask[ai * d..(ai + 1) * d];
            let g_dst = &d_s[arc.dst * d..(arc.dst + 1) * d];
            let de = &mut d_eps[ai * d..(ai + 1) * d];
            for j in 0..d {
                if mask[j] {
                    de[j] += g_dst[j];
                }
            }
            let g_src = &mut d_prev[arc.src * d..(arc.src + 1) * d];
            for j in 0..d {
                if mask[j] {
                    g_src[j] += g_dst[j];
                }
            }
        }
        d_h = d_prev;
    }
    // Embedding rows: h0 = sum of node tables, eps = sum of edge tables.
    let nf = trace.fg.n_node_features();
    for v in 0..n {
        let g = &d_h[v * d..(v + 1) * d];
        for slot in 0..nf {
            let code = trace.fg.node_codes[v * nf + slot] as usize;
            let row = grads.node_tables[slot].row_mut(code);
            for (o, &x) in row.iter_mut().zip(g.iter()) {
                *o += x;
            }
        }
    }
    let ne = trace.fg.n_edge_features();
    for (ai, _) in trace.fg.arcs.iter().enumerate() {
        let g = &d_eps[ai * d..(ai + 1) * d];
        for slot in 0..ne {
            let code = trace.fg.edge_codes[ai * ne + slot] as usize;
            let row = grads.edge_tables[slot].row_mut(code);
            for (o, &x) in row.iter_mut().zip(g.iter()) {
                *o += x;
            }
        }
    }
    Ok(())
}
