//! Contrastive losses over latent rows: plain NT-Xent, the
//! similarity-weighted variant, fragment-level NT-Xent, and their exact
//! gradients with respect to the latent vectors.
//!
//! Row convention: rows (2n, 2n+1) are the two views of molecule n, so the
//! positive partner of row i is `i ^ 1` unless an explicit pair index says
//! otherwise. Per-anchor terms use max-subtracted log-sum-exp; low
//! temperatures from the supported grid would overflow raw exponentials.

use crate::fingerprint::NegWeightMatrix;
use crate::nn::Scalar;
use thiserror::Error;

/// Loss hyperparameters. The default corner is the best classification
/// setting of the supported grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Apply the denominator weight to every k != i term, the positive
    /// included (the literal reading). `false` weights true negatives only.
    pub weight_positive_in_denominator: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            tau: 0.1,
            lambda1: 0.5,
            lambda2: 0.5,
            weight_positive_in_denominator: true,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.tau > 0.0) {
            return Err(LossError::BadConfig(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda1) {
            return Err(LossError::BadConfig(format!(
                "lambda1 must be in [0, 1], got {}",
                self.lambda1
            )));
        }
        if !(self.lambda2 > 0.0 && self.lambda2 <= 1.0) {
            return Err(LossError::BadConfig(format!(
                "lambda2 must be in (0, 1], got {}",
                self.lambda2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LossError {
    #[error("latent row {0} has near-zero norm; cosine undefined")]
    ZeroVector(usize),
    #[error("weight matrix is {got}x{got} but batch has {expected} rows")]
    WeightShapeMismatch { expected: usize, got: usize },
    #[error("fragment row {0} is not in exactly one positive pair")]
    UnpairedRow(usize),
    #[error("non-finite loss term")]
    NonFinite,
    #[error("latent matrix must hold an even number of rows, got {0}")]
    OddRows(usize),
    #[error("bad loss config: {0}")]
    BadConfig(String),
}

/// Positive fragment pairs: entry (a, b) links the same fragment of the
/// same molecule across its two views. Every row index in `0..2M` must
/// appear exactly once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FragmentPairIndex {
    pub pairs: Vec<(usize, usize)>,
}

impl FragmentPairIndex {
    pub fn n_rows(&self) -> usize {
        self.pairs.len() * 2
    }

    /// partner[i] for every row, or the first offending row.
    fn partners(&self) -> Result<Vec<usize>, LossError> {
        let n = self.n_rows();
        let mut partner = vec![usize::MAX; n];
        for &(a, b) in &self.pairs {
            if a >= n || b >= n || a == b {
                return Err(LossError::UnpairedRow(a.max(b)));
            }
            if partner[a] != usize::MAX {
                return Err(LossError::UnpairedRow(a));
            }
            if partner[b] != usize::MAX {
                return Err(LossError::UnpairedRow(b));
            }
            partner[a] = b;
            partner[b] = a;
        }
        if let Some(i) = partner.iter().position(|&p| p == usize::MAX) {
            return Err(LossError::UnpairedRow(i));
        }
        Ok(partner)
    }
}

/// Loss value plus its exact gradient w.r.t. the latent rows.
#[derive(Clone, Debug)]
pub struct LossOutput<F> {
    pub loss: F,
    pub grad: Vec<F>,
}

const MIN_NORM: f64 = 1e-12;

/// Row-normalizes and returns (unit rows, norms).
fn normalize<F: Scalar>(z: &[F], rows: usize, d: usize) -> Result<(Vec<F>, Vec<F>), LossError> {
    let mut unit = vec![F::zero(); rows * d];
    let mut norms = vec![F::zero(); rows];
    for r in 0..rows {
        let x = &z[r * d..(r + 1) * d];
        let mut sq = F::zero();
        for &v in x {
            sq += v * v;
        }
        let n = sq.sqrt();
        if n.to_f64() < MIN_NORM {
            return Err(LossError::ZeroVector(r));
        }
        norms[r] = n;
        let inv = F::one() / n;
        for (u, &v) in unit[r * d..(r + 1) * d].iter_mut().zip(x.iter()) {
            *u = v * inv;
        }
    }
    Ok((unit, norms))
}

/// Full cosine matrix of the unit rows.
fn cosine_matrix<F: Scalar>(unit: &[F], rows: usize, d: usize) -> Vec<F> {
    let mut c = vec![F::zero(); rows * rows];
    for i in 0..rows {
        for k in i..rows {
            let a = &unit[i * d..(i + 1) * d];
            let b = &unit[k * d..(k + 1) * d];
            let mut dot = F::zero();
            for (x, y) in a.iter().zip(b.iter()) {
                dot += *x * *y;
            }
            c[i * rows + k] = dot;
            c[k * rows + i] = dot;
        }
    }
    c
}

/// Chain rule through row normalization: converts d/d(unit rows) into
/// d/d(raw rows).
fn denormalize_grad<F: Scalar>(
    d_unit: &[F],
    unit: &[F],
    norms: &[F],
    rows: usize,
    d: usize,
) -> Vec<F> {
    let mut grad = vec![F::zero(); rows * d];
    for r in 0..rows {
        let g = &d_unit[r * d..(r + 1) * d];
        let u = &unit[r * d..(r + 1) * d];
        let mut dot = F::zero();
        for (x, y) in g.iter().zip(u.iter()) {
            dot += *x * *y;
        }
        let inv = F::one() / norms[r];
        for j in 0..d {
            grad[r * d + j] = (g[j] - dot * u[j]) * inv;
        }
    }
    grad
}

/// Shared unweighted kernel: NT-Xent with an arbitrary positive-partner
/// assignment. Plain and fragment NT-Xent are the same formula and differ
/// only in where the partner index comes from.
fn nt_xent_kernel<F: Scalar>(
    z: &[F],
    rows: usize,
    d: usize,
    partner: &[usize],
    tau: F,
) -> Result<LossOutput<F>, LossError> {
    let (unit, norms) = normalize(z, rows, d)?;
    let c = cosine_matrix(&unit, rows, d);
    let inv_tau = F::one() / tau;
    let inv_rows = F::one() / F::from_f64(rows as f64);

    let mut loss = F::zero();
    let mut d_cos = vec![F::zero(); rows * rows];
    let mut scores = vec![F::zero(); rows];
    for i in 0..rows {
        let j = partner[i];
        let mut m = F::from_f64(f64::NEG_INFINITY);
        for k in 0..rows {
            if k == i {
                continue;
            }
            let s = c[i * rows + k] * inv_tau;
            scores[k] = s;
            m = m.max(s);
        }
        let mut denom = F::zero();
        for k in 0..rows {
            if k == i {
                continue;
            }
            denom += (scores[k] - m).exp();
        }
        let log_denom = m + denom.ln();
        loss += (log_denom - c[i * rows + j] * inv_tau) * inv_rows;
        // dL_i / dC[i][k] = softmax_k / tau; the positive also gets -1/tau.
        let coeff = inv_rows * inv_tau;
        for k in 0..rows {
            if k == i {
                continue;
            }
            let p = (scores[k] - log_denom).exp();
            d_cos[i * rows + k] += coeff * p;
        }
        d_cos[i * rows + j] += -coeff;
    }
    if !loss.is_finite() {
        return Err(LossError::NonFinite);
    }

    // dC -> d(unit rows): C[i][k] = u_i . u_k, both orderings contribute.
    let mut d_unit = vec![F::zero(); rows * d];
    for i in 0..rows {
        for k in 0..rows {
            let g = d_cos[i * rows + k];
            if g == F::zero() {
                continue;
            }
            let uk = &unit[k * d..(k + 1) * d];
            let ui = &unit[i * d..(i + 1) * d];
            for j in 0..d {
                d_unit[i * d + j] += g * uk[j];
                d_unit[k * d + j] += g * ui[j];
            }
        }
    }
    let grad = denormalize_grad(&d_unit, &unit, &norms, rows, d);
    Ok(LossOutput { loss, grad })
}

fn paired_partners(rows: usize) -> Result<Vec<usize>, LossError> {
    if rows == 0 || rows % 2 != 0 {
        return Err(LossError::OddRows(rows));
    }
    Ok((0..rows).map(|i| i ^ 1).collect())
}

/// Plain NT-Xent over `2N x d` latent rows paired (2n, 2n+1); mean over all
/// 2N anchors, both orderings of every pair.
pub fn nt_xent<F: Scalar>(
    z: &[F],
    rows: usize,
    d: usize,
    tau: F,
) -> Result<LossOutput<F>, LossError> {
    nt_xent_kernel(z, rows, d, &paired_partners(rows)?, tau)
}

/// Similarity-weighted NT-Xent: every denominator term k != i scales its
/// cosine by `w_ik`, the positive's appearance included when
/// `weight_positive` is set (the literal reading; `false` leaves the
/// partner's denominator term unweighted).
pub fn weighted_nt_xent<F: Scalar>(
    z: &[F],
    rows: usize,
    d: usize,
    w: &NegWeightMatrix,
    tau: F,
    weight_positive: bool,
) -> Result<LossOutput<F>, LossError> {
    let partner = paired_partners(rows)?;
    if w.side != rows {
        return Err(LossError::WeightShapeMismatch {
            expected: rows,
            got: w.side,
        });
    }
    let (unit, norms) = normalize(z, rows, d)?;
    let c = cosine_matrix(&unit, rows, d);
    let inv_tau = F::one() / tau;
    let inv_rows = F::one() / F::from_f64(rows as f64);

    let mut loss = F::zero();
    let mut d_cos = vec![F::zero(); rows * rows];
    let mut scores = vec![F::zero(); rows];
    let mut weights = vec![F::zero(); rows];
    for i in 0..rows {
        let j = partner[i];
        let mut m = F::from_f64(f64::NEG_INFINITY);
        for k in 0..rows {
            if k == i {
                continue;
            }
            let wk = if k == j && !weight_positive {
                F::one()
            } else {
                F::from_f64(w.get(i, k))
            };
            weights[k] = wk;
            let s = wk * c[i * rows + k] * inv_tau;
            scores[k] = s;
            m = m.max(s);
        }
        let mut denom = F::zero();
        for k in 0..rows {
            if k == i {
                continue;
            }
            denom += (scores[k] - m).exp();
        }
        let log_denom = m + denom.ln();
        loss += (log_denom - c[i * rows + j] * inv_tau) * inv_rows;
        let coeff = inv_rows * inv_tau;
        for k in 0..rows {
            if k == i {
                continue;
            }
            let p = (scores[k] - log_denom).exp();
            d_cos[i * rows + k] += coeff * p * weights[k];
        }
        d_cos[i * rows + j] += -coeff;
    }
    if !loss.is_finite() {
        return Err(LossError::NonFinite);
    }

    let mut d_unit = vec![F::zero(); rows * d];
    for i in 0..rows {
        for k in 0..rows {
            let g = d_cos[i * rows + k];
            if g == F::zero() {
                continue;
            }
            let uk = &unit[k * d..(k + 1) * d];
            let ui = &unit[i * d..(i + 1) * d];
            for j in 0..d {
                d_unit[i * d + j] += g * uk[j];
                d_unit[k * d + j] += g * ui[j];
            }
        }
    }
    let grad = denormalize_grad(&d_unit, &unit, &norms, rows, d);
    Ok(LossOutput { loss, grad })
}

/// Fragment-level NT-Xent: the same unweighted formula over fragment
/// latents, with every non-partner fragment (intra- and inter-molecule) as
/// a negative.
pub fn fragment_nt_xent<F: Scalar>(
    zf: &[F],
    rows: usize,
    d: usize,
    pairs: &FragmentPairIndex,
    tau: F,
) -> Result<LossOutput<F>, LossError> {
    if pairs.n_rows() != rows {
        return Err(LossError::UnpairedRow(rows.min(pairs.n_rows())));
    }
    let partner = pairs.partners()?;
    nt_xent_kernel(zf, rows, d, &partner, tau)
}

/// Total pre-training objective: molecule term plus `lambda2` times the
/// fragment term.
pub fn total_loss<F: Scalar>(mol_term: F, frag_term: F, lambda2: F) -> Result<F, LossError> {
    if !mol_term.is_finite() || !frag_term.is_finite() {
        return Err(LossError::NonFinite);
    }
    let total = mol_term + lambda2 * frag_term;
    if !total.is_finite() {
        return Err(LossError::NonFinite);
    }
    Ok(total)
}
