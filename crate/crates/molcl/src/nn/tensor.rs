//! Minimal dense-tensor plumbing shared by the encoder and heads.
//!
//! Training runs in f32; gradient checks run the same code in f64, so
//! everything numeric is generic over [`Scalar`].

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Floating-point scalar the model can run on.
pub trait Scalar:
    Copy
    + Default
    + PartialOrd
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;
    fn max(self, other: Self) -> Self;
}

impl Scalar for f32 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn exp(self) -> Self {
        f32::exp(self)
    }
    fn ln(self) -> Self {
        f32::ln(self)
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
    fn max(self, other: Self) -> Self {
        f32::max(self, other)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn max(self, other: Self) -> Self {
        f64::max(self, other)
    }
}

/// Dense row-major matrix; vectors are `n x 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill_zero(&mut self) {
        for v in &mut self.data {
            *v = F::zero();
        }
    }

    /// `self += other`, shapes must match.
    pub fn add_assign(&mut self, other: &Tensor<F>) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }
}

/// `out += w @ x` with `w: out_dim x in_dim`.
pub fn matvec_acc<F: Scalar>(w: &Tensor<F>, x: &[F], out: &mut [F]) {
    debug_assert_eq!(w.cols, x.len());
    debug_assert_eq!(w.rows, out.len());
    for (r, o) in out.iter_mut().enumerate() {
        let row = w.row(r);
        let mut acc = F::zero();
        for (a, b) in row.iter().zip(x.iter()) {
            acc += *a * *b;
        }
        *o += acc;
    }
}

/// `out += w^T @ g` with `w: out_dim x in_dim`, `g: out_dim`.
pub fn matvec_t_acc<F: Scalar>(w: &Tensor<F>, g: &[F], out: &mut [F]) {
    debug_assert_eq!(w.rows, g.len());
    debug_assert_eq!(w.cols, out.len());
    for (r, &gr) in g.iter().enumerate() {
        let row = w.row(r);
        for (o, &wv) in out.iter_mut().zip(row.iter()) {
            *o += wv * gr;
        }
    }
}

/// Rank-one update `dw += g (outer) x` with `dw: out_dim x in_dim`.
pub fn outer_acc<F: Scalar>(dw: &mut Tensor<F>, g: &[F], x: &[F]) {
    debug_assert_eq!(dw.rows, g.len());
    debug_assert_eq!(dw.cols, x.len());
    for (r, &gr) in g.iter().enumerate() {
        let row = dw.row_mut(r);
        for (o, &xv) in row.iter_mut().zip(x.iter()) {
            *o += gr * xv;
        }
    }
}

pub fn add_slices<F: Scalar>(acc: &mut [F], src: &[F]) {
    debug_assert_eq!(acc.len(), src.len());
    for (a, &b) in acc.iter_mut().zip(src.iter()) {
        *a += b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_against_hand_numbers() {
        // [[1, 2], [3, 4]] @ [5, 6] = [17, 39]
        let w = Tensor {
            rows: 2,
            cols: 2,
            data: vec![1.0f64, 2.0, 3.0, 4.0],
        };
        let mut out = vec![0.0; 2];
        matvec_acc(&w, &[5.0, 6.0], &mut out);
        assert_eq!(out, vec![17.0, 39.0]);
        // Transposed: w^T @ [1, 1] = [4, 6]
        let mut out_t = vec![0.0; 2];
        matvec_t_acc(&w, &[1.0, 1.0], &mut out_t);
        assert_eq!(out_t, vec![4.0, 6.0]);
    }

    #[test]
    fn outer_accumulates() {
        let mut dw = Tensor::<f64>::zeros(2, 3);
        outer_acc(&mut dw, &[1.0, 2.0], &[3.0, 4.0, 5.0]);
        outer_acc(&mut dw, &[1.0, 0.0], &[1.0, 1.0, 1.0]);
        assert_eq!(dw.data, vec![4.0, 5.0, 6.0, 6.0, 8.0, 10.0]);
    }
}
