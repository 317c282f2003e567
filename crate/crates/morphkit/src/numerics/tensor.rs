//! Dense row-major f64 tensors.
//!
//! Storage is a flat `Arc<Vec<f64>>`, so clones are cheap and tensors are
//! immutable after construction. All reductions accumulate in f64.

use std::sync::Arc;

use super::NumericsError;

/// Dense n-dimensional array, row-major, 64-bit.
#[derive(Clone, Debug)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Arc<Vec<f64>>,
}

impl PartialEq for Tensor {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && *self.data == *other.data
    }
}

impl Tensor {
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NumericsError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(NumericsError::ShapeMismatch {
                context: "from_vec",
                detail: format!("shape {:?} needs {} values, got {}", shape, n, data.len()),
            });
        }
        Ok(Self { shape: shape.to_vec(), data: Arc::new(data) })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: Arc::new(vec![0.0; n]) }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: Arc::new(vec![value; n]) }
    }

    pub fn scalar(value: f64) -> Self {
        Self { shape: vec![], data: Arc::new(vec![value]) }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> f64) -> Self {
        let n: usize = shape.iter().product();
        let data = (0..n).map(&mut f).collect();
        Self { shape: shape.to_vec(), data: Arc::new(data) }
    }

    /// Identity matrix.
    pub fn eye(n: usize) -> Self {
        Self::from_fn(&[n, n], |i| if i / n == i % n { 1.0 } else { 0.0 })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Scalar value of a single-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.numel(), 1);
        self.data[0]
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    /// Row `i` of a 2-D tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn at2(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<(), NumericsError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(NumericsError::NonFinite { context })
        }
    }

    /// Mutable access to the underlying buffer; copies only when shared.
    pub fn data_mut(&mut self) -> &mut [f64] {
        Arc::make_mut(&mut self.data).as_mut_slice()
    }

    pub fn reshaped(&self, shape: &[usize]) -> Result<Self, NumericsError> {
        let n: usize = shape.iter().product();
        if n != self.numel() {
            return Err(NumericsError::ShapeMismatch {
                context: "reshaped",
                detail: format!("{:?} -> {:?}", self.shape, shape),
            });
        }
        Ok(Self { shape: shape.to_vec(), data: Arc::clone(&self.data) })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: Arc::new(self.data.iter().map(|&v| f(v)).collect()),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Self, NumericsError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Self, NumericsError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Self, NumericsError> {
        self.zip_with(other, "mul", |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    fn zip_with(
        &self,
        other: &Tensor,
        context: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, NumericsError> {
        if self.shape != other.shape {
            return Err(NumericsError::ShapeMismatch {
                context,
                detail: format!("{:?} vs {:?}", self.shape, other.shape),
            });
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self { shape: self.shape.clone(), data: Arc::new(data) })
    }

    /// Sum of all elements.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn dot(&self, other: &Tensor) -> Result<f64, NumericsError> {
        if self.shape != other.shape {
            return Err(NumericsError::ShapeMismatch {
                context: "dot",
                detail: format!("{:?} vs {:?}", self.shape, other.shape),
            });
        }
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    /// 2-D transpose.
    pub fn transpose(&self) -> Result<Self, NumericsError> {
        if self.shape.len() != 2 {
            return Err(NumericsError::ShapeMismatch {
                context: "transpose",
                detail: format!("expected 2-D, got {:?}", self.shape),
            });
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(Self { shape: vec![c, r], data: Arc::new(out) })
    }

    /// Columns `[start, start+width)` of a 2-D tensor.
    pub fn slice_cols(&self, start: usize, width: usize) -> Result<Self, NumericsError> {
        let (r, c) = (self.shape[0], self.shape[1]);
        if start + width > c {
            return Err(NumericsError::ShapeMismatch {
                context: "slice_cols",
                detail: format!("cols {}..{} of {}", start, start + width, c),
            });
        }
        let mut out = Vec::with_capacity(r * width);
        for i in 0..r {
            out.extend_from_slice(&self.data[i * c + start..i * c + start + width]);
        }
        Ok(Self { shape: vec![r, width], data: Arc::new(out) })
    }

    /// Horizontal concatenation of 2-D tensors with equal row counts.
    pub fn concat_cols(parts: &[&Tensor]) -> Result<Self, NumericsError> {
        let r = parts[0].shape[0];
        let total: usize = parts.iter().map(|p| p.shape[1]).sum();
        let mut out = Vec::with_capacity(r * total);
        for i in 0..r {
            for p in parts {
                if p.shape[0] != r {
                    return Err(NumericsError::ShapeMismatch {
                        context: "concat_cols",
                        detail: "row counts differ".into(),
                    });
                }
                out.extend_from_slice(p.row(i));
            }
        }
        Ok(Self { shape: vec![r, total], data: Arc::new(out) })
    }

    /// Vertical concatenation of 2-D tensors with equal column counts.
    pub fn concat_rows(parts: &[&Tensor]) -> Result<Self, NumericsError> {
        let c = parts[0].shape[1];
        let mut out = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.shape[1] != c {
                return Err(NumericsError::ShapeMismatch {
                    context: "concat_rows",
                    detail: "column counts differ".into(),
                });
            }
            rows += p.shape[0];
            out.extend_from_slice(p.data());
        }
        Ok(Self { shape: vec![rows, c], data: Arc::new(out) })
    }

    /// Rows permuted so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self, NumericsError> {
        let (r, c) = (self.shape[0], self.shape[1]);
        if perm.len() != r {
            return Err(NumericsError::ShapeMismatch {
                context: "permute_rows",
                detail: format!("perm len {} vs {} rows", perm.len(), r),
            });
        }
        let mut out = Vec::with_capacity(r * c);
        for &p in perm {
            out.extend_from_slice(self.row(p));
        }
        Ok(Self { shape: vec![r, c], data: Arc::new(out) })
    }

    /// self * other^T for 2-D tensors, computed as row-by-row dot products.
    pub fn matmul_nt(&self, other: &Tensor) -> Result<Self, NumericsError> {
        if self.shape.len() != 2 || other.shape.len() != 2 || self.shape[1] != other.shape[1] {
            return Err(NumericsError::ShapeMismatch {
                context: "matmul_nt",
                detail: format!("{:?} x {:?}^T", self.shape, other.shape),
            });
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[0]);
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            for j in 0..n {
                out.push(dot(a_row, &other.data[j * k..(j + 1) * k]));
            }
        }
        Ok(Self { shape: vec![m, n], data: Arc::new(out) })
    }

    /// Matrix product of 2-D tensors.
    pub fn matmul(&self, other: &Tensor) -> Result<Self, NumericsError> {
        if self.shape.len() != 2 || other.shape.len() != 2 || self.shape[1] != other.shape[0] {
            return Err(NumericsError::ShapeMismatch {
                context: "matmul",
                detail: format!("{:?} x {:?}", self.shape, other.shape),
            });
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut out = vec![0.0; m * n];
        matmul_into(&self.data, &other.data, &mut out, m, k, n);
        Ok(Self { shape: vec![m, n], data: Arc::new(out) })
    }
}

/// C += nothing; computes C = A(m x k) * B(k x n) into `out`.
///
/// ikj loop order: the inner j-loop is a contiguous axpy over a row of B,
/// which vectorizes cleanly.
pub(crate) fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut out[i * n..(i + 1) * n];
        for (kk, &aik) in a_row.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let b_row = &b[kk * n..(kk + 1) * n];
            for (c, &bv) in c_row.iter_mut().zip(b_row.iter()) {
                *c += aik * bv;
            }
        }
    }
}

/// Dot product with 8-way unrolled accumulators.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let ai = &a[i * 8..i * 8 + 8];
        let bi = &b[i * 8..i * 8 + 8];
        for l in 0..8 {
            acc[l] += ai[l] * bi[l];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for i in chunks * 8..a.len() {
        s += a[i] * b[i];
    }
    s
}
