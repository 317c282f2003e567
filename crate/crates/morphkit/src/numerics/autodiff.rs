//! Reverse-mode automatic differentiation over a closed op set.
//!
//! Ops are recorded on a linear tape during the forward pass and replayed in
//! reverse. The op set is exactly what the denoiser needs: matmul, adds,
//! elementwise mul/scale, softmax over rows, layer norm, GELU (tanh form),
//! embedding-row lookup, transpose/column-slice/concat plumbing, and the
//! scalar reductions used as losses. Anything else is inference-only and
//! lives outside the tape.

use super::tensor::{matmul_into, Tensor};
use super::NumericsError;

/// Handle to a tape node.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Matmul { a: Var, b: Var },
    MatmulNt { a: Var, b: Var },
    Add { a: Var, b: Var },
    AddRow { a: Var, row: Var },
    Mul { a: Var, b: Var },
    Scale { a: Var, s: f64 },
    SoftmaxRows { x: Var },
    LayerNorm { x: Var, gain: Var, bias: Var, mean: Vec<f64>, rstd: Vec<f64> },
    Gelu { x: Var },
    EmbedRow { table: Var, index: usize },
    Transpose { x: Var },
    SliceCols { x: Var, start: usize },
    ConcatCols { parts: Vec<Var> },
    ConcatRows { parts: Vec<Var> },
    Sum { x: Var },
    MeanSq { a: Var, b: Var },
}

struct Node {
    value: Tensor,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
    op: Op,
}

/// Wengert tape. One tape per forward pass; backward consumes grads in
/// reverse node order.
pub struct Tape {
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::with_capacity(256) }
    }

    /// Constant input; no gradient is tracked through it.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, false, Op::Leaf)
    }

    /// Trainable input; `backward` will populate its gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, true, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of a node after `backward`, same layout as its value.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node { value, requires_grad, grad: None, op });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(value, rg, Op::Matmul { a, b }))
    }

    /// a * b^T without materializing the transpose.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let value = self.value(a).matmul_nt(self.value(b))?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(value, rg, Op::MatmulNt { a, b }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let value = self.value(a).add(self.value(b))?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(value, rg, Op::Add { a, b }))
    }

    /// Broadcast-add a length-d row vector to every row of an (r x d) matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, NumericsError> {
        let m = self.value(a);
        let r = self.value(row);
        let d = *m.shape().last().unwrap();
        if r.numel() != d {
            return Err(NumericsError::ShapeMismatch {
                context: "add_row",
                detail: format!("{:?} + row {:?}", m.shape(), r.shape()),
            });
        }
        let rows = m.numel() / d;
        let mut out = m.data().to_vec();
        for i in 0..rows {
            for j in 0..d {
                out[i * d + j] += r.data()[j];
            }
        }
        let value = Tensor::from_vec(m.shape(), out)?;
        let rg = self.needs(a) || self.needs(row);
        Ok(self.push(value, rg, Op::AddRow { a, row }))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let value = self.value(a).mul(self.value(b))?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(value, rg, Op::Mul { a, b }))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).scale(s);
        let rg = self.needs(a);
        self.push(value, rg, Op::Scale { a, s })
    }

    /// Row-wise softmax, stabilized by subtracting the row max.
    pub fn softmax_rows(&mut self, x: Var) -> Result<Var, NumericsError> {
        let t = self.value(x);
        t.ensure_finite("softmax_rows")?;
        let d = *t.shape().last().unwrap();
        let rows = t.numel() / d;
        let mut out = vec![0.0; t.numel()];
        for i in 0..rows {
            let row = &t.data()[i * d..(i + 1) * d];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for j in 0..d {
                let e = (row[j] - max).exp();
                out[i * d + j] = e;
                denom += e;
            }
            let inv = 1.0 / denom;
            for j in 0..d {
                out[i * d + j] *= inv;
            }
        }
        let value = Tensor::from_vec(t.shape(), out)?;
        let rg = self.needs(x);
        Ok(self.push(value, rg, Op::SoftmaxRows { x }))
    }

    /// Last-axis layer norm with learned gain/bias.
    pub fn layer_norm(
        &mut self,
        x: Var,
        gain: Var,
        bias: Var,
        eps: f64,
    ) -> Result<Var, NumericsError> {
        let t = self.value(x);
        let d = *t.shape().last().unwrap();
        if d == 0 {
            return Err(NumericsError::InvalidParameter {
                context: "layer_norm",
                detail: "last axis is empty".into(),
            });
        }
        let g = self.value(gain).data().to_vec();
        let b = self.value(bias).data().to_vec();
        if g.len() != d || b.len() != d {
            return Err(NumericsError::ShapeMismatch {
                context: "layer_norm",
                detail: format!("gain/bias len vs d={d}"),
            });
        }
        let rows = t.numel() / d;
        let mut out = vec![0.0; t.numel()];
        let mut means = vec![0.0; rows];
        let mut rstds = vec![0.0; rows];
        for i in 0..rows {
            let row = &t.data()[i * d..(i + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let rstd = 1.0 / (var + eps).sqrt();
            means[i] = mean;
            rstds[i] = rstd;
            for j in 0..d {
                out[i * d + j] = (row[j] - mean) * rstd * g[j] + b[j];
            }
        }
        let value = Tensor::from_vec(t.shape(), out)?;
        let rg = self.needs(x) || self.needs(gain) || self.needs(bias);
        Ok(self.push(value, rg, Op::LayerNorm { x, gain, bias, mean: means, rstd: rstds }))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(gelu_scalar);
        let rg = self.needs(x);
        self.push(value, rg, Op::Gelu { x })
    }

    /// Row `index` of a 2-D table, as a (1 x d) tensor.
    pub fn embed_row(&mut self, table: Var, index: usize) -> Result<Var, NumericsError> {
        let t = self.value(table);
        if index >= t.rows() {
            return Err(NumericsError::InvalidParameter {
                context: "embed_row",
                detail: format!("row {index} of {}", t.rows()),
            });
        }
        let value = Tensor::from_vec(&[1, t.cols()], t.row(index).to_vec())?;
        let rg = self.needs(table);
        Ok(self.push(value, rg, Op::EmbedRow { table, index }))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var, NumericsError> {
        let value = self.value(x).transpose()?;
        let rg = self.needs(x);
        Ok(self.push(value, rg, Op::Transpose { x }))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Result<Var, NumericsError> {
        let value = self.value(x).slice_cols(start, width)?;
        let rg = self.needs(x);
        Ok(self.push(value, rg, Op::SliceCols { x, start }))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Tensor::concat_cols(&tensors)?;
        let rg = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(value, rg, Op::ConcatCols { parts: parts.to_vec() }))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Tensor::concat_rows(&tensors)?;
        let rg = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(value, rg, Op::ConcatRows { parts: parts.to_vec() }))
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).sum());
        let rg = self.needs(x);
        self.push(value, rg, Op::Sum { x })
    }

    /// Mean of squared differences, as a scalar node.
    pub fn mean_sq(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let ta = self.value(a);
        let tb = self.value(b);
        if ta.shape() != tb.shape() {
            return Err(NumericsError::ShapeMismatch {
                context: "mean_sq",
                detail: format!("{:?} vs {:?}", ta.shape(), tb.shape()),
            });
        }
        let n = ta.numel() as f64;
        let s: f64 = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum();
        let value = Tensor::scalar(s / n);
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(value, rg, Op::MeanSq { a, b }))
    }

    fn accumulate(&mut self, v: Var, delta: &[f64]) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let n = self.nodes[v.0].value.numel();
        let g = self.nodes[v.0].grad.get_or_insert_with(|| vec![0.0; n]);
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
    }

    /// Reverse sweep from a scalar node. Gradients land on every node with
    /// `requires_grad`, leaves included.
    pub fn backward(&mut self, loss: Var) -> Result<(), NumericsError> {
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(NumericsError::InvalidParameter {
                context: "backward",
                detail: "loss must be scalar".into(),
            });
        }
        if !self.nodes[loss.0].value.is_finite() {
            return Err(NumericsError::NonFinite { context: "backward" });
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            if self.nodes[idx].grad.is_none() || !self.nodes[idx].requires_grad {
                continue;
            }
            // Move the gradient out for processing; parents only accumulate
            // into earlier tape slots. Restored below for caller queries.
            let grad = self.nodes[idx].grad.take().unwrap();
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::Matmul { a, b } => {
                    let (a, b) = (*a, *b);
                    let ta = self.value(a).clone();
                    let tb = self.value(b).clone();
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                    if self.needs(a) {
                        // dA = dC * B^T
                        let bt = tb.transpose()?;
                        let mut da = vec![0.0; m * k];
                        matmul_into(&grad, bt.data(), &mut da, m, n, k);
                        self.accumulate(a, &da);
                    }
                    if self.needs(b) {
                        // dB = A^T * dC
                        let at = ta.transpose()?;
                        let mut db = vec![0.0; k * n];
                        matmul_into(at.data(), &grad, &mut db, k, m, n);
                        self.accumulate(b, &db);
                    }
                }
                Op::MatmulNt { a, b } => {
                    // C = A B^T: dA = dC * B, dB = dC^T * A.
                    let (a, b) = (*a, *b);
                    let ta = self.value(a).clone();
                    let tb = self.value(b).clone();
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.rows());
                    if self.needs(a) {
                        let mut da = vec![0.0; m * k];
                        matmul_into(&grad, tb.data(), &mut da, m, n, k);
                        self.accumulate(a, &da);
                    }
                    if self.needs(b) {
                        let gradt = Tensor::from_vec(&[m, n], grad.clone())?.transpose()?;
                        let mut db = vec![0.0; n * k];
                        matmul_into(gradt.data(), ta.data(), &mut db, n, m, k);
                        self.accumulate(b, &db);
                    }
                }
                Op::Add { a, b } => {
                    let (a, b) = (*a, *b);
                    self.accumulate(a, &grad);
                    self.accumulate(b, &grad);
                }
                Op::AddRow { a, row } => {
                    let (a, row) = (*a, *row);
                    let d = self.value(row).numel();
                    self.accumulate(a, &grad);
                    if self.needs(row) {
                        let mut dr = vec![0.0; d];
                        for (i, g) in grad.iter().enumerate() {
                            dr[i % d] += g;
                        }
                        self.accumulate(row, &dr);
                    }
                }
                Op::Mul { a, b } => {
                    let (a, b) = (*a, *b);
                    if self.needs(a) {
                        let da: Vec<f64> =
                            grad.iter().zip(self.value(b).data()).map(|(g, v)| g * v).collect();
                        self.accumulate(a, &da);
                    }
                    if self.needs(b) {
                        let db: Vec<f64> =
                            grad.iter().zip(self.value(a).data()).map(|(g, v)| g * v).collect();
                        self.accumulate(b, &db);
                    }
                }
                Op::Scale { a, s } => {
                    let (a, s) = (*a, *s);
                    let da: Vec<f64> = grad.iter().map(|g| g * s).collect();
                    self.accumulate(a, &da);
                }
                Op::SoftmaxRows { x } => {
                    let x = *x;
                    let y = self.nodes[idx].value.clone();
                    let d = *y.shape().last().unwrap();
                    let rows = y.numel() / d;
                    let mut dx = vec![0.0; y.numel()];
                    for i in 0..rows {
                        let yr = &y.data()[i * d..(i + 1) * d];
                        let gr = &grad[i * d..(i + 1) * d];
                        let inner: f64 = yr.iter().zip(gr).map(|(&yv, &gv)| yv * gv).sum();
                        for j in 0..d {
                            dx[i * d + j] = yr[j] * (gr[j] - inner);
                        }
                    }
                    self.accumulate(x, &dx);
                }
                Op::LayerNorm { x, gain, bias, mean, rstd } => {
                    let (x, gain, bias) = (*x, *gain, *bias);
                    let mean = mean.clone();
                    let rstd = rstd.clone();
                    let tx = self.value(x).clone();
                    let g = self.value(gain).data().to_vec();
                    let d = *tx.shape().last().unwrap();
                    let rows = tx.numel() / d;
                    if self.needs(x) {
                        let mut dx = vec![0.0; tx.numel()];
                        for i in 0..rows {
                            let xr = &tx.data()[i * d..(i + 1) * d];
                            let gr = &grad[i * d..(i + 1) * d];
                            let mut sum_dxhat = 0.0;
                            let mut sum_dxhat_xhat = 0.0;
                            for j in 0..d {
                                let xhat = (xr[j] - mean[i]) * rstd[i];
                                let dxhat = gr[j] * g[j];
                                sum_dxhat += dxhat;
                                sum_dxhat_xhat += dxhat * xhat;
                            }
                            let inv_d = 1.0 / d as f64;
                            for j in 0..d {
                                let xhat = (xr[j] - mean[i]) * rstd[i];
                                let dxhat = gr[j] * g[j];
                                dx[i * d + j] = rstd[i]
                                    * (dxhat - inv_d * sum_dxhat - xhat * inv_d * sum_dxhat_xhat);
                            }
                        }
                        self.accumulate(x, &dx);
                    }
                    if self.needs(gain) {
                        let mut dg = vec![0.0; d];
                        for i in 0..rows {
                            for j in 0..d {
                                let xhat = (tx.data()[i * d + j] - mean[i]) * rstd[i];
                                dg[j] += grad[i * d + j] * xhat;
                            }
                        }
                        self.accumulate(gain, &dg);
                    }
                    if self.needs(bias) {
                        let mut db = vec![0.0; d];
                        for i in 0..rows {
                            for j in 0..d {
                                db[j] += grad[i * d + j];
                            }
                        }
                        self.accumulate(bias, &db);
                    }
                }
                Op::Gelu { x } => {
                    let x = *x;
                    let tx = self.value(x).clone();
                    let dx: Vec<f64> = tx
                        .data()
                        .iter()
                        .zip(&grad)
                        .map(|(&v, &g)| g * gelu_derivative(v))
                        .collect();
                    self.accumulate(x, &dx);
                }
                Op::EmbedRow { table, index } => {
                    let (table, index) = (*table, *index);
                    if self.needs(table) {
                        let cols = self.value(table).cols();
                        let n = self.value(table).numel();
                        let mut dt = vec![0.0; n];
                        dt[index * cols..(index + 1) * cols].copy_from_slice(&grad);
                        self.accumulate(table, &dt);
                    }
                }
                Op::Transpose { x } => {
                    let x = *x;
                    let shape = self.nodes[idx].value.shape().to_vec();
                    let gt = Tensor::from_vec(&shape, grad.clone())?.transpose()?;
                    self.accumulate(x, gt.data());
                }
                Op::SliceCols { x, start } => {
                    let (x, start) = (*x, *start);
                    if self.needs(x) {
                        let (r, c) = (self.value(x).rows(), self.value(x).cols());
                        let width = self.nodes[idx].value.cols();
                        let mut dx = vec![0.0; r * c];
                        for i in 0..r {
                            dx[i * c + start..i * c + start + width]
                                .copy_from_slice(&grad[i * width..(i + 1) * width]);
                        }
                        self.accumulate(x, &dx);
                    }
                }
                Op::ConcatCols { parts } => {
                    let parts = parts.clone();
                    let total = self.nodes[idx].value.cols();
                    let rows = self.nodes[idx].value.rows();
                    let mut offset = 0;
                    for p in parts {
                        let w = self.value(p).cols();
                        if self.needs(p) {
                            let mut dp = vec![0.0; rows * w];
                            for i in 0..rows {
                                dp[i * w..(i + 1) * w].copy_from_slice(
                                    &grad[i * total + offset..i * total + offset + w],
                                );
                            }
                            self.accumulate(p, &dp);
                        }
                        offset += w;
                    }
                }
                Op::ConcatRows { parts } => {
                    let parts = parts.clone();
                    let mut offset = 0;
                    for p in parts {
                        let n = self.value(p).numel();
                        if self.needs(p) {
                            let dp = grad[offset..offset + n].to_vec();
                            self.accumulate(p, &dp);
                        }
                        offset += n;
                    }
                }
                Op::Sum { x } => {
                    let x = *x;
                    let n = self.value(x).numel();
                    let dx = vec![grad[0]; n];
                    self.accumulate(x, &dx);
                }
                Op::MeanSq { a, b } => {
                    let (a, b) = (*a, *b);
                    let ta = self.value(a).clone();
                    let tb = self.value(b).clone();
                    let n = ta.numel() as f64;
                    let coeff = 2.0 * grad[0] / n;
                    if self.needs(a) {
                        let da: Vec<f64> = ta
                            .data()
                            .iter()
                            .zip(tb.data())
                            .map(|(&x, &y)| coeff * (x - y))
                            .collect();
                        self.accumulate(a, &da);
                    }
                    if self.needs(b) {
                        let db: Vec<f64> = ta
                            .data()
                            .iter()
                            .zip(tb.data())
                            .map(|(&x, &y)| -coeff * (x - y))
                            .collect();
                        self.accumulate(b, &db);
                    }
                }
            }
            self.nodes[idx].grad = Some(grad);
        }
        Ok(())
    }
}

// GELU in its sigmoid form, x * sigmoid(1.702 x).
const GELU_A: f64 = 1.702;

fn gelu_scalar(x: f64) -> f64 {
    x / (1.0 + (-GELU_A * x).exp())
}

fn gelu_derivative(x: f64) -> f64 {
    let s = 1.0 / (1.0 + (-GELU_A * x).exp());
    s + GELU_A * x * s * (1.0 - s)
}

/// Max relative disagreement between the analytic gradient of `f` at `x` and
/// central finite differences with step `h`.
pub fn grad_check<F>(f: F, x: &Tensor, h: f64) -> Result<f64, NumericsError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, NumericsError>,
{
    let mut tape = Tape::new();
    let vx = tape.param(x.clone());
    let loss = f(&mut tape, vx)?;
    if tape.value(loss).numel() != 1 {
        return Err(NumericsError::InvalidParameter {
            context: "grad_check",
            detail: "f must return a scalar".into(),
        });
    }
    tape.backward(loss)?;
    let analytic = tape.grad(vx).unwrap_or(&[]).to_vec();
    if analytic.len() != x.numel() {
        return Err(NumericsError::InvalidParameter {
            context: "grad_check",
            detail: "no gradient for input".into(),
        });
    }

    let eval = |pt: &Tensor| -> Result<f64, NumericsError> {
        let mut t = Tape::new();
        let v = t.leaf(pt.clone());
        let out = f(&mut t, v)?;
        let val = t.value(out).item();
        if !val.is_finite() {
            return Err(NumericsError::NonFinite { context: "grad_check" });
        }
        Ok(val)
    };

    let mut worst: f64 = 0.0;
    for i in 0..x.numel() {
        let mut plus = x.clone();
        plus.data_mut()[i] += h;
        let mut minus = x.clone();
        minus.data_mut()[i] -= h;
        let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
        if !numeric.is_finite() || !analytic[i].is_finite() {
            return Err(NumericsError::NonFinite { context: "grad_check" });
        }
        let rel = (analytic[i] - numeric).abs() / (analytic[i].abs() + numeric.abs() + 1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}
