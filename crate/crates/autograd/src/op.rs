//! Primitive operations. Every primitive records a node when one of its
//! inputs is tracked; the matching gradient rules live in `backward.rs`.

use std::sync::Arc;

use crate::conv::{self, ConvDims, ConvGeom};
use crate::error::{Result, TensorError};
use crate::shape::{broadcast_shape, broadcast_strides, broadcasts_to, for_each_broadcast_offset, numel};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Scale(f32),
    Offset,
    Square,
    Sqrt,
    Exp,
    Log,
    Tanh,
    Sigmoid,
    LeakyRelu(f32),
    MatMul { ta: bool, tb: bool },
    Sum,
    SumTo,
    BroadcastTo,
    Reshape,
    Slice { axis: usize, start: usize },
    Embed { axis: usize, start: usize },
    Concat { axis: usize },
    Conv(ConvGeom),
    ConvTranspose(ConvGeom),
    ConvWeightGrad(ConvGeom),
    Resize,
    ResizeAdjoint,
    SoftmaxCrossEntropy(Arc<[usize]>),
}

impl Op {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "neg",
            Op::Scale(_) => "scale",
            Op::Offset => "offset",
            Op::Square => "square",
            Op::Sqrt => "sqrt",
            Op::Exp => "exp",
            Op::Log => "log",
            Op::Tanh => "tanh",
            Op::Sigmoid => "sigmoid",
            Op::LeakyRelu(_) => "leaky_relu",
            Op::MatMul { .. } => "matmul",
            Op::Sum => "sum",
            Op::SumTo => "sum_to",
            Op::BroadcastTo => "broadcast_to",
            Op::Reshape => "reshape",
            Op::Slice { .. } => "slice",
            Op::Embed { .. } => "embed",
            Op::Concat { .. } => "concat",
            Op::Conv(_) => "conv",
            Op::ConvTranspose(_) => "conv_transpose",
            Op::ConvWeightGrad(_) => "conv_weight_grad",
            Op::Resize => "resize_bilinear",
            Op::ResizeAdjoint => "resize_bilinear_adjoint",
            Op::SoftmaxCrossEntropy(_) => "softmax_cross_entropy",
        }
    }
}

#[derive(Clone, Copy)]
enum Binary {
    Add,
    Sub,
    Mul,
    Div,
}

impl Tensor {
    fn unary(&self, op: Op, f: impl Fn(f32) -> f32) -> Tensor {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Tensor::record(op, vec![self.clone()], self.shape.to_vec(), data)
    }

    fn binary(&self, rhs: &Tensor, kind: Binary) -> Result<Tensor> {
        let (op, name) = match kind {
            Binary::Add => (Op::Add, "add"),
            Binary::Sub => (Op::Sub, "sub"),
            Binary::Mul => (Op::Mul, "mul"),
            Binary::Div => (Op::Div, "div"),
        };
        let shape = broadcast_shape(self.shape(), rhs.shape())
            .ok_or_else(|| TensorError::mismatch(name, self.shape(), rhs.shape()))?;
        let a = self.broadcast_to(&shape)?;
        let b = rhs.broadcast_to(&shape)?;
        let (x, y) = (a.data(), b.data());
        let data: Vec<f32> = match kind {
            Binary::Add => x.iter().zip(y).map(|(p, q)| p + q).collect(),
            Binary::Sub => x.iter().zip(y).map(|(p, q)| p - q).collect(),
            Binary::Mul => x.iter().zip(y).map(|(p, q)| p * q).collect(),
            Binary::Div => x.iter().zip(y).map(|(p, q)| p / q).collect(),
        };
        Ok(Tensor::record(op, vec![a, b], shape, data))
    }

    pub fn add(&self, rhs: &Tensor) -> Result<Tensor> {
        self.binary(rhs, Binary::Add)
    }

    pub fn sub(&self, rhs: &Tensor) -> Result<Tensor> {
        self.binary(rhs, Binary::Sub)
    }

    pub fn mul(&self, rhs: &Tensor) -> Result<Tensor> {
        self.binary(rhs, Binary::Mul)
    }

    pub fn div(&self, rhs: &Tensor) -> Result<Tensor> {
        self.binary(rhs, Binary::Div)
    }

    pub fn neg(&self) -> Tensor {
        self.unary(Op::Neg, |v| -v)
    }

    /// Multiplication by a constant.
    pub fn scale(&self, c: f32) -> Tensor {
        self.unary(Op::Scale(c), |v| v * c)
    }

    /// Addition of a constant.
    pub fn offset(&self, c: f32) -> Tensor {
        self.unary(Op::Offset, |v| v + c)
    }

    pub fn square(&self) -> Tensor {
        self.unary(Op::Square, |v| v * v)
    }

    pub fn sqrt(&self) -> Tensor {
        self.unary(Op::Sqrt, f32::sqrt)
    }

    pub fn exp(&self) -> Tensor {
        self.unary(Op::Exp, f32::exp)
    }

    pub fn log(&self) -> Tensor {
        self.unary(Op::Log, f32::ln)
    }

    pub fn tanh(&self) -> Tensor {
        self.unary(Op::Tanh, f32::tanh)
    }

    pub fn sigmoid(&self) -> Tensor {
        self.unary(Op::Sigmoid, |v| 1.0 / (1.0 + (-v).exp()))
    }

    pub fn leaky_relu(&self, slope: f32) -> Tensor {
        self.unary(Op::LeakyRelu(slope), |v| if v > 0.0 { v } else { slope * v })
    }

    pub fn relu(&self) -> Tensor {
        self.leaky_relu(0.0)
    }

    /// 2-D matrix product `a · b`.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        self.matmul_t(rhs, false, false)
    }

    /// `op(a) · op(b)` where `op` transposes when the flag is set.
    pub fn matmul_t(&self, rhs: &Tensor, ta: bool, tb: bool) -> Result<Tensor> {
        if self.rank() != 2 || rhs.rank() != 2 {
            return Err(TensorError::mismatch("matmul", self.shape(), rhs.shape()));
        }
        let (ar, ac) = (self.shape[0], self.shape[1]);
        let (br, bc) = (rhs.shape[0], rhs.shape[1]);
        let (m, k) = if ta { (ac, ar) } else { (ar, ac) };
        let (k2, n) = if tb { (bc, br) } else { (br, bc) };
        if k != k2 {
            return Err(TensorError::mismatch("matmul", self.shape(), rhs.shape()));
        }
        let a_strides = if ta { (1, ac) } else { (ac, 1) };
        let b_strides = if tb { (1, bc) } else { (bc, 1) };
        let mut out = vec![0.0; m * n];
        conv::gemm(m, k, n, self.data(), a_strides, rhs.data(), b_strides, 0.0, &mut out, (n, 1));
        Ok(Tensor::record(
            Op::MatMul { ta, tb },
            vec![self.clone(), rhs.clone()],
            vec![m, n],
            out,
        ))
    }

    /// Sum of all entries, as a rank-0 tensor.
    pub fn sum(&self) -> Tensor {
        let total: f32 = pairwise_sum(self.data());
        Tensor::record(Op::Sum, vec![self.clone()], vec![], vec![total])
    }

    pub fn mean(&self) -> Tensor {
        let n = self.numel().max(1) as f32;
        self.sum().scale(1.0 / n)
    }

    /// Reduces broadcast axes so the result has `shape`; the inverse of
    /// [`Tensor::broadcast_to`].
    pub fn sum_to(&self, shape: &[usize]) -> Result<Tensor> {
        if shape == self.shape() {
            return Ok(self.clone());
        }
        if !broadcasts_to(shape, self.shape()) {
            return Err(TensorError::mismatch("sum_to", self.shape(), shape));
        }
        let strides = broadcast_strides(shape, self.shape());
        let mut out = vec![0.0f32; numel(shape)];
        let src = self.data();
        for_each_broadcast_offset(self.shape(), &strides, |i, o| out[o] += src[i]);
        Ok(Tensor::record(Op::SumTo, vec![self.clone()], shape.to_vec(), out))
    }

    pub fn broadcast_to(&self, shape: &[usize]) -> Result<Tensor> {
        if shape == self.shape() {
            return Ok(self.clone());
        }
        if !broadcasts_to(self.shape(), shape) {
            return Err(TensorError::mismatch("broadcast_to", self.shape(), shape));
        }
        let strides = broadcast_strides(self.shape(), shape);
        let mut out = vec![0.0f32; numel(shape)];
        let src = self.data();
        for_each_broadcast_offset(shape, &strides, |i, o| out[i] = src[o]);
        Ok(Tensor::record(Op::BroadcastTo, vec![self.clone()], shape.to_vec(), out))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if numel(shape) != self.numel() {
            return Err(TensorError::mismatch("reshape", self.shape(), shape));
        }
        if shape == self.shape() {
            return Ok(self.clone());
        }
        Ok(Tensor::record_shared(
            Op::Reshape,
            vec![self.clone()],
            shape.to_vec(),
            self.data.clone(),
        ))
    }

    /// Sums over `axes`, dropping them unless `keepdim`.
    pub fn sum_axes(&self, axes: &[usize], keepdim: bool) -> Result<Tensor> {
        let mut kept = self.shape().to_vec();
        for &a in axes {
            if a >= kept.len() {
                return Err(TensorError::invalid("sum_axes", format!("axis {a} out of range for {:?}", self.shape())));
            }
            kept[a] = 1;
        }
        let reduced = self.sum_to(&kept)?;
        if keepdim {
            return Ok(reduced);
        }
        let squeezed: Vec<usize> = self
            .shape()
            .iter()
            .enumerate()
            .filter(|(i, _)| !axes.contains(i))
            .map(|(_, &d)| d)
            .collect();
        reduced.reshape(&squeezed)
    }

    pub fn mean_axes(&self, axes: &[usize], keepdim: bool) -> Result<Tensor> {
        let count: usize = axes.iter().map(|&a| self.shape().get(a).copied().unwrap_or(1)).product();
        Ok(self.sum_axes(axes, keepdim)?.scale(1.0 / count.max(1) as f32))
    }

    /// L2 norm over every axis but the first: `[n, ...] -> [n]`.
    ///
    /// `eps` is added under the square root so the norm stays differentiable
    /// at zero.
    pub fn l2_norm_per_sample(&self, eps: f32) -> Result<Tensor> {
        if self.rank() == 0 {
            return Err(TensorError::invalid("l2_norm", "needs a batch axis"));
        }
        let n = self.shape[0];
        let flat = self.reshape(&[n, self.numel() / n.max(1)])?;
        Ok(flat.square().sum_axes(&[1], false)?.offset(eps).sqrt())
    }

    pub fn slice(&self, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        if axis >= self.rank() || start + len > self.shape[axis] {
            return Err(TensorError::invalid(
                "slice",
                format!("range {start}..{} on axis {axis} of {:?}", start + len, self.shape()),
            ));
        }
        let (outer, inner) = split_axis(self.shape(), axis);
        let extent = self.shape[axis];
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * extent + start) * inner;
            out.extend_from_slice(&self.data[base..base + len * inner]);
        }
        let mut shape = self.shape().to_vec();
        shape[axis] = len;
        Ok(Tensor::record(Op::Slice { axis, start }, vec![self.clone()], shape, out))
    }

    /// Places `self` at `start` along `axis` inside zeros of extent `full`.
    pub fn embed(&self, axis: usize, start: usize, full: usize) -> Result<Tensor> {
        if axis >= self.rank() || start + self.shape[axis] > full {
            return Err(TensorError::invalid("embed", format!("cannot fit {:?} at {start} in {full}", self.shape())));
        }
        let (outer, inner) = split_axis(self.shape(), axis);
        let len = self.shape[axis];
        let mut out = vec![0.0; outer * full * inner];
        for o in 0..outer {
            let dst = (o * full + start) * inner;
            out[dst..dst + len * inner].copy_from_slice(&self.data[o * len * inner..(o + 1) * len * inner]);
        }
        let mut shape = self.shape().to_vec();
        shape[axis] = full;
        Ok(Tensor::record(Op::Embed { axis, start }, vec![self.clone()], shape, out))
    }

    pub fn concat(parts: &[Tensor], axis: usize) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::invalid("concat", "no inputs"))?;
        if axis >= first.rank() {
            return Err(TensorError::invalid("concat", format!("axis {axis} out of range")));
        }
        let mut total = 0;
        for p in parts {
            let same_rest = p.rank() == first.rank()
                && p.shape().iter().zip(first.shape()).enumerate().all(|(i, (a, b))| i == axis || a == b);
            if !same_rest {
                return Err(TensorError::mismatch("concat", first.shape(), p.shape()));
            }
            total += p.shape[axis];
        }
        let (outer, inner) = split_axis(first.shape(), axis);
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for p in parts {
                let chunk = p.shape[axis] * inner;
                out.extend_from_slice(&p.data[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = first.shape().to_vec();
        shape[axis] = total;
        Ok(Tensor::record(Op::Concat { axis }, parts.to_vec(), shape, out))
    }

    /// Cross-correlation of `[n, c, h, w]` input with `[o, c, kh, kw]` weights.
    pub fn conv2d(&self, weight: &Tensor, geom: ConvGeom) -> Result<Tensor> {
        let d = conv_dims("conv2d", self, weight, geom)?;
        let out = conv::conv_forward(self.data(), weight.data(), &d, &geom);
        Ok(Tensor::record(
            Op::Conv(geom),
            vec![self.clone(), weight.clone()],
            vec![d.n, d.o, d.ho, d.wo],
            out,
        ))
    }

    /// Transposed convolution: the adjoint of [`Tensor::conv2d`] in its input.
    ///
    /// `self` is `[n, o, ho, wo]`, `weight` is `[o, c, kh, kw]` and the result
    /// is `[n, c, out_hw.0, out_hw.1]`.
    pub fn conv_transpose2d(&self, weight: &Tensor, geom: ConvGeom, out_hw: [usize; 2]) -> Result<Tensor> {
        if self.rank() != 4 || weight.rank() != 4 || self.shape[1] != weight.shape[0] {
            return Err(TensorError::mismatch("conv_transpose2d", self.shape(), weight.shape()));
        }
        if [weight.shape[2], weight.shape[3]] != geom.kernel {
            return Err(TensorError::invalid("conv_transpose2d", "weight extents disagree with kernel"));
        }
        let expected = geom.out_extent(out_hw);
        if expected != Some([self.shape[2], self.shape[3]]) {
            return Err(TensorError::invalid(
                "conv_transpose2d",
                format!("output {out_hw:?} does not map back to input {:?}", &self.shape()[2..]),
            ));
        }
        let d = ConvDims {
            n: self.shape[0],
            c: weight.shape[1],
            h: out_hw[0],
            w: out_hw[1],
            o: weight.shape[0],
            ho: self.shape[2],
            wo: self.shape[3],
        };
        let out = conv::conv_transpose(self.data(), weight.data(), &d, &geom);
        Ok(Tensor::record(
            Op::ConvTranspose(geom),
            vec![self.clone(), weight.clone()],
            vec![d.n, d.c, d.h, d.w],
            out,
        ))
    }

    /// Adjoint of [`Tensor::conv2d`] in its weights: correlates the input
    /// `self` (`[n, c, h, w]`) with an output-shaped `gy` (`[n, o, ho, wo]`).
    pub fn conv2d_weight_grad(&self, gy: &Tensor, geom: ConvGeom) -> Result<Tensor> {
        if self.rank() != 4 || gy.rank() != 4 || self.shape[0] != gy.shape[0] {
            return Err(TensorError::mismatch("conv2d_weight_grad", self.shape(), gy.shape()));
        }
        let out_hw = geom
            .out_extent([self.shape[2], self.shape[3]])
            .ok_or_else(|| TensorError::invalid("conv2d_weight_grad", "input smaller than kernel"))?;
        if out_hw != [gy.shape[2], gy.shape[3]] {
            return Err(TensorError::mismatch("conv2d_weight_grad", self.shape(), gy.shape()));
        }
        let d = ConvDims {
            n: self.shape[0],
            c: self.shape[1],
            h: self.shape[2],
            w: self.shape[3],
            o: gy.shape[1],
            ho: out_hw[0],
            wo: out_hw[1],
        };
        let out = conv::conv_weight_grad(self.data(), gy.data(), &d, &geom);
        Ok(Tensor::record(
            Op::ConvWeightGrad(geom),
            vec![self.clone(), gy.clone()],
            vec![d.o, d.c, geom.kernel[0], geom.kernel[1]],
            out,
        ))
    }

    /// 1-D convolution of `[n, c, l]` with `[o, c, k]`.
    pub fn conv1d(&self, weight: &Tensor, geom: ConvGeom) -> Result<Tensor> {
        let x = as_4d("conv1d", self)?;
        let w = as_4d("conv1d", weight)?;
        let y = x.conv2d(&w, geom)?;
        let (n, o, l) = (y.shape[0], y.shape[1], y.shape[3]);
        y.reshape(&[n, o, l])
    }

    /// Transposed 1-D convolution of `[n, o, l]` with `[o, c, k]` to length `out_len`.
    pub fn conv_transpose1d(&self, weight: &Tensor, geom: ConvGeom, out_len: usize) -> Result<Tensor> {
        let x = as_4d("conv_transpose1d", self)?;
        let w = as_4d("conv_transpose1d", weight)?;
        let y = x.conv_transpose2d(&w, geom, [1, out_len])?;
        let (n, c) = (y.shape[0], y.shape[1]);
        y.reshape(&[n, c, out_len])
    }

    /// Bilinear resize of `[n, c, h, w]` with aligned corners.
    pub fn resize_bilinear(&self, height: usize, width: usize) -> Result<Tensor> {
        if self.rank() != 4 || height == 0 || width == 0 {
            return Err(TensorError::invalid("resize_bilinear", format!("cannot resize {:?}", self.shape())));
        }
        let [n, c, h, w] = [self.shape[0], self.shape[1], self.shape[2], self.shape[3]];
        let out = resize_kernel(self.data(), n * c, [h, w], [height, width], false);
        Ok(Tensor::record(Op::Resize, vec![self.clone()], vec![n, c, height, width], out))
    }

    /// Adjoint of [`Tensor::resize_bilinear`], mapping a resized tensor back
    /// to `[n, c, height, width]`.
    pub fn resize_bilinear_adjoint(&self, height: usize, width: usize) -> Result<Tensor> {
        if self.rank() != 4 || height == 0 || width == 0 {
            return Err(TensorError::invalid("resize_bilinear_adjoint", format!("cannot resize {:?}", self.shape())));
        }
        let [n, c, h, w] = [self.shape[0], self.shape[1], self.shape[2], self.shape[3]];
        let out = resize_kernel(self.data(), n * c, [height, width], [h, w], true);
        Ok(Tensor::record(Op::ResizeAdjoint, vec![self.clone()], vec![n, c, height, width], out))
    }

    /// Mean negative log-likelihood of `labels` under row-wise softmax of
    /// `[n, k]` logits. Fused for stability; it has no second-order rule.
    pub fn softmax_cross_entropy(&self, labels: &[usize]) -> Result<Tensor> {
        if self.rank() != 2 || self.shape[0] != labels.len() {
            return Err(TensorError::mismatch("softmax_cross_entropy", self.shape(), &[labels.len()]));
        }
        let k = self.shape[1];
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(TensorError::invalid("softmax_cross_entropy", format!("label {bad} with {k} classes")));
        }
        let mut total = 0.0f64;
        for (row, &label) in self.data.chunks(k).zip(labels) {
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let lse = row.iter().map(|&v| ((v - max) as f64).exp()).sum::<f64>().ln() + max as f64;
            total += lse - row[label] as f64;
        }
        let loss = (total / labels.len().max(1) as f64) as f32;
        Ok(Tensor::record(
            Op::SoftmaxCrossEntropy(labels.into()),
            vec![self.clone()],
            vec![],
            vec![loss],
        ))
    }

    /// Row-wise softmax of `[n, k]` values (not differentiable; inference only).
    pub fn softmax_rows(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(TensorError::invalid("softmax", format!("expected [n, k], got {:?}", self.shape())));
        }
        let k = self.shape[1];
        let mut out = Vec::with_capacity(self.numel());
        for row in self.data.chunks(k) {
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let exps: Vec<f64> = row.iter().map(|&v| ((v - max) as f64).exp()).collect();
            let z: f64 = exps.iter().sum();
            out.extend(exps.iter().map(|e| (e / z) as f32));
        }
        Ok(Tensor::constant(self.shape().to_vec(), out))
    }

    /// Index of the largest entry in each row of a `[n, k]` tensor.
    pub fn argmax_rows(&self) -> Result<Vec<usize>> {
        if self.rank() != 2 {
            return Err(TensorError::invalid("argmax", format!("expected [n, k], got {:?}", self.shape())));
        }
        Ok(self
            .data
            .chunks(self.shape[1].max(1))
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f32::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0
            })
            .collect())
    }
}

fn split_axis(shape: &[usize], axis: usize) -> (usize, usize) {
    (numel(&shape[..axis]), numel(&shape[axis + 1..]))
}

fn as_4d(op: &'static str, t: &Tensor) -> Result<Tensor> {
    if t.rank() != 3 {
        return Err(TensorError::invalid(op, format!("expected rank 3, got {:?}", t.shape())));
    }
    t.reshape(&[t.shape[0], t.shape[1], 1, t.shape[2]])
}

fn conv_dims(op: &'static str, x: &Tensor, w: &Tensor, geom: ConvGeom) -> Result<ConvDims> {
    if x.rank() != 4 || w.rank() != 4 || x.shape[1] != w.shape[1] {
        return Err(TensorError::mismatch(op, x.shape(), w.shape()));
    }
    if [w.shape[2], w.shape[3]] != geom.kernel {
        return Err(TensorError::invalid(op, format!("weight {:?} disagrees with kernel {:?}", w.shape(), geom.kernel)));
    }
    let [ho, wo] = geom
        .out_extent([x.shape[2], x.shape[3]])
        .ok_or_else(|| TensorError::invalid(op, format!("input {:?} smaller than kernel {:?}", x.shape(), geom.kernel)))?;
    Ok(ConvDims {
        n: x.shape[0],
        c: x.shape[1],
        h: x.shape[2],
        w: x.shape[3],
        o: w.shape[0],
        ho,
        wo,
    })
}

/// Interpolation taps for an aligned-corner linear resample of `src` points to `dst`.
fn linear_taps(src: usize, dst: usize) -> Vec<(usize, usize, f32)> {
    (0..dst)
        .map(|i| {
            if src == 1 || dst == 1 {
                return (0, 0, 0.0);
            }
            let pos = i as f64 * (src - 1) as f64 / (dst - 1) as f64;
            let lo = (pos.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            (lo, hi, (pos - lo as f64) as f32)
        })
        .collect()
}

/// Bilinear resize between `small` and `large` grids over `planes` planes.
/// With `adjoint`, the input is on the resized grid and mass is scattered
/// back to the source grid.
fn resize_kernel(data: &[f32], planes: usize, src: [usize; 2], dst: [usize; 2], adjoint: bool) -> Vec<f32> {
    let th = linear_taps(src[0], dst[0]);
    let tw = linear_taps(src[1], dst[1]);
    let (src_len, dst_len) = (src[0] * src[1], dst[0] * dst[1]);
    let mut out = vec![0.0f32; planes * if adjoint { src_len } else { dst_len }];
    for p in 0..planes {
        for (y, &(y0, y1, fy)) in th.iter().enumerate() {
            for (x, &(x0, x1, fx)) in tw.iter().enumerate() {
                let taps = [
                    (y0 * src[1] + x0, (1.0 - fy) * (1.0 - fx)),
                    (y0 * src[1] + x1, (1.0 - fy) * fx),
                    (y1 * src[1] + x0, fy * (1.0 - fx)),
                    (y1 * src[1] + x1, fy * fx),
                ];
                let d = p * dst_len + y * dst[1] + x;
                if adjoint {
                    let v = data[d];
                    for (s, wgt) in taps {
                        out[p * src_len + s] += wgt * v;
                    }
                } else {
                    out[d] = taps.iter().map(|&(s, wgt)| wgt * data[p * src_len + s]).sum();
                }
            }
        }
    }
    out
}

/// Pairwise summation keeps large reductions accurate in f32.
pub(crate) fn pairwise_sum(v: &[f32]) -> f32 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
