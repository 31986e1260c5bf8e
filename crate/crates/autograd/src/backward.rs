//! Reverse-mode differentiation.
//!
//! Every gradient rule is written with tensor primitives, so running the
//! backward pass with `create_graph` records a new graph that can itself be
//! differentiated (reverse-over-reverse).

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::error::{Result, TensorError};
use crate::op::Op;
use crate::tensor::{Node, Tensor, TensorId};

/// Gradients keyed by the identity of the tensor they belong to. Missing
/// entries stand for zero gradients.
#[derive(Clone, Debug, Default)]
pub struct GradMap {
    grads: HashMap<TensorId, Tensor>,
}

impl GradMap {
    pub fn get(&self, param: &Tensor) -> Option<&Tensor> {
        param.id().and_then(|id| self.grads.get(&id))
    }

    /// The gradient for `param`, or zeros of its shape.
    pub fn get_or_zeros(&self, param: &Tensor) -> Tensor {
        self.get(param)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(param.shape()))
    }

    pub fn insert(&mut self, param: &Tensor, grad: Tensor) {
        if let Some(id) = param.id() {
            self.grads.insert(id, grad);
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}

/// Exact gradients of a scalar `loss` with respect to each tensor in `wrt`.
pub fn backward(loss: &Tensor, wrt: &[&Tensor]) -> Result<GradMap> {
    let grads = grad(loss, wrt, false)?;
    let mut map = GradMap::default();
    for (param, g) in wrt.iter().zip(grads) {
        if let Some(g) = g {
            map.insert(param, g);
        }
    }
    Ok(map)
}

/// Gradient of `loss` with respect to `wrt`, itself carrying a graph so it
/// can appear in a second loss. Returns zeros when `loss` does not depend on
/// `wrt`.
pub fn grad_with_graph(loss: &Tensor, wrt: &Tensor) -> Result<Tensor> {
    let g = grad(loss, &[wrt], true)?.pop().flatten();
    Ok(g.unwrap_or_else(|| Tensor::zeros(wrt.shape())))
}

/// General entry point: one optional gradient per entry of `wrt` (`None`
/// when the loss does not reach it).
pub fn grad(loss: &Tensor, wrt: &[&Tensor], create_graph: bool) -> Result<Vec<Option<Tensor>>> {
    if loss.numel() != 1 {
        return Err(TensorError::NonScalarLoss(loss.shape().to_vec()));
    }
    let Some(root) = loss.node.as_ref() else {
        return Ok(vec![None; wrt.len()]);
    };
    let targets: HashSet<usize> = wrt.iter().filter_map(|t| t.node.as_ref().map(key)).collect();
    if targets.is_empty() {
        return Ok(vec![None; wrt.len()]);
    }

    let order = relevant_topological_order(loss, &targets);
    let relevant: HashSet<usize> = order.iter().map(|t| key(node_of(t))).collect();

    let mut pending: HashMap<usize, Tensor> = HashMap::new();
    pending.insert(key(root), Tensor::ones(loss.shape()));
    let mut found: HashMap<usize, Tensor> = HashMap::new();

    // `order` is post-order; walk it from the root down.
    for t in order.iter().rev() {
        let node = node_of(t);
        let k = key(node);
        let Some(g) = pending.remove(&k) else { continue };
        if targets.contains(&k) {
            found.insert(k, g.clone());
        }
        if matches!(node.op, Op::Leaf) {
            continue;
        }
        let needs: Vec<bool> = node
            .inputs
            .iter()
            .map(|i| i.node.as_ref().is_some_and(|n| relevant.contains(&key(n))))
            .collect();
        if !needs.iter().any(|&b| b) {
            continue;
        }
        let input_grads = if create_graph {
            vjp(&node.op, &node.inputs, t, &g, &needs, true)?
        } else {
            let inputs: Vec<Tensor> = node.inputs.iter().map(Tensor::detach).collect();
            vjp(&node.op, &inputs, &t.detach(), &g.detach(), &needs, false)?
        };
        for ((input, need), ig) in node.inputs.iter().zip(&needs).zip(input_grads) {
            let (true, Some(ig)) = (*need, ig) else { continue };
            assert_eq!(ig.shape(), input.shape(), "gradient shape for {}", node.op.name());
            let ik = key(input.node.as_ref().expect("needed input is tracked"));
            let merged = match pending.remove(&ik) {
                Some(prev) => prev.add(&ig)?,
                None => ig,
            };
            pending.insert(ik, merged);
        }
    }

    Ok(wrt
        .iter()
        .map(|t| t.node.as_ref().and_then(|n| found.get(&key(n)).cloned()))
        .collect())
}

fn key(node: &Arc<Node>) -> usize {
    Arc::as_ptr(node) as *const () as usize
}

fn node_of(t: &Tensor) -> &Arc<Node> {
    t.node.as_ref().expect("graph walk only visits tracked tensors")
}

/// Post-order over tracked tensors reachable from `loss` that lead to at
/// least one target. Iterative to stay clear of stack limits on long graphs.
fn relevant_topological_order(loss: &Tensor, targets: &HashSet<usize>) -> Vec<Tensor> {
    let mut reaches: HashMap<usize, bool> = HashMap::new();
    let mut order = Vec::new();
    let mut stack: Vec<(Tensor, usize)> = vec![(loss.clone(), 0)];
    let mut entered: HashSet<usize> = HashSet::new();
    entered.insert(key(node_of(loss)));
    while let Some((t, next)) = stack.pop() {
        let node = node_of(&t).clone();
        if next < node.inputs.len() {
            stack.push((t, next + 1));
            let child = &node.inputs[next];
            if let Some(cn) = child.node.as_ref() {
                if entered.insert(key(cn)) {
                    stack.push((child.clone(), 0));
                }
            }
            continue;
        }
        let k = key(&node);
        let hit = targets.contains(&k)
            || node
                .inputs
                .iter()
                .any(|i| i.node.as_ref().is_some_and(|n| reaches.get(&key(n)).copied().unwrap_or(false)));
        reaches.insert(k, hit);
        if hit {
            order.push(t);
        }
    }
    order
}

/// Vector-Jacobian products of one primitive: the gradient for each input
/// given the output cotangent `g`. Entries whose `needs` flag is false are
/// skipped.
fn vjp(op: &Op, inputs: &[Tensor], out: &Tensor, g: &Tensor, needs: &[bool], create_graph: bool) -> Result<Vec<Option<Tensor>>> {
    let want = |i: usize| needs.get(i).copied().unwrap_or(false);
    let x = &inputs[0];
    let single = |t: Tensor| Ok(vec![Some(t)]);
    match op {
        Op::Leaf => Ok(vec![]),
        Op::Add => Ok(vec![want(0).then(|| g.clone()), want(1).then(|| g.clone())]),
        Op::Sub => Ok(vec![want(0).then(|| g.clone()), want(1).then(|| g.neg())]),
        Op::Mul => {
            let y = &inputs[1];
            Ok(vec![
                if want(0) { Some(g.mul(y)?) } else { None },
                if want(1) { Some(g.mul(x)?) } else { None },
            ])
        }
        Op::Div => {
            let y = &inputs[1];
            Ok(vec![
                if want(0) { Some(g.div(y)?) } else { None },
                if want(1) { Some(g.mul(out)?.div(y)?.neg()) } else { None },
            ])
        }
        Op::Neg => single(g.neg()),
        Op::Scale(c) => single(g.scale(*c)),
        Op::Offset => single(g.clone()),
        Op::Square => single(g.mul(x)?.scale(2.0)),
        Op::Sqrt => single(g.div(out)?.scale(0.5)),
        Op::Exp => single(g.mul(out)?),
        Op::Log => single(g.div(x)?),
        Op::Tanh => single(g.mul(&out.square().neg().offset(1.0))?),
        Op::Sigmoid => single(g.mul(&out.mul(&out.neg().offset(1.0))?)?),
        Op::LeakyRelu(slope) => {
            // Piecewise linear: the local slope is a constant almost everywhere.
            let mask: Vec<f32> = x.data().iter().map(|&v| if v > 0.0 { 1.0 } else { *slope }).collect();
            single(g.mul(&Tensor::constant(x.shape().to_vec(), mask))?)
        }
        Op::MatMul { ta, tb } => {
            let (ta, tb) = (*ta, *tb);
            let y = &inputs[1];
            let ga = if !want(0) {
                None
            } else if ta {
                Some(y.matmul_t(g, tb, true)?)
            } else {
                Some(g.matmul_t(y, false, !tb)?)
            };
            let gb = if !want(1) {
                None
            } else if tb {
                Some(g.matmul_t(x, true, ta)?)
            } else {
                Some(x.matmul_t(g, !ta, false)?)
            };
            Ok(vec![ga, gb])
        }
        Op::Sum | Op::SumTo => single(g.broadcast_to(x.shape())?),
        Op::BroadcastTo => single(g.sum_to(x.shape())?),
        Op::Reshape => single(g.reshape(x.shape())?),
        Op::Slice { axis, start } => single(g.embed(*axis, *start, x.shape()[*axis])?),
        Op::Embed { axis, start } => single(g.slice(*axis, *start, x.shape()[*axis])?),
        Op::Concat { axis } => {
            let mut at = 0;
            let mut out = Vec::with_capacity(inputs.len());
            for (i, part) in inputs.iter().enumerate() {
                let len = part.shape()[*axis];
                out.push(if want(i) { Some(g.slice(*axis, at, len)?) } else { None });
                at += len;
            }
            Ok(out)
        }
        Op::Conv(geom) => {
            let w = &inputs[1];
            let hw = [x.shape()[2], x.shape()[3]];
            Ok(vec![
                if want(0) { Some(g.conv_transpose2d(w, *geom, hw)?) } else { None },
                if want(1) { Some(x.conv2d_weight_grad(g, *geom)?) } else { None },
            ])
        }
        Op::ConvTranspose(geom) => {
            // out = convᵀ(x, w); cotangent g lives on the output grid.
            let w = &inputs[1];
            Ok(vec![
                if want(0) { Some(g.conv2d(w, *geom)?) } else { None },
                if want(1) { Some(g.conv2d_weight_grad(x, *geom)?) } else { None },
            ])
        }
        Op::ConvWeightGrad(geom) => {
            // out = wgrad(x, gy); cotangent g is weight-shaped.
            let gy = &inputs[1];
            let hw = [x.shape()[2], x.shape()[3]];
            Ok(vec![
                if want(0) { Some(gy.conv_transpose2d(g, *geom, hw)?) } else { None },
                if want(1) { Some(x.conv2d(g, *geom)?) } else { None },
            ])
        }
        Op::Resize => single(g.resize_bilinear_adjoint(x.shape()[2], x.shape()[3])?),
        Op::ResizeAdjoint => single(g.resize_bilinear(x.shape()[2], x.shape()[3])?),
        Op::SoftmaxCrossEntropy(labels) => {
            if create_graph {
                return Err(TensorError::UnsupportedSecondOrder(op.name()));
            }
            let (n, k) = (x.shape()[0], x.shape()[1]);
            let scale = g.item()? / n as f32;
            let mut probs = x.softmax_rows()?.to_vec();
            for (row, &label) in probs.chunks_mut(k).zip(labels.iter()) {
                row[label] -= 1.0;
                row.iter_mut().for_each(|v| *v *= scale);
            }
            single(Tensor::constant(x.shape().to_vec(), probs))
        }
    }
}
