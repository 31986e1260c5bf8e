use std::fmt;
use std::sync::Arc;

use crate::error::{Result, TensorError};
use crate::op::Op;
use crate::shape::numel;

/// A dense row-major `f32` array with an optional differentiation record.
///
/// Cloning is cheap: data and graph records are reference counted. A tensor
/// that does not require gradients carries no node at all.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) shape: Arc<[usize]>,
    pub(crate) data: Arc<Vec<f32>>,
    pub(crate) node: Option<Arc<Node>>,
}

pub(crate) struct Node {
    pub(crate) op: Op,
    pub(crate) inputs: Vec<Tensor>,
}

/// Identity of a tensor that participates in differentiation.
///
/// Ids are stable for as long as the tensor (or a clone of it) is alive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TensorId(usize);

impl TensorId {
    pub(crate) fn of(node: &Arc<Node>) -> Self {
        TensorId(Arc::as_ptr(node) as *const () as usize)
    }
}

impl Tensor {
    pub fn from_vec(shape: &[usize], data: Vec<f32>) -> Result<Self> {
        if numel(shape) != data.len() {
            return Err(TensorError::DataLength {
                len: data.len(),
                shape: shape.to_vec(),
            });
        }
        Ok(Self::constant(shape.to_vec(), data))
    }

    pub(crate) fn constant(shape: Vec<usize>, data: Vec<f32>) -> Self {
        assert_eq!(numel(&shape), data.len());
        Tensor {
            shape: shape.into(),
            data: Arc::new(data),
            node: None,
        }
    }

    pub fn scalar(value: f32) -> Self {
        Self::constant(vec![], vec![value])
    }

    pub fn full(shape: &[usize], value: f32) -> Self {
        Self::constant(shape.to_vec(), vec![value; numel(shape)])
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, 1.0)
    }

    /// Returns a leaf that gradients can be taken with respect to.
    pub fn requires_grad(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.clone(),
            node: Some(Arc::new(Node {
                op: Op::Leaf,
                inputs: Vec::new(),
            })),
        }
    }

    /// Same values, cut from any differentiation graph.
    pub fn detach(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.clone(),
            node: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn to_vec(&self) -> Vec<f32> {
        self.data.as_ref().clone()
    }

    pub fn requires_grad_flag(&self) -> bool {
        self.node.is_some()
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.node.as_deref(), Some(Node { op: Op::Leaf, .. }))
    }

    pub fn id(&self) -> Option<TensorId> {
        self.node.as_ref().map(TensorId::of)
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Result<f32> {
        if self.data.len() != 1 {
            return Err(TensorError::invalid(
                "item",
                format!("tensor of shape {:?} is not a scalar", self.shape()),
            ));
        }
        Ok(self.data[0])
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Builds an op output, attaching a node only when some input is tracked.
    pub(crate) fn record(op: Op, inputs: Vec<Tensor>, shape: Vec<usize>, data: Vec<f32>) -> Tensor {
        assert_eq!(numel(&shape), data.len(), "{}", op.name());
        let tracked = inputs.iter().any(|t| t.node.is_some());
        Tensor {
            shape: shape.into(),
            data: Arc::new(data),
            node: tracked.then(|| Arc::new(Node { op, inputs })),
        }
    }

    /// Like [`Tensor::record`] but sharing an existing buffer.
    pub(crate) fn record_shared(op: Op, inputs: Vec<Tensor>, shape: Vec<usize>, data: Arc<Vec<f32>>) -> Tensor {
        let tracked = inputs.iter().any(|t| t.node.is_some());
        Tensor {
            shape: shape.into(),
            data,
            node: tracked.then(|| Arc::new(Node { op, inputs })),
        }
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = self.node.as_ref().map(|n| n.op.name());
        let preview: Vec<f32> = self.data.iter().take(8).copied().collect();
        f.debug_struct("Tensor")
            .field("shape", &self.shape())
            .field("op", &op)
            .field("data", &preview)
            .finish()
    }
}

/// Value equality; differentiation records are ignored.
impl PartialEq for Tensor {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.data == other.data
    }
}
