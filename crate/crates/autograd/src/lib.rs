//! Dense `f32` tensors with reverse-mode automatic differentiation.
//!
//! Gradients can be taken of expressions that themselves contain gradients:
//! [`grad_with_graph`] returns a gradient that is part of a differentiable
//! graph, which is what a gradient-norm penalty on a critic requires.
//!
//! ```
//! use tsgan_autograd::{backward, grad_with_graph, Tensor};
//!
//! let x = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap().requires_grad();
//! let g = grad_with_graph(&x.square().sum(), &x).unwrap(); // 2x
//! let grads = backward(&g.sum(), &[&x]).unwrap();
//! assert_eq!(grads.get(&x).unwrap().data(), &[2.0, 2.0, 2.0]);
//! ```

mod backward;
mod conv;
mod error;
mod gradcheck;
mod op;
pub mod shape;
mod tensor;

pub use backward::{backward, grad, grad_with_graph, GradMap};
pub use conv::ConvGeom;
pub use error::{Result, TensorError};
pub use gradcheck::{finite_difference_oracle, relative_error};
pub use tensor::{Tensor, TensorId};
