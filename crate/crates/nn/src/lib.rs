//! Layers, networks, Adam and binary checkpoints built on `tsgan-autograd`.
//!
//! ```
//! use tsgan_autograd::Tensor;
//! use tsgan_nn::{LayerSpec, Network};
//!
//! let net = Network::new(&[3], vec![
//!     LayerSpec::Dense { inputs: 3, outputs: 4 },
//!     LayerSpec::LeakyRelu { slope: 0.2 },
//!     LayerSpec::Dense { inputs: 4, outputs: 1 },
//! ])
//! .unwrap()
//! .initialized(7);
//! let y = net.forward_eval(&Tensor::zeros(&[2, 3])).unwrap();
//! assert_eq!(y.shape(), &[2, 1]);
//! ```

mod adam;
pub mod checkpoint;
mod error;
mod layer;
mod network;

pub use adam::{clip_tensor, weight_clip, AdamConfig, AdamState, Moments};
pub use error::{NnError, Result};
pub use layer::{LayerSpec, BATCH_NORM_EPS, BATCH_NORM_MOMENTUM};
pub use network::{Mode, Network, RunningStats, INIT_STDDEV};
