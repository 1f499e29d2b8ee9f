//! Numerical building blocks for a thermal-image detector, implemented at
//! verification scale: plain `f64` arithmetic, no batching, no acceleration.
//!
//! The crate covers the pieces of the detector that carry the interesting
//! math: rank-3 tensors with channel/height/width layout, Z-pooling,
//! rotation/permutation plumbing, unit-stride convolution, the three-branch
//! attention gate, space-to-depth downsampling, the chained max-pool pyramid,
//! and the classification losses with their analytic derivatives. Every
//! operation is deterministic and shape-checked so that independent oracles
//! (finite differences, exact inverses, reduction identities) can pin the
//! behavior down in tests.

mod error;

pub mod attention;
pub mod conv;
pub mod gradcheck;
pub mod loss;
pub mod selfcheck;
pub mod spd;
pub mod sppf;
pub mod tensor;

pub use error::{KernelError, Result};

pub use attention::{triplet_attention, TripletParams};
pub use conv::{conv2d_unit_stride, max_pool2d_same, ConvKernel, Padding};
pub use gradcheck::{finite_diff_gradient, finite_diff_scalar};
pub use loss::{
    cross_entropy, cross_entropy_grad, focal_loss, focal_loss_grad, quality_focal_loss,
    quality_focal_loss_grad, LossParams,
};
pub use selfcheck::{run_selfcheck, PropertyReport};
pub use spd::{inverse_spd, spd_conv, spd_transform, SpdParams};
pub use sppf::{sppfcspc_forward, SppfcspcParams};
pub use tensor::{zpool, Axis, Rotation, Tensor};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
