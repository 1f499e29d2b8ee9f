//! Three-branch attention gate over a rank-3 tensor.
//!
//! Each branch exposes a different pair of dimensions to a shared recipe:
//! permute so the pair of interest is spatial, Z-pool the leading dimension
//! down to [max, mean], run a same-padded k x k convolution to a single
//! channel, squash with the logistic sigmoid, gate the permuted input
//! elementwise, and permute back. Branch 1 exchanges channels with height,
//! branch 2 exchanges channels with width, and branch 3 works on the
//! unpermuted tensor (plain spatial attention). The output is the arithmetic
//! mean of the three branch outputs.

use rand::Rng;

use crate::conv::{conv2d_unit_stride, ConvKernel, Padding};
use crate::tensor::{zpool, Axis, Tensor};
use crate::{KernelError, Result};

/// Default attention convolution size.
pub const DEFAULT_KERNEL_SIZE: usize = 7;

/// Parameters of the three-branch attention gate: one 2-in/1-out square
/// convolution per branch, all of the same odd size.
#[derive(Debug, Clone)]
pub struct TripletParams {
    branch_kernels: [ConvKernel; 3],
    kernel_size: usize,
    bypass_gates: bool,
}

impl TripletParams {
    pub fn new(branch_kernels: [ConvKernel; 3], bypass_gates: bool) -> Result<TripletParams> {
        let (kh, kw) = branch_kernels[0].kernel_size();
        if kh != kw || kh % 2 == 0 {
            return Err(KernelError::Parameter(format!(
                "attention kernels must be square with odd size, got {kh}x{kw}"
            )));
        }
        for (i, k) in branch_kernels.iter().enumerate() {
            if k.in_channels() != 2 || k.out_channels() != 1 {
                return Err(KernelError::Parameter(format!(
                    "branch {i} kernel must map 2 channels to 1, got {} to {}",
                    k.in_channels(),
                    k.out_channels()
                )));
            }
            if k.kernel_size() != (kh, kw) {
                return Err(KernelError::Parameter(
                    "all branch kernels must share one size".into(),
                ));
            }
        }
        Ok(TripletParams {
            branch_kernels,
            kernel_size: kh,
            bypass_gates,
        })
    }

    /// Random parameters of the given kernel size; deterministic per RNG state.
    pub fn seeded<R: Rng>(kernel_size: usize, rng: &mut R) -> Result<TripletParams> {
        let kernels = [
            ConvKernel::random(1, 2, kernel_size, rng),
            ConvKernel::random(1, 2, kernel_size, rng),
            ConvKernel::random(1, 2, kernel_size, rng),
        ];
        TripletParams::new(kernels, false)
    }

    /// Parameters whose gates are forced to 1 (identity behavior); the
    /// kernel weights are never evaluated. Test hook.
    pub fn bypass(kernel_size: usize) -> Result<TripletParams> {
        let k = || {
            ConvKernel::constant(1, 2, kernel_size, 0.0)
                .expect("constant kernel of validated size")
        };
        TripletParams::new([k(), k(), k()], true)
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    pub fn bypass_gates(&self) -> bool {
        self.bypass_gates
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// One branch: Z-pool the leading dimension of an already-permuted tensor,
/// convolve to a single-channel map, squash, and gate the permuted input.
fn gated_branch(permuted: &Tensor, kernel: &ConvKernel, bypass: bool) -> Result<Tensor> {
    if bypass {
        return Ok(permuted.clone());
    }
    let pooled = zpool(permuted, Axis::Channels)?;
    let conv = conv2d_unit_stride(&pooled, kernel, Padding::Same)?;
    let gate = conv.map(sigmoid)?;
    let (c, h, w) = permuted.shape();
    Tensor::from_fn(c, h, w, |ci, y, x| permuted.get(ci, y, x) * gate.get(0, y, x))
}

/// Applies the three-branch attention gate. The output shape equals the
/// input shape, and with active gates every output magnitude is bounded by
/// the matching input magnitude (gates lie strictly inside (0, 1)).
pub fn triplet_attention(t: &Tensor, params: &TripletParams) -> Result<Tensor> {
    // Branch 1: channels <-> height.
    let perm1 = t.swap_axes(Axis::Channels, Axis::Height);
    let out1 = gated_branch(&perm1, &params.branch_kernels[0], params.bypass_gates)?
        .swap_axes(Axis::Channels, Axis::Height);
    // Branch 2: channels <-> width.
    let perm2 = t.swap_axes(Axis::Channels, Axis::Width);
    let out2 = gated_branch(&perm2, &params.branch_kernels[1], params.bypass_gates)?
        .swap_axes(Axis::Channels, Axis::Width);
    // Branch 3: spatial attention on the unpermuted tensor.
    let out3 = gated_branch(t, &params.branch_kernels[2], params.bypass_gates)?;

    let (c, h, w) = t.shape();
    // Averaged as a + (deltas)/3 rather than (a+b+c)/3 so that three
    // bit-identical branches (the bypass case) reproduce the input exactly.
    Tensor::from_fn(c, h, w, |ci, y, x| {
        let a = out1.get(ci, y, x);
        let b = out2.get(ci, y, x);
        let c3 = out3.get(ci, y, x);
        a + ((b - a) + (c3 - a)) / 3.0
    })
}
