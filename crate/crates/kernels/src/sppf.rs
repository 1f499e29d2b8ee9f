//! Cross-stage pooling-pyramid block.
//!
//! The main path runs a stack of pre-pool convolutions, then three chained
//! same-padded max pools of one odd window size. Chaining grows the receptive
//! field the way single pools of 5, 9 and 13 would, at the cost of only one
//! window size. The pre-pool tensor and the three pooled tensors are
//! concatenated and fused back down; a pointwise shortcut of the block input
//! joins by concatenation and a final pointwise convolution mixes the two
//! paths. Unit stride everywhere, so the spatial size is preserved.

use rand::Rng;

use crate::conv::{conv2d_unit_stride, max_pool2d_same, ConvKernel, Padding};
use crate::tensor::Tensor;
use crate::{KernelError, Result};

/// Default pooling window.
pub const DEFAULT_POOL_KERNEL: usize = 5;

/// Parameters of the pooling-pyramid block. `hidden` denotes the working
/// channel width shared by both paths; by convention it defaults to half the
/// input channels.
#[derive(Debug, Clone)]
pub struct SppfcspcParams {
    pool_kernel: usize,
    pre_pool: Vec<ConvKernel>,
    post_pool: Vec<ConvKernel>,
    shortcut: ConvKernel,
    fusion: ConvKernel,
}

impl SppfcspcParams {
    pub fn new(
        pool_kernel: usize,
        pre_pool: Vec<ConvKernel>,
        post_pool: Vec<ConvKernel>,
        shortcut: ConvKernel,
        fusion: ConvKernel,
    ) -> Result<SppfcspcParams> {
        if pool_kernel == 0 || pool_kernel.is_multiple_of(2) {
            return Err(KernelError::Parameter(format!(
                "pool window must be odd and positive, got {pool_kernel}"
            )));
        }
        let hidden = pre_pool
            .last()
            .ok_or_else(|| {
                KernelError::Parameter("main path needs at least one pre-pool convolution".into())
            })?
            .out_channels();
        for pair in pre_pool.windows(2) {
            if pair[1].in_channels() != pair[0].out_channels() {
                return Err(KernelError::Parameter(
                    "pre-pool convolutions do not chain: channel mismatch".into(),
                ));
            }
        }
        let first_post = post_pool.first().ok_or_else(|| {
            KernelError::Parameter("main path needs at least one post-pool convolution".into())
        })?;
        if first_post.in_channels() != 4 * hidden {
            return Err(KernelError::Parameter(format!(
                "post-pool fusion must consume 4*hidden = {} channels, got {}",
                4 * hidden,
                first_post.in_channels()
            )));
        }
        for pair in post_pool.windows(2) {
            if pair[1].in_channels() != pair[0].out_channels() {
                return Err(KernelError::Parameter(
                    "post-pool convolutions do not chain: channel mismatch".into(),
                ));
            }
        }
        let main_out = post_pool.last().expect("checked non-empty").out_channels();
        if !shortcut.is_pointwise() {
            return Err(KernelError::Parameter(
                "shortcut convolution must be pointwise (1x1)".into(),
            ));
        }
        if shortcut.in_channels() != pre_pool[0].in_channels() {
            return Err(KernelError::Parameter(
                "shortcut must consume the block input channels".into(),
            ));
        }
        if !fusion.is_pointwise() {
            return Err(KernelError::Parameter(
                "final fusion convolution must be pointwise (1x1)".into(),
            ));
        }
        if fusion.in_channels() != main_out + shortcut.out_channels() {
            return Err(KernelError::Parameter(format!(
                "final fusion must consume {} channels (main {} + shortcut {}), got {}",
                main_out + shortcut.out_channels(),
                main_out,
                shortcut.out_channels(),
                fusion.in_channels()
            )));
        }
        Ok(SppfcspcParams {
            pool_kernel,
            pre_pool,
            post_pool,
            shortcut,
            fusion,
        })
    }

    /// Standard wiring with random weights: pointwise reduce to `hidden`, a
    /// 3x3 and a pointwise refinement before pooling, pointwise plus 3x3
    /// fusion after, pointwise shortcut, pointwise final fusion to
    /// `out_channels`. Deterministic per RNG state.
    pub fn seeded<R: Rng>(
        in_channels: usize,
        hidden: usize,
        out_channels: usize,
        pool_kernel: usize,
        rng: &mut R,
    ) -> Result<SppfcspcParams> {
        if hidden == 0 {
            return Err(KernelError::Parameter("hidden width must be positive".into()));
        }
        let pre_pool = vec![
            ConvKernel::random(hidden, in_channels, 1, rng),
            ConvKernel::random(hidden, hidden, 3, rng),
            ConvKernel::random(hidden, hidden, 1, rng),
        ];
        let post_pool = vec![
            ConvKernel::random(hidden, 4 * hidden, 1, rng),
            ConvKernel::random(hidden, hidden, 3, rng),
        ];
        let shortcut = ConvKernel::random(hidden, in_channels, 1, rng);
        let fusion = ConvKernel::random(out_channels, 2 * hidden, 1, rng);
        SppfcspcParams::new(pool_kernel, pre_pool, post_pool, shortcut, fusion)
    }

    /// [`SppfcspcParams::seeded`] with the conventional `hidden = in/2`.
    pub fn seeded_default<R: Rng>(
        in_channels: usize,
        out_channels: usize,
        rng: &mut R,
    ) -> Result<SppfcspcParams> {
        SppfcspcParams::seeded(
            in_channels,
            (in_channels / 2).max(1),
            out_channels,
            DEFAULT_POOL_KERNEL,
            rng,
        )
    }

    pub fn pool_kernel(&self) -> usize {
        self.pool_kernel
    }

    pub fn out_channels(&self) -> usize {
        self.fusion.out_channels()
    }
}

/// Runs the block. The output has the fusion convolution's channel count and
/// the input's spatial size.
pub fn sppfcspc_forward(t: &Tensor, params: &SppfcspcParams) -> Result<Tensor> {
    let mut main = t.clone();
    for conv in &params.pre_pool {
        main = conv2d_unit_stride(&main, conv, Padding::Same)?;
    }
    let p1 = max_pool2d_same(&main, params.pool_kernel)?;
    let p2 = max_pool2d_same(&p1, params.pool_kernel)?;
    let p3 = max_pool2d_same(&p2, params.pool_kernel)?;
    let mut fused = Tensor::concat_channels(&[&main, &p1, &p2, &p3])?;
    for conv in &params.post_pool {
        fused = conv2d_unit_stride(&fused, conv, Padding::Same)?;
    }
    let short = conv2d_unit_stride(t, &params.shortcut, Padding::Same)?;
    let joined = Tensor::concat_channels(&[&fused, &short])?;
    conv2d_unit_stride(&joined, &params.fusion, Padding::Same)
}
