//! Space-to-depth transform and its convolution wrapper.
//!
//! `spd_transform` rearranges an `C x H x W` tensor into
//! `scale^2 * C x H/scale x W/scale` by slicing out the `scale x scale`
//! phase submaps and stacking them along channels. The rearrangement is
//! lossless; [`inverse_spd`] restores the input bit for bit. `spd_conv`
//! follows the transform with a strict channel-reducing convolution, which is
//! what lets the block downsample without discarding pixels.

use crate::conv::{conv2d_unit_stride, ConvKernel, Padding};
use crate::tensor::Tensor;
use crate::{KernelError, Result};

/// Parameters of the space-to-depth convolution block.
#[derive(Debug, Clone)]
pub struct SpdParams {
    scale: usize,
    kernel: ConvKernel,
}

impl SpdParams {
    /// Validates that the kernel consumes `scale^2 * C1` channels for some
    /// whole `C1` and strictly reduces the channel count.
    pub fn new(scale: usize, kernel: ConvKernel) -> Result<SpdParams> {
        if scale == 0 {
            return Err(KernelError::Parameter("scale must be positive".into()));
        }
        let expanded = kernel.in_channels();
        if !expanded.is_multiple_of(scale * scale) {
            return Err(KernelError::Parameter(format!(
                "kernel input channels {expanded} are not a multiple of scale^2 = {}",
                scale * scale
            )));
        }
        if kernel.out_channels() >= expanded {
            return Err(KernelError::Parameter(format!(
                "space-to-depth convolution must reduce channels: {} -> {}",
                expanded,
                kernel.out_channels()
            )));
        }
        Ok(SpdParams { scale, kernel })
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn kernel(&self) -> &ConvKernel {
        &self.kernel
    }
}

fn check_divisible(t: &Tensor, scale: usize) -> Result<()> {
    if scale == 0 {
        return Err(KernelError::Parameter("scale must be positive".into()));
    }
    if !t.height().is_multiple_of(scale) || !t.width().is_multiple_of(scale) {
        return Err(KernelError::Dimension(format!(
            "spatial size {}x{} is not divisible by scale {}",
            t.height(),
            t.width(),
            scale
        )));
    }
    Ok(())
}

/// Space-to-depth: output channel block `p = y_off * scale + x_off` holds the
/// submap taken at row offset `x_off` and column offset `y_off` (row offset
/// varies fastest), so
/// `out[p*C + c, i, j] = in[c, i*scale + x_off, j*scale + y_off]`.
pub fn spd_transform(t: &Tensor, scale: usize) -> Result<Tensor> {
    check_divisible(t, scale)?;
    let (c_in, h, w) = t.shape();
    let (oh, ow) = (h / scale, w / scale);
    let mut out = Tensor::zeros(scale * scale * c_in, oh, ow)?;
    for y_off in 0..scale {
        for x_off in 0..scale {
            let block = y_off * scale + x_off;
            for c in 0..c_in {
                for i in 0..oh {
                    for j in 0..ow {
                        let v = t.get(c, i * scale + x_off, j * scale + y_off);
                        out.set(block * c_in + c, i, j, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exact inverse of [`spd_transform`]: requires the channel count to be a
/// multiple of `scale^2` and restores the original values bit for bit.
pub fn inverse_spd(t: &Tensor, scale: usize) -> Result<Tensor> {
    if scale == 0 {
        return Err(KernelError::Parameter("scale must be positive".into()));
    }
    let (c_exp, oh, ow) = t.shape();
    if c_exp % (scale * scale) != 0 {
        return Err(KernelError::Dimension(format!(
            "channel count {c_exp} is not a multiple of scale^2 = {}",
            scale * scale
        )));
    }
    let c_in = c_exp / (scale * scale);
    let mut out = Tensor::zeros(c_in, oh * scale, ow * scale)?;
    for y_off in 0..scale {
        for x_off in 0..scale {
            let block = y_off * scale + x_off;
            for c in 0..c_in {
                for i in 0..oh {
                    for j in 0..ow {
                        let v = t.get(block * c_in + c, i, j);
                        out.set(c, i * scale + x_off, j * scale + y_off, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Space-to-depth followed by the configured channel-reducing convolution.
pub fn spd_conv(t: &Tensor, params: &SpdParams) -> Result<Tensor> {
    let expanded = spd_transform(t, params.scale)?;
    conv2d_unit_stride(&expanded, &params.kernel, Padding::Same)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_single_channel_2x2_example() {
        // [[1,2],[3,4]] at scale 2 collapses to four 1x1 channels ordered
        // [1, 3, 2, 4]: the row offset varies fastest within the block.
        let t = Tensor::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = spd_transform(&t, 2).unwrap();
        assert_eq!(out.shape(), (4, 1, 1));
        assert_eq!(out.data(), &[1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn shape_expands_channels_and_shrinks_space() {
        let t = Tensor::zeros(3, 640, 640).unwrap();
        let out = spd_transform(&t, 2).unwrap();
        assert_eq!(out.shape(), (12, 320, 320));
    }

    #[test]
    fn scale_one_is_identity() {
        let t = Tensor::new(2, 3, 3, (0..18).map(f64::from).collect()).unwrap();
        assert_eq!(spd_transform(&t, 1).unwrap(), t);
        assert_eq!(inverse_spd(&t, 1).unwrap(), t);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = Tensor::from_fn(3, 8, 12, |c, y, x| {
            ((c * 1000 + y * 10 + x) as f64).sqrt() * 0.123456789
        })
        .unwrap();
        for scale in [1usize, 2, 4] {
            let fwd = spd_transform(&t, scale).unwrap();
            let back = inverse_spd(&fwd, scale).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn indivisible_spatial_size_is_rejected() {
        let t = Tensor::zeros(1, 3, 4).unwrap();
        assert!(spd_transform(&t, 2).is_err());
    }

    #[test]
    fn inverse_rejects_indivisible_channels() {
        let t = Tensor::zeros(3, 2, 2).unwrap();
        assert!(inverse_spd(&t, 2).is_err());
    }

    #[test]
    fn params_reject_non_reducing_kernel() {
        // scale^2 * C1 = 4 input channels; 4 or more output channels is not
        // a reduction.
        let k = ConvKernel::constant(4, 4, 3, 0.1).unwrap();
        assert!(SpdParams::new(2, k).is_err());
        let k = ConvKernel::constant(3, 4, 3, 0.1).unwrap();
        assert!(SpdParams::new(2, k).is_ok());
    }

    #[test]
    fn spd_conv_halves_space_and_sets_channels() {
        let t = Tensor::filled(2, 6, 6, 1.0).unwrap();
        let k = ConvKernel::constant(5, 8, 3, 0.25).unwrap();
        let params = SpdParams::new(2, k).unwrap();
        let out = spd_conv(&t, &params).unwrap();
        assert_eq!(out.shape(), (5, 3, 3));
    }
}
