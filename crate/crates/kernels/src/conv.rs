//! Unit-stride 2-D convolution (cross-correlation, no kernel flip) and
//! same-padded max pooling.

use rand::Rng;

use crate::{KernelError, Result, Tensor};

/// Zero-padding policy for [`conv2d_unit_stride`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero-pad so the spatial output size equals the input size.
    Same,
    /// No padding; the output shrinks by `kernel - 1` per spatial dimension.
    Valid,
}

/// Weights of a bias-free 2-D convolution: `out_channels` filters over
/// `in_channels`, each `kh x kw`, stored row-major as `[o][c][dy][dx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    out_channels: usize,
    in_channels: usize,
    kh: usize,
    kw: usize,
    weights: Vec<f64>,
}

impl ConvKernel {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kh: usize,
        kw: usize,
        weights: Vec<f64>,
    ) -> Result<ConvKernel> {
        if out_channels == 0 || in_channels == 0 || kh == 0 || kw == 0 {
            return Err(KernelError::Parameter(
                "convolution kernel dimensions must be positive".into(),
            ));
        }
        let expected = out_channels * in_channels * kh * kw;
        if weights.len() != expected {
            return Err(KernelError::Dimension(format!(
                "weight length {} does not match {}x{}x{}x{} ({expected} values)",
                weights.len(),
                out_channels,
                in_channels,
                kh,
                kw
            )));
        }
        if let Some(bad) = weights.iter().find(|v| !v.is_finite()) {
            return Err(KernelError::Domain(format!(
                "kernel weights must be finite, got {bad}"
            )));
        }
        Ok(ConvKernel {
            out_channels,
            in_channels,
            kh,
            kw,
            weights,
        })
    }

    /// Square kernel filled with a single constant.
    pub fn constant(
        out_channels: usize,
        in_channels: usize,
        k: usize,
        value: f64,
    ) -> Result<ConvKernel> {
        ConvKernel::new(
            out_channels,
            in_channels,
            k,
            k,
            vec![value; out_channels * in_channels * k * k],
        )
    }

    /// Square kernel with weights drawn uniformly from `[-0.5, 0.5)`.
    /// Deterministic for a given RNG state; used by tests and self-checks.
    pub fn random<R: Rng>(
        out_channels: usize,
        in_channels: usize,
        k: usize,
        rng: &mut R,
    ) -> ConvKernel {
        let weights = (0..out_channels * in_channels * k * k)
            .map(|_| rng.gen_range(-0.5..0.5))
            .collect();
        ConvKernel::new(out_channels, in_channels, k, k, weights)
            .expect("randomly generated kernel is well-formed")
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kh, self.kw)
    }

    /// True for 1x1 kernels (pure channel mixing).
    pub fn is_pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1
    }

    #[inline]
    fn weight(&self, o: usize, c: usize, dy: usize, dx: usize) -> f64 {
        self.weights[((o * self.in_channels + c) * self.kh + dy) * self.kw + dx]
    }
}

/// Unit-stride 2-D convolution in cross-correlation form (the kernel is not
/// flipped). With [`Padding::Same`] the border is zero-filled and the spatial
/// size is preserved; with [`Padding::Valid`] the output shrinks and the input
/// must be at least as large as the kernel.
pub fn conv2d_unit_stride(t: &Tensor, kernel: &ConvKernel, padding: Padding) -> Result<Tensor> {
    if t.channels() != kernel.in_channels {
        return Err(KernelError::Dimension(format!(
            "input has {} channels but kernel expects {}",
            t.channels(),
            kernel.in_channels
        )));
    }
    let (h, w) = (t.height(), t.width());
    let (kh, kw) = (kernel.kh, kernel.kw);
    let (out_h, out_w, pad_top, pad_left) = match padding {
        Padding::Same => (h, w, (kh - 1) / 2, (kw - 1) / 2),
        Padding::Valid => {
            if h < kh || w < kw {
                return Err(KernelError::Dimension(format!(
                    "valid convolution needs input at least {}x{}, got {}x{}",
                    kh, kw, h, w
                )));
            }
            (h - kh + 1, w - kw + 1, 0, 0)
        }
    };
    let mut out = Tensor::zeros(kernel.out_channels, out_h, out_w)?;
    for o in 0..kernel.out_channels {
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut acc = 0.0;
                for c in 0..kernel.in_channels {
                    for dy in 0..kh {
                        let sy = oy + dy;
                        let sy = match (sy + 1).checked_sub(pad_top + 1) {
                            Some(v) if v < h => v,
                            _ => continue,
                        };
                        for dx in 0..kw {
                            let sx = ox + dx;
                            let sx = match (sx + 1).checked_sub(pad_left + 1) {
                                Some(v) if v < w => v,
                                _ => continue,
                            };
                            acc += t.get(c, sy, sx) * kernel.weight(o, c, dy, dx);
                        }
                    }
                }
                out.set(o, oy, ox, acc);
            }
        }
    }
    Ok(out)
}

/// Same-padded max pooling with unit stride and an odd square window.
/// Padding acts as negative infinity, so a constant tensor pools to itself.
pub fn max_pool2d_same(t: &Tensor, k: usize) -> Result<Tensor> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(KernelError::Parameter(format!(
            "max-pool window must be odd and positive, got {k}"
        )));
    }
    let half = k / 2;
    let (ch, h, w) = t.shape();
    let mut out = Tensor::zeros(ch, h, w)?;
    for c in 0..ch {
        for y in 0..h {
            for x in 0..w {
                let mut best = f64::NEG_INFINITY;
                for sy in y.saturating_sub(half)..=(y + half).min(h - 1) {
                    for sx in x.saturating_sub(half)..=(x + half).min(w - 1) {
                        let v = t.get(c, sy, sx);
                        if v > best {
                            best = v;
                        }
                    }
                }
                out.set(c, y, x, best);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_kernel_on_constant_input_gives_window_sums() {
        // 3x3 all-ones kernel over a constant-1 input with zero padding:
        // interior outputs see the full 9-cell window, corners only 4.
        let t = Tensor::filled(1, 5, 5, 1.0).unwrap();
        let k = ConvKernel::constant(1, 1, 3, 1.0).unwrap();
        let out = conv2d_unit_stride(&t, &k, Padding::Same).unwrap();
        assert_eq!(out.shape(), (1, 5, 5));
        for y in 1..4 {
            for x in 1..4 {
                assert_eq!(out.get(0, y, x), 9.0);
            }
        }
        assert_eq!(out.get(0, 0, 0), 4.0);
        assert_eq!(out.get(0, 0, 2), 6.0);
    }

    #[test]
    fn valid_padding_shrinks_output() {
        let t = Tensor::filled(1, 5, 6, 1.0).unwrap();
        let k = ConvKernel::constant(1, 1, 3, 1.0).unwrap();
        let out = conv2d_unit_stride(&t, &k, Padding::Valid).unwrap();
        assert_eq!(out.shape(), (1, 3, 4));
        assert!(out.data().iter().all(|&v| v == 9.0));
    }

    #[test]
    fn valid_padding_rejects_small_input() {
        let t = Tensor::filled(1, 2, 2, 1.0).unwrap();
        let k = ConvKernel::constant(1, 1, 3, 1.0).unwrap();
        assert!(conv2d_unit_stride(&t, &k, Padding::Valid).is_err());
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let t = Tensor::filled(2, 3, 3, 1.0).unwrap();
        let k = ConvKernel::constant(1, 3, 3, 1.0).unwrap();
        assert!(conv2d_unit_stride(&t, &k, Padding::Same).is_err());
    }

    #[test]
    fn cross_correlation_does_not_flip_the_kernel() {
        // Kernel weight sits at (dy=0, dx=0), i.e. the top-left tap. For the
        // same-padded output at (1,1) that tap reads input (0,0).
        let t = Tensor::from_fn(1, 3, 3, |_, y, x| (y * 3 + x) as f64).unwrap();
        let mut weights = vec![0.0; 9];
        weights[0] = 1.0;
        let k = ConvKernel::new(1, 1, 3, 3, weights).unwrap();
        let out = conv2d_unit_stride(&t, &k, Padding::Same).unwrap();
        assert_eq!(out.get(0, 1, 1), t.get(0, 0, 0));
        assert_eq!(out.get(0, 2, 2), t.get(0, 1, 1));
    }

    #[test]
    fn pointwise_kernel_mixes_channels() {
        let t = Tensor::from_fn(2, 2, 2, |c, _, _| if c == 0 { 2.0 } else { 3.0 }).unwrap();
        let k = ConvKernel::new(1, 2, 1, 1, vec![10.0, 1.0]).unwrap();
        let out = conv2d_unit_stride(&t, &k, Padding::Same).unwrap();
        assert!(out.data().iter().all(|&v| v == 23.0));
    }

    #[test]
    fn max_pool_of_constant_is_identity() {
        for value in [3.0, -4.5] {
            let t = Tensor::filled(2, 4, 4, value).unwrap();
            let out = max_pool2d_same(&t, 5).unwrap();
            assert_eq!(out, t);
        }
    }

    #[test]
    fn max_pool_propagates_local_maxima() {
        let mut t = Tensor::zeros(1, 5, 5).unwrap();
        t.set(0, 2, 2, 7.0);
        let out = max_pool2d_same(&t, 3).unwrap();
        assert_eq!(out.get(0, 1, 1), 7.0);
        assert_eq!(out.get(0, 2, 2), 7.0);
        assert_eq!(out.get(0, 0, 0), 0.0);
    }

    #[test]
    fn max_pool_rejects_even_window() {
        let t = Tensor::zeros(1, 3, 3).unwrap();
        assert!(max_pool2d_same(&t, 4).is_err());
        assert!(max_pool2d_same(&t, 0).is_err());
    }

    #[test]
    fn kernel_rejects_bad_weight_length() {
        assert!(ConvKernel::new(1, 1, 3, 3, vec![0.0; 8]).is_err());
    }
}
