//! Rank-3 tensor with `(channels, height, width)` layout.
//!
//! Data is stored row-major with the channel dimension outermost:
//! `data[c * h * w + y * w + x]`. All values must be finite; constructors
//! reject NaN and infinity so downstream kernels never have to re-check.

use crate::{KernelError, Result};

/// One of the three tensor dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Channels,
    Height,
    Width,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::Channels => 0,
            Axis::Height => 1,
            Axis::Width => 2,
        }
    }
}

/// Rotation direction for [`Tensor::rotate_dims`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    Clockwise,
    CounterClockwise,
}

impl Rotation {
    /// The rotation that undoes `self`.
    pub fn inverse(self) -> Rotation {
        match self {
            Rotation::Clockwise => Rotation::CounterClockwise,
            Rotation::CounterClockwise => Rotation::Clockwise,
        }
    }
}

/// Dense rank-3 tensor of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor from raw data in channel-outermost row-major order.
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Tensor> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(KernelError::Dimension(format!(
                "tensor dimensions must be positive, got {}x{}x{}",
                channels, height, width
            )));
        }
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(KernelError::Dimension(format!(
                "data length {} does not match shape {}x{}x{} ({} values)",
                data.len(),
                channels,
                height,
                width,
                expected
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(KernelError::Domain(format!(
                "tensor values must be finite, got {bad}"
            )));
        }
        Ok(Tensor {
            channels,
            height,
            width,
            data,
        })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Tensor> {
        Tensor::new(channels, height, width, vec![0.0; channels * height * width])
    }

    /// Constant-filled tensor of the given shape.
    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Result<Tensor> {
        Tensor::new(channels, height, width, vec![value; channels * height * width])
    }

    /// Builds a tensor by evaluating `f(c, y, x)` at every coordinate.
    pub fn from_fn<F>(channels: usize, height: usize, width: usize, mut f: F) -> Result<Tensor>
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Tensor::new(channels, height, width, data)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn offset(&self, c: usize, y: usize, x: usize) -> usize {
        debug_assert!(c < self.channels && y < self.height && x < self.width);
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.offset(c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, value: f64) {
        let i = self.offset(c, y, x);
        self.data[i] = value;
    }

    fn dim(&self, axis: Axis) -> usize {
        match axis {
            Axis::Channels => self.channels,
            Axis::Height => self.height,
            Axis::Width => self.width,
        }
    }

    /// Transposes two dimensions (a pure relabeling, no flips).
    pub fn swap_axes(&self, a: Axis, b: Axis) -> Tensor {
        if a == b {
            return self.clone();
        }
        let mut shape = [self.channels, self.height, self.width];
        shape.swap(a.index(), b.index());
        let (nc, nh, nw) = (shape[0], shape[1], shape[2]);
        let mut out = vec![0.0; self.data.len()];
        for c in 0..self.channels {
            for y in 0..self.height {
                for x in 0..self.width {
                    let mut idx = [c, y, x];
                    idx.swap(a.index(), b.index());
                    out[(idx[0] * nh + idx[1]) * nw + idx[2]] = self.get(c, y, x);
                }
            }
        }
        Tensor {
            channels: nc,
            height: nh,
            width: nw,
            data: out,
        }
    }

    /// Rotates the tensor 90 degrees in the plane spanned by `a` and `b`,
    /// carrying the remaining dimension along unchanged.
    ///
    /// `a` plays the role of the row index and `b` the column index of the
    /// rotated plane; the output has the sizes of `a` and `b` swapped.
    /// Applying the inverse rotation recovers the input exactly.
    pub fn rotate_dims(&self, a: Axis, b: Axis, direction: Rotation) -> Result<Tensor> {
        if a == b {
            return Err(KernelError::Parameter(
                "rotation plane requires two distinct dimensions".into(),
            ));
        }
        let rows = self.dim(a);
        let mut shape = [self.channels, self.height, self.width];
        shape.swap(a.index(), b.index());
        let (nc, nh, nw) = (shape[0], shape[1], shape[2]);
        let mut out = vec![0.0; self.data.len()];
        for c in 0..self.channels {
            for y in 0..self.height {
                for x in 0..self.width {
                    let idx = [c, y, x];
                    let (i, j) = (idx[a.index()], idx[b.index()]);
                    // Row i, column j maps to (j, rows-1-i) clockwise and
                    // (cols-1-j, i) counterclockwise; cols-1-j is expressed
                    // through the swapped output shape below.
                    let (ri, rj) = match direction {
                        Rotation::Clockwise => (j, rows - 1 - i),
                        Rotation::CounterClockwise => (self.dim(b) - 1 - j, i),
                    };
                    let mut dst = idx;
                    dst[a.index()] = ri;
                    dst[b.index()] = rj;
                    out[(dst[0] * nh + dst[1]) * nw + dst[2]] = self.get(c, y, x);
                }
            }
        }
        Ok(Tensor {
            channels: nc,
            height: nh,
            width: nw,
            data: out,
        })
    }

    /// Concatenates tensors along the channel dimension. All inputs must
    /// share height and width.
    pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| KernelError::Parameter("concat requires at least one tensor".into()))?;
        let (h, w) = (first.height, first.width);
        let mut channels = 0;
        for t in parts {
            if t.height != h || t.width != w {
                return Err(KernelError::Dimension(format!(
                    "concat spatial mismatch: {}x{} vs {}x{}",
                    t.height, t.width, h, w
                )));
            }
            channels += t.channels;
        }
        let mut data = Vec::with_capacity(channels * h * w);
        for t in parts {
            data.extend_from_slice(&t.data);
        }
        Ok(Tensor {
            channels,
            height: h,
            width: w,
            data,
        })
    }

    /// Applies `f` elementwise. The result must remain finite.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Tensor> {
        Tensor::new(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// Z-pooling: reduces `axis` to size 2 by stacking the max-slice and the
/// mean-slice along that axis, in that order.
pub fn zpool(t: &Tensor, axis: Axis) -> Result<Tensor> {
    let reduced = t.dim(axis);
    let mut shape = [t.channels, t.height, t.width];
    shape[axis.index()] = 2;
    let (nc, nh, nw) = (shape[0], shape[1], shape[2]);
    let mut out = Tensor {
        channels: nc,
        height: nh,
        width: nw,
        data: vec![0.0; nc * nh * nw],
    };
    // Iterate over the two kept dimensions; scan the reduced one.
    let kept: Vec<Axis> = [Axis::Channels, Axis::Height, Axis::Width]
        .into_iter()
        .filter(|&ax| ax != axis)
        .collect();
    let (ka, kb) = (kept[0], kept[1]);
    for i in 0..t.dim(ka) {
        for j in 0..t.dim(kb) {
            let mut max = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for r in 0..reduced {
                let mut idx = [0usize; 3];
                idx[ka.index()] = i;
                idx[kb.index()] = j;
                idx[axis.index()] = r;
                let v = t.get(idx[0], idx[1], idx[2]);
                if v > max {
                    max = v;
                }
                sum += v;
            }
            let mean = sum / reduced as f64;
            for (slot, value) in [(0usize, max), (1usize, mean)] {
                let mut idx = [0usize; 3];
                idx[ka.index()] = i;
                idx[kb.index()] = j;
                idx[axis.index()] = slot;
                out.set(idx[0], idx[1], idx[2], value);
            }
        }
    }
    Ok(out)
}
