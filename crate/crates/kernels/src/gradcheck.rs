//! Central finite differences for verifying analytic derivatives.

use crate::{Result, Tensor};

/// Default step for central differences; near the f64 sweet spot
/// `cbrt(machine epsilon)` for second-order accurate stencils.
pub const DEFAULT_STEP: f64 = 1e-6;

/// Central difference of a scalar function: `(f(x+h) - f(x-h)) / (2h)`.
pub fn finite_diff_scalar<F: Fn(f64) -> f64>(f: F, x: f64, step: f64) -> f64 {
    (f(x + step) - f(x - step)) / (2.0 * step)
}

/// Per-coordinate central differences of a scalar-valued tensor function.
/// Returns a tensor of the input's shape holding `df/dx_i` estimates.
pub fn finite_diff_gradient<F>(f: F, t: &Tensor, step: f64) -> Result<Tensor>
where
    F: Fn(&Tensor) -> f64,
{
    let (c, h, w) = t.shape();
    let mut grad = Tensor::zeros(c, h, w)?;
    let mut probe = t.clone();
    for ci in 0..c {
        for y in 0..h {
            for x in 0..w {
                let original = t.get(ci, y, x);
                probe.set(ci, y, x, original + step);
                let plus = f(&probe);
                probe.set(ci, y, x, original - step);
                let minus = f(&probe);
                probe.set(ci, y, x, original);
                grad.set(ci, y, x, (plus - minus) / (2.0 * step));
            }
        }
    }
    Ok(grad)
}
