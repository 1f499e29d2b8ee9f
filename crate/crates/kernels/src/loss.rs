//! Scalar classification losses and their analytic derivatives.
//!
//! All three losses operate on a single probability (or logistic score) and
//! reduce to one another in documented limits: the focal loss with `gamma = 0`
//! and unit class weight is the cross entropy, and the quality focal loss at
//! binary targets is the focal loss with `gamma = beta` and unit class
//! weight. Logarithm arguments are clamped to `[epsilon, 1]` so the losses
//! stay finite on the closed unit interval.

use crate::{KernelError, Result};

/// Smallest admissible log argument when no explicit epsilon is given.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Shared loss hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    /// Positive-class weight of the focal loss, in `[0, 1]`.
    pub alpha: f64,
    /// Focusing exponent of the focal loss, non-negative.
    pub gamma: f64,
    /// Quality-focal modulating exponent, non-negative.
    pub beta: f64,
    /// Log-argument clamp, in `(0, 1e-6]`.
    pub epsilon: f64,
}

impl LossParams {
    pub fn new(alpha: f64, gamma: f64, beta: f64, epsilon: f64) -> Result<LossParams> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(KernelError::Parameter(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(KernelError::Parameter(format!(
                "gamma must be non-negative, got {gamma}"
            )));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(KernelError::Parameter(format!(
                "beta must be non-negative, got {beta}"
            )));
        }
        if !(epsilon > 0.0 && epsilon <= 1e-6) {
            return Err(KernelError::Parameter(format!(
                "epsilon must lie in (0, 1e-6], got {epsilon}"
            )));
        }
        Ok(LossParams {
            alpha,
            gamma,
            beta,
            epsilon,
        })
    }
}

impl Default for LossParams {
    fn default() -> LossParams {
        LossParams {
            alpha: 0.25,
            gamma: 2.0,
            beta: 2.0,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(KernelError::Domain(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1e-6) {
        return Err(KernelError::Parameter(format!(
            "epsilon must lie in (0, 1e-6], got {epsilon}"
        )));
    }
    Ok(())
}

fn clamped_ln(v: f64, epsilon: f64) -> f64 {
    v.clamp(epsilon, 1.0).ln()
}

/// Binary cross entropy `-ln(p_t)` with `p_t = p` for the positive class and
/// `1 - p` otherwise.
pub fn cross_entropy(p: f64, y: bool, epsilon: f64) -> Result<f64> {
    check_unit_interval("p", p)?;
    check_epsilon(epsilon)?;
    let p_t = if y { p } else { 1.0 - p };
    Ok(-clamped_ln(p_t, epsilon))
}

/// Derivative of [`cross_entropy`] with respect to `p`. Zero inside the
/// clamped region where the loss is constant.
pub fn cross_entropy_grad(p: f64, y: bool, epsilon: f64) -> Result<f64> {
    check_unit_interval("p", p)?;
    check_epsilon(epsilon)?;
    let p_t = if y { p } else { 1.0 - p };
    if p_t < epsilon {
        return Ok(0.0);
    }
    // d(-ln p_t)/dp_t = -1/p_t, times dp_t/dp = +-1.
    Ok(if y { -1.0 / p_t } else { 1.0 / p_t })
}

/// Focal loss `-alpha_t * (1 - p_t)^gamma * ln(p_t)` with
/// `alpha_t = alpha` for the positive class and `1 - alpha` otherwise.
pub fn focal_loss(p: f64, y: bool, params: &LossParams) -> Result<f64> {
    check_unit_interval("p", p)?;
    let p_t = if y { p } else { 1.0 - p };
    let alpha_t = if y { params.alpha } else { 1.0 - params.alpha };
    let modulator = (1.0 - p_t).powf(params.gamma);
    Ok(-alpha_t * modulator * clamped_ln(p_t, params.epsilon))
}

/// Derivative of [`focal_loss`] with respect to `p`.
pub fn focal_loss_grad(p: f64, y: bool, params: &LossParams) -> Result<f64> {
    check_unit_interval("p", p)?;
    let p_t = if y { p } else { 1.0 - p };
    let alpha_t = if y { params.alpha } else { 1.0 - params.alpha };
    if p_t < params.epsilon {
        // Inside the clamp the log term is constant; only the modulator
        // varies, and (1-p_t)^gamma has derivative -gamma*(1-p_t)^(gamma-1).
        let d_mod = if params.gamma == 0.0 {
            0.0
        } else {
            -params.gamma * (1.0 - p_t).powf(params.gamma - 1.0)
        };
        let d_loss_dpt = -alpha_t * d_mod * clamped_ln(p_t, params.epsilon);
        return Ok(if y { d_loss_dpt } else { -d_loss_dpt });
    }
    let ln_pt = p_t.ln();
    // d/dp_t [-alpha_t (1-p_t)^g ln p_t]
    //   = alpha_t * g * (1-p_t)^(g-1) * ln p_t - alpha_t * (1-p_t)^g / p_t
    let first = if params.gamma == 0.0 {
        0.0
    } else {
        alpha_t * params.gamma * (1.0 - p_t).powf(params.gamma - 1.0) * ln_pt
    };
    let second = alpha_t * (1.0 - p_t).powf(params.gamma) / p_t;
    let d_loss_dpt = first - second;
    Ok(if y { d_loss_dpt } else { -d_loss_dpt })
}

fn qfl_modulator(diff: f64, beta: f64) -> f64 {
    // |y - sigma|^beta, with the beta -> 0+ limit convention 0^0 = 0 so the
    // loss vanishes exactly at sigma = y for every admissible beta.
    if diff == 0.0 {
        0.0
    } else {
        diff.abs().powf(beta)
    }
}

/// Quality focal loss against a soft target `y` in `[0, 1]`:
/// `-|y - sigma|^beta * (y ln sigma + (1 - y) ln(1 - sigma))`.
pub fn quality_focal_loss(sigma: f64, y: f64, beta: f64, epsilon: f64) -> Result<f64> {
    check_unit_interval("sigma", sigma)?;
    check_unit_interval("y", y)?;
    check_epsilon(epsilon)?;
    if !beta.is_finite() || beta < 0.0 {
        return Err(KernelError::Parameter(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    let modulator = qfl_modulator(y - sigma, beta);
    let bce = y * clamped_ln(sigma, epsilon) + (1.0 - y) * clamped_ln(1.0 - sigma, epsilon);
    Ok(-modulator * bce)
}

/// Derivative of [`quality_focal_loss`] with respect to `sigma`. The modulus
/// term makes the loss non-smooth at `sigma = y`; there the one-sided limits
/// are averaged (which is 0 for `beta > 1` and conventionally 0 as shipped).
pub fn quality_focal_loss_grad(sigma: f64, y: f64, beta: f64, epsilon: f64) -> Result<f64> {
    check_unit_interval("sigma", sigma)?;
    check_unit_interval("y", y)?;
    check_epsilon(epsilon)?;
    if !beta.is_finite() || beta < 0.0 {
        return Err(KernelError::Parameter(format!(
            "beta must be non-negative, got {beta}"
        )));
    }
    let diff = sigma - y;
    if diff == 0.0 {
        return Ok(0.0);
    }
    let inside = sigma >= epsilon && sigma <= 1.0 - epsilon;
    let bce = y * clamped_ln(sigma, epsilon) + (1.0 - y) * clamped_ln(1.0 - sigma, epsilon);
    let d_bce = if inside {
        y / sigma - (1.0 - y) / (1.0 - sigma)
    } else {
        0.0
    };
    let modulator = diff.abs().powf(beta);
    let d_modulator = if beta == 0.0 {
        0.0
    } else {
        beta * diff.abs().powf(beta - 1.0) * diff.signum()
    };
    Ok(-(d_modulator * bce + modulator * d_bce))
}
