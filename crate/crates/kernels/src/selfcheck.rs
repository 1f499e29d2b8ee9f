//! Programmatic invariant suite behind the `kernels selfcheck` command.
//!
//! Each property runs a configurable number of randomized cases from a fixed
//! seed and reports its worst observed error. The properties are the same
//! ones the unit and acceptance tests pin down; this module packages them as
//! data so a CLI can print one line per property and fail on any violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attention::{triplet_attention, TripletParams};
use crate::conv::{conv2d_unit_stride, ConvKernel, Padding};
use crate::gradcheck::finite_diff_scalar;
use crate::loss::{
    cross_entropy, cross_entropy_grad, focal_loss, focal_loss_grad, quality_focal_loss,
    quality_focal_loss_grad, LossParams, DEFAULT_EPSILON,
};
use crate::spd::{inverse_spd, spd_transform};
use crate::sppf::SppfcspcParams;
use crate::tensor::{zpool, Axis, Rotation, Tensor};

/// Outcome of one property run.
#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Worst observed deviation, in the property's own error measure
    /// (absolute for exact identities, relative for gradient checks).
    pub max_error: f64,
}

fn random_tensor<R: Rng>(rng: &mut R, c: usize, h: usize, w: usize) -> Tensor {
    Tensor::from_fn(c, h, w, |_, _, _| rng.gen_range(-1.0..1.0)).expect("random tensor")
}

fn report(name: &'static str, cases: usize, max_error: f64, tolerance: f64) -> PropertyReport {
    PropertyReport {
        name,
        passed: max_error <= tolerance,
        cases,
        max_error,
    }
}

fn spd_roundtrip(cases: usize, rng: &mut ChaCha8Rng) -> PropertyReport {
    let mut max_error: f64 = 0.0;
    for _ in 0..cases {
        let scale = *[1usize, 2, 4].get(rng.gen_range(0..3)).unwrap();
        let c = rng.gen_range(1..=4);
        let side = scale * rng.gen_range(1..=4);
        let t = random_tensor(rng, c, side, side);
        let back = inverse_spd(&spd_transform(&t, scale).unwrap(), scale).unwrap();
        let err = t
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_error = max_error.max(err);
    }
    report("spd_roundtrip_exact", cases, max_error, 0.0)
}

fn spd_worked_example() -> PropertyReport {
    let t = Tensor::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let out = spd_transform(&t, 2).unwrap();
    let expected = [1.0, 3.0, 2.0, 4.0];
    let err = out
        .data()
        .iter()
        .zip(expected.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report("spd_worked_example", 1, err, 0.0)
}

fn rotate_roundtrip(cases: usize, rng: &mut ChaCha8Rng) -> PropertyReport {
    let planes = [
        (Axis::Channels, Axis::Height),
        (Axis::Channels, Axis::Width),
        (Axis::Height, Axis::Width),
    ];
    let mut max_error: f64 = 0.0;
    for i in 0..cases {
        let (c, h, w) = (rng.gen_range(1..=4), rng.gen_range(1..=6), rng.gen_range(1..=6));
        let t = random_tensor(rng, c, h, w);
        let (a, b) = planes[i % planes.len()];
        let dir = if i % 2 == 0 {
            Rotation::Clockwise
        } else {
            Rotation::CounterClockwise
        };
        let back = t
            .rotate_dims(a, b, dir)
            .unwrap()
            .rotate_dims(a, b, dir.inverse())
            .unwrap();
        let err = t
            .data()
            .iter()
            .zip(back.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        max_error = max_error.max(err);
    }
    report("rotate_roundtrip_exact", cases, max_error, 0.0)
}

fn zpool_max_bounds_mean(cases: usize, rng: &mut ChaCha8Rng) -> PropertyReport {
    let mut max_error: f64 = 0.0;
    for i in 0..cases {
        let (c, h, w) = (rng.gen_range(1..=4), rng.gen_range(1..=5), rng.gen_range(1..=5));
        let t = random_tensor(rng, c, h, w);
        let axis = [Axis::Channels, Axis::Height, Axis::Width][i % 3];
        let z = zpool(&t, axis).unwrap();
        // The max slice must dominate the mean slice pointwise.
        let (kept_a, kept_b) = match axis {
            Axis::Channels => (z.height(), z.width()),
            Axis::Height => (z.channels(), z.width()),
            Axis::Width => (z.channels(), z.height()),
        };
        for i in 0..kept_a {
            for j in 0..kept_b {
                let (maxv, meanv) = match axis {
                    Axis::Channels => (z.get(0, i, j), z.get(1, i, j)),
                    Axis::Height => (z.get(i, 0, j), z.get(i, 1, j)),
                    Axis::Width => (z.get(i, j, 0), z.get(i, j, 1)),
                };
                max_error = max_error.max((meanv - maxv).max(0.0));
            }
        }
    }
    report("zpool_max_dominates_mean", cases, max_error, 0.0)
}

fn triplet_bypass_identity(cases: usize, rng: &mut ChaCha8Rng) -> PropertyReport {
    let params = TripletParams::bypass(7).unwrap();
    let mut max_error: f64 = 0.0;
    for _ in 0..cases {
        let (c, h, w) = (rng.gen_range(1..=4), rng.gen_range(2..=8), rng.gen_range(2..=8));
        let t = random_tensor(rng, c, h, w);
        let out = triplet_attention(&t, &params).unwrap();
        let err = t
            .data()
            .iter()
            .zip(out.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_error = max_error.max(err);
    }
    report("triplet_bypass_identity", cases, max_error, 0.0)
}

fn triplet_magnitude_bound(cases: usize, rng: &mut ChaCha8Rng) -> PropertyReport {
    let mut max_error: f64 = 0.0;
    for _ in 0..cases {
        let mut local = ChaCha8Rng::seed_from_u64(rng.gen());
        let params = TripletParams::seeded(3, &mut local).unwrap();
        let (c, h, w) = (rng.gen_range(1..=3), rng.gen_range(2..=6), rng.gen_range(2..=6));
        let t = random_tensor(rng, c, h, w);
        let out = triplet_attention(&t, &params).unwrap();
        for (o, i) in out.data().iter().zip(t.data()) {
            max_error = max_error.max((o.abs() - i.abs()).max(0.0));
        }
    }
    report("triplet_magnitude_bound", cases, max_error, 1e-12)
}

fn sppfcspc_shape(cases: usize, rng: &mut ChaCha8Rng) -> PropertyReport {
    let mut max_error: f64 = 0.0;
    for _ in 0..cases.min(50) {
        let in_c = rng.gen_range(2..=6);
        let out_c = rng.gen_range(1..=6);
        let params = SppfcspcParams::seeded(in_c, (in_c / 2).max(1), out_c, 5, rng).unwrap();
        let h = rng.gen_range(4..=8);
        let w = rng.gen_range(4..=8);
        let t = random_tensor(rng, in_c, h, w);
        let out = crate::sppf::sppfcspc_forward(&t, &params).unwrap();
        if out.shape() != (out_c, h, w) {
            max_error = 1.0;
        }
    }
    report("sppfcspc_shape_preserved", cases.min(50), max_error, 0.0)
}

fn conv_same_shape(cases: usize, rng: &mut ChaCha8Rng) -> PropertyReport {
    let mut max_error: f64 = 0.0;
    for _ in 0..cases.min(200) {
        let c = rng.gen_range(1..=3);
        let o = rng.gen_range(1..=3);
        let k = [1usize, 3, 5, 7][rng.gen_range(0..4)];
        let kernel = ConvKernel::random(o, c, k, rng);
        let h = rng.gen_range(1..=8);
        let w = rng.gen_range(1..=8);
        let t = random_tensor(rng, c, h, w);
        let out = conv2d_unit_stride(&t, &kernel, Padding::Same).unwrap();
        if out.shape() != (o, h, w) {
            max_error = 1.0;
        }
    }
    report("conv_same_padding_preserves_shape", cases.min(200), max_error, 0.0)
}

fn loss_reductions(cases: usize, rng: &mut ChaCha8Rng) -> PropertyReport {
    let mut max_error: f64 = 0.0;
    for _ in 0..cases {
        let p: f64 = rng.gen_range(0.01..0.99);
        let beta = rng.gen_range(0.0..4.0);
        let fl_params = LossParams::new(1.0, 0.0, beta, DEFAULT_EPSILON).unwrap();
        let ce = cross_entropy(p, true, DEFAULT_EPSILON).unwrap();
        let fl = focal_loss(p, true, &fl_params).unwrap();
        max_error = max_error.max((ce - fl).abs());

        let qfl_zero = quality_focal_loss(p, p, beta, DEFAULT_EPSILON).unwrap();
        max_error = max_error.max(qfl_zero.abs());

        let binary_params = LossParams::new(1.0, beta, beta, DEFAULT_EPSILON).unwrap();
        let qfl = quality_focal_loss(p, 1.0, beta, DEFAULT_EPSILON).unwrap();
        let fl = focal_loss(p, true, &binary_params).unwrap();
        max_error = max_error.max((qfl - fl).abs());
    }
    report("loss_reduction_identities", cases, max_error, 1e-12)
}

fn loss_gradients(cases: usize, rng: &mut ChaCha8Rng) -> PropertyReport {
    let step = 1e-6;
    let mut max_rel: f64 = 0.0;
    let mut rel = |analytic: f64, numeric: f64| {
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        max_rel = max_rel.max((analytic - numeric).abs() / denom);
    };
    for _ in 0..cases {
        let p: f64 = rng.gen_range(0.05..0.95);
        let y_bool = rng.gen_bool(0.5);
        let params = LossParams::new(
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.0..4.0),
            rng.gen_range(0.5..4.0),
            DEFAULT_EPSILON,
        )
        .unwrap();

        let ce_num = finite_diff_scalar(
            |x| cross_entropy(x, y_bool, DEFAULT_EPSILON).unwrap(),
            p,
            step,
        );
        rel(cross_entropy_grad(p, y_bool, DEFAULT_EPSILON).unwrap(), ce_num);

        let fl_num = finite_diff_scalar(|x| focal_loss(x, y_bool, &params).unwrap(), p, step);
        rel(focal_loss_grad(p, y_bool, &params).unwrap(), fl_num);

        // Keep sigma away from the |y - sigma|^beta kink where finite
        // differences are invalid.
        let y_soft: f64 = rng.gen_range(0.05..0.95);
        if (y_soft - p).abs() > 0.02 {
            let qfl_num = finite_diff_scalar(
                |x| quality_focal_loss(x, y_soft, params.beta, DEFAULT_EPSILON).unwrap(),
                p,
                step,
            );
            rel(
                quality_focal_loss_grad(p, y_soft, params.beta, DEFAULT_EPSILON).unwrap(),
                qfl_num,
            );
        }
    }
    report("loss_gradients_match_finite_differences", cases, max_rel, 1e-4)
}

/// Runs every property with `cases` randomized instances from `seed`.
pub fn run_selfcheck(cases: usize, seed: u64) -> Vec<PropertyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        spd_worked_example(),
        spd_roundtrip(cases, &mut rng),
        rotate_roundtrip(cases, &mut rng),
        zpool_max_bounds_mean(cases, &mut rng),
        triplet_bypass_identity(cases.min(200), &mut rng),
        triplet_magnitude_bound(cases.min(200), &mut rng),
        conv_same_shape(cases, &mut rng),
        sppfcspc_shape(cases, &mut rng),
        loss_reductions(cases, &mut rng),
        loss_gradients(cases, &mut rng),
    ]
}
