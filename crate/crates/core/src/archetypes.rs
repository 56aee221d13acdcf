//! The two benchmark patterns: a geometrically anisotropic regular pattern
//! and a clustered pattern with parallel stripes, both on `[-1, 1]²`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::geometry::RectWindow;
use crate::pattern::PointPattern;
use crate::rng::{stream, Rng};
use crate::simulate::{
    apply_transform, line_stripes, strauss, GeometricTransform, StripeLine,
    DEFAULT_MCMC_STEPS,
};

pub const STRAUSS_BETA: f64 = 100.0;
pub const STRAUSS_GAMMA: f64 = 0.1;
pub const STRAUSS_R: f64 = 0.1;
pub const COMPRESSION: f64 = 0.6;
/// Clockwise rotation applied after scaling.
pub const ROTATION: f64 = PI / 6.0;

/// Direction of compression of the regular pattern, `π/2 − π/6`.
pub const REGULAR_COMPRESSION_AXIS: f64 = PI / 2.0 - PI / 6.0;
/// Direction of stretching of the regular pattern, `π − π/6`.
pub const REGULAR_STRETCH_AXIS: f64 = PI - PI / 6.0;

pub const CLUSTER_BACKGROUND: f64 = 200.0;
pub const STRIPE_AMPLITUDE: f64 = 100.0;
pub const STRIPE_SIGMA: f64 = 0.03;
/// Angle between the stripes and the y-axis.
pub const STRIPE_TILT: f64 = PI / 5.0;
/// Direction of the stripes, measured from the x-axis.
pub const STRIPE_DIRECTION: f64 = PI / 2.0 + STRIPE_TILT;
pub const STRIPE_OFFSETS: [f64; 3] = [-0.6, 0.0, 0.6];

pub fn unit_square() -> RectWindow {
    RectWindow::cube(2, -1.0, 1.0).expect("valid window")
}

pub fn regular_transform() -> GeometricTransform {
    GeometricTransform::planar(-ROTATION, [1.0 / COMPRESSION, COMPRESSION])
        .expect("positive scaling")
}

/// Strauss pattern simulated on a box covering `T⁻¹[-1,1]²` (plus the
/// interaction range), mapped by `T` and cropped to `[-1,1]²`.
pub fn regular(seed: u64) -> Result<PointPattern> {
    regular_with(&mut stream(seed, 0), DEFAULT_MCMC_STEPS)
}

pub fn regular_with(rng: &mut Rng, steps: usize) -> Result<PointPattern> {
    let t = regular_transform();
    let target = unit_square();
    let base = preimage_box(&target, &t)?;
    let (p, _) = strauss(STRAUSS_BETA, STRAUSS_GAMMA, STRAUSS_R, steps, &base, rng);
    apply_transform(&p, &t)?.restrict(&target)
}

/// Axis-aligned box containing `T⁻¹ W`, enlarged by the Strauss range.
fn preimage_box(w: &RectWindow, t: &GeometricTransform) -> Result<RectWindow> {
    let m = t.inverse_matrix();
    let mut lo = vec![f64::INFINITY; 2];
    let mut hi = vec![f64::NEG_INFINITY; 2];
    for c in 0..4 {
        let x = [
            if c & 1 == 1 { w.hi()[0] } else { w.lo()[0] },
            if c & 2 == 2 { w.hi()[1] } else { w.lo()[1] },
            0.0,
        ];
        let y = crate::geometry::apply(&m, &x);
        for j in 0..2 {
            lo[j] = lo[j].min(y[j] - STRAUSS_R);
            hi[j] = hi[j].max(y[j] + STRAUSS_R);
        }
    }
    RectWindow::new(lo, hi)
}

pub fn stripe_lines() -> Vec<StripeLine> {
    let normal = [STRIPE_TILT.cos(), STRIPE_TILT.sin()];
    STRIPE_OFFSETS
        .iter()
        .map(|&o| StripeLine::planar([o * normal[0], o * normal[1]], STRIPE_DIRECTION))
        .collect()
}

/// Poisson background with three parallel Gaussian stripes.
pub fn clustered(seed: u64) -> Result<PointPattern> {
    clustered_with(&mut stream(seed, 0))
}

pub fn clustered_with(rng: &mut Rng) -> Result<PointPattern> {
    line_stripes(
        CLUSTER_BACKGROUND,
        &stripe_lines(),
        STRIPE_AMPLITUDE,
        STRIPE_SIGMA,
        &unit_square(),
        rng,
    )
}
