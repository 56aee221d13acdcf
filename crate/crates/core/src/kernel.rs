use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Smoothing kernels, normalized to unit integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Epanechnikov,
    /// Uniform on the support.
    Box,
    Gaussian,
}

impl Kernel {
    /// Support radius in units of the bandwidth.
    fn support(self) -> f64 {
        match self {
            Kernel::Epanechnikov | Kernel::Box => 1.0,
            Kernel::Gaussian => 10.0,
        }
    }

    /// One-dimensional kernel `k_h(t)`.
    #[inline]
    pub fn eval(self, t: f64, h: f64) -> f64 {
        let u = t / h;
        match self {
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u) / h
                } else {
                    0.0
                }
            }
            Kernel::Box => {
                if u.abs() <= 1.0 {
                    0.5 / h
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => (-0.5 * u * u).exp() / (h * (2.0 * PI).sqrt()),
        }
    }

    /// Kernel wrapped onto a circle of circumference `period`.
    pub fn eval_wrapped(self, t: f64, h: f64, period: f64) -> f64 {
        let reach = self.support() * h;
        let t = crate::geometry::angle_diff(t, 0.0, period);
        if reach < period / 2.0 {
            return self.eval(t, h);
        }
        let m = (reach / period).ceil() as i64 + 1;
        (-m..=m)
            .map(|k| self.eval(t + k as f64 * period, h))
            .sum()
    }

    /// Radially symmetric kernel on `R^dim` evaluated at distance `r`.
    pub fn eval_radial(self, r: f64, h: f64, dim: usize) -> f64 {
        let u = r / h;
        let hd = h.powi(dim as i32);
        match self {
            Kernel::Epanechnikov => {
                if u > 1.0 {
                    return 0.0;
                }
                // Normalizer of (1 - |u|^2) over the unit ball: b_d * 2/(d+2).
                let c = crate::geometry::unit_ball_volume(dim) * 2.0 / (dim as f64 + 2.0);
                (1.0 - u * u) / (c * hd)
            }
            Kernel::Box => {
                if u > 1.0 {
                    0.0
                } else {
                    1.0 / (crate::geometry::unit_ball_volume(dim) * hd)
                }
            }
            Kernel::Gaussian => {
                (-0.5 * u * u).exp() / ((2.0 * PI).powf(dim as f64 / 2.0) * hd)
            }
        }
    }

    pub fn reach(self, h: f64) -> f64 {
        self.support() * h
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Box => "box",
            Kernel::Gaussian => "gaussian",
        }
    }
}
