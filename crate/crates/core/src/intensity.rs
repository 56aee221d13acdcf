//! First-order intensity models used to reweight pair sums.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RectWindow;
use crate::pattern::PointPattern;

/// Intensity sampled on a regular grid of nodes spanning `window`
/// (corners included), interpolated multilinearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityGrid {
    pub window: RectWindow,
    /// Nodes per axis, each at least 2.
    pub shape: Vec<usize>,
    /// Values in x-fastest order.
    pub values: Vec<f64>,
}

impl IntensityGrid {
    pub fn new(window: RectWindow, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.len() != window.dim() {
            return Err(Error::DimensionMismatch {
                expected: window.dim(),
                got: shape.len(),
            });
        }
        if shape.iter().any(|&m| m < 2) {
            return Err(Error::param("shape", "need at least two nodes per axis"));
        }
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::param("values", "length does not match the grid shape"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "must be finite"));
        }
        Ok(IntensityGrid {
            window,
            shape,
            values,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let dim = self.shape.len();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for j in 0..dim {
            let m = self.shape[j];
            let t = (x[j] - self.window.lo()[j]) / self.window.side(j) * (m - 1) as f64;
            let t = t.clamp(0.0, (m - 1) as f64);
            let k = (t.floor() as usize).min(m - 2);
            base[j] = k;
            frac[j] = t - k as f64;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut idx = 0;
            let mut stride = 1;
            for j in 0..dim {
                let up = corner >> j & 1;
                w *= if up == 1 { frac[j] } else { 1.0 - frac[j] };
                idx += (base[j] + up) * stride;
                stride *= self.shape[j];
            }
            if w != 0.0 {
                total += w * self.values[idx];
            }
        }
        total
    }
}

pub type IntensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// How pair sums are normalized by the intensity.
#[derive(Clone, Default)]
pub enum IntensityModel {
    /// `λ̂² = n(n−1)/|W|²`.
    #[default]
    Stationary,
    /// A known constant `λ`.
    Constant(f64),
    Grid(IntensityGrid),
    Function(IntensityFn),
}

impl fmt::Debug for IntensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntensityModel::Stationary => write!(f, "Stationary"),
            IntensityModel::Constant(l) => write!(f, "Constant({l})"),
            IntensityModel::Grid(g) => write!(f, "Grid({:?})", g.shape),
            IntensityModel::Function(_) => write!(f, "Function"),
        }
    }
}

/// Resolved normalization: either one global `λ²` dividing the whole sum,
/// or per-point reciprocal intensities entering every pair term.
#[derive(Debug, Clone)]
pub enum PairNormalization {
    Global { lambda_sq: f64 },
    PerPoint { inverse: Vec<f64> },
}

impl IntensityModel {
    pub fn name(&self) -> &'static str {
        match self {
            IntensityModel::Stationary => "stationary",
            IntensityModel::Constant(_) => "constant",
            IntensityModel::Grid(_) => "grid",
            IntensityModel::Function(_) => "function",
        }
    }

    pub fn resolve(&self, p: &PointPattern) -> Result<PairNormalization> {
        match self {
            IntensityModel::Stationary => {
                let n = p.len() as f64;
                let v = p.window().volume();
                Ok(PairNormalization::Global {
                    lambda_sq: n * (n - 1.0) / (v * v),
                })
            }
            IntensityModel::Constant(l) => {
                if !(*l > 0.0) {
                    return Err(Error::param("intensity", "must be positive"));
                }
                Ok(PairNormalization::Global { lambda_sq: l * l })
            }
            IntensityModel::Grid(g) => {
                if g.window.dim() != p.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: p.dim(),
                        got: g.window.dim(),
                    });
                }
                Self::per_point(p, |x| g.eval(x))
            }
            IntensityModel::Function(f) => Self::per_point(p, |x| f(x)),
        }
    }

    fn per_point(p: &PointPattern, f: impl Fn(&[f64]) -> f64) -> Result<PairNormalization> {
        let mut inverse = Vec::with_capacity(p.len());
        for (i, x) in p.points().enumerate() {
            let l = f(x);
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::param(
                    "intensity",
                    format!("must be positive at every data point; got {l} at point {i}"),
                ));
            }
            inverse.push(1.0 / l);
        }
        Ok(PairNormalization::PerPoint { inverse })
    }
}
