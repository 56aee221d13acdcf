//! Bartlett periodogram on the frequency lattice `2π(p₁/l₁, p₂/l₂)`,
//! smoothing, and the R and Θ spectra.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::curve::SummaryCurve;
use crate::error::{Error, Result};
use crate::geometry::RectWindow;
use crate::pattern::PointPattern;

pub const DEFAULT_PMAX: usize = 16;

/// Periodogram values on `p₁ ∈ 0..=P`, `p₂ ∈ −P..P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramGrid {
    pub pmax: usize,
    /// Window side lengths in the (possibly standardized) coordinates.
    pub lengths: [f64; 2],
    pub n: usize,
    pub intensity: f64,
    pub standardized: bool,
    /// Row-major by `p₁`, then `p₂ + P`. `NaN` at `ω = 0` once smoothed.
    pub values: Vec<f64>,
    pub smoothing: Option<Smoothing>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Smoothing {
    /// 3×3 weights 4 (centre), 2 (edges), 1 (corners), applied `repeats` times.
    MovingAverage { repeats: usize },
    /// Gaussian of standard deviation `sigma` lattice units, truncated at 4σ.
    Gaussian { sigma: f64 },
}

impl PeriodogramGrid {
    pub fn width(&self) -> usize {
        2 * self.pmax
    }

    fn idx(&self, p1: usize, p2: i64) -> usize {
        p1 * self.width() + (p2 + self.pmax as i64) as usize
    }

    /// Value at any lattice index, using `F(−ω) = F(ω)`; `None` outside the
    /// stored range.
    pub fn get(&self, p1: i64, p2: i64) -> Option<f64> {
        let (q1, q2) = if p1 < 0 { (-p1, -p2) } else { (p1, p2) };
        let pm = self.pmax as i64;
        if q1 > pm || q2 < -pm || q2 >= pm {
            return None;
        }
        Some(self.values[self.idx(q1 as usize, q2)])
    }

    pub fn frequency(&self, p1: i64, p2: i64) -> [f64; 2] {
        [
            2.0 * PI * p1 as f64 / self.lengths[0],
            2.0 * PI * p2 as f64 / self.lengths[1],
        ]
    }

    /// Lattice indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let pm = self.pmax as i64;
        (0..=pm).flat_map(move |p1| (-pm..pm).map(move |p2| (p1, p2)))
    }

    /// Make the `p₁ = 0` row exactly symmetric.
    fn mirror_axis_row(&mut self) {
        for p2 in 1..self.pmax as i64 {
            let v = self.values[self.idx(0, p2)];
            let j = self.idx(0, -p2);
            self.values[j] = v;
        }
    }
}

fn prepare(p: &PointPattern, standardize: bool) -> Result<(Vec<[f64; 2]>, [f64; 2])> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.dim(),
        });
    }
    if p.window_is_bounding_box() {
        return Err(Error::InvalidPattern(
            "the periodogram needs a rectangular observation window".into(),
        ));
    }
    let w = p.window();
    let n = p.len() as f64;
    let mut l = [w.side(0), w.side(1)];
    let mut pts: Vec<[f64; 2]> = p
        .points()
        .map(|x| [x[0] - w.lo()[0], x[1] - w.lo()[1]])
        .collect();
    if standardize {
        if p.is_empty() {
            return Err(Error::InsufficientPoints { needed: 1, got: 0 });
        }
        for x in &mut pts {
            x[0] *= n / l[0];
            x[1] *= n / l[1];
        }
        l = [n, n];
    }
    Ok((pts, l))
}

fn empty_grid(p: &PointPattern, pmax: usize, l: [f64; 2], standardize: bool) -> PeriodogramGrid {
    PeriodogramGrid {
        pmax,
        lengths: l,
        n: p.len(),
        intensity: p.len() as f64 / (l[0] * l[1]),
        standardized: standardize,
        values: vec![0.0; (pmax + 1) * 2 * pmax],
        smoothing: None,
    }
}

/// `F̂(ω) = A(ω)² + B(ω)²` with `A + iB = |W|^{−1/2} Σ e^{−iωᵀx}`, with
/// coordinates measured from the window corner.
pub fn periodogram(p: &PointPattern, pmax: usize, standardize: bool) -> Result<PeriodogramGrid> {
    if pmax == 0 {
        return Err(Error::param("pmax", "must be at least 1"));
    }
    let (pts, l) = prepare(p, standardize)?;
    let mut grid = empty_grid(p, pmax, l, standardize);
    let area = l[0] * l[1];
    let pm = pmax as i64;
    let width = grid.width();
    // Unit phasors e^{−i 2π x_j / l_j}, powered by repeated multiplication.
    let base: Vec<([f64; 2], [f64; 2])> = pts
        .iter()
        .map(|x| {
            let a = -2.0 * PI * x[0] / l[0];
            let b = -2.0 * PI * x[1] / l[1];
            ([a.cos(), a.sin()], [b.cos(), b.sin()])
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..=pm)
        .into_par_iter()
        .map(|p1| {
            let mut re = vec![0.0; width];
            let mut im = vec![0.0; width];
            for (e1, e2) in &base {
                let mut c = [1.0, 0.0];
                for _ in 0..p1 {
                    c = cmul(c, *e1);
                }
                // Start at p₂ = −P.
                let inv = [e2[0], -e2[1]];
                let mut start = [1.0, 0.0];
                for _ in 0..pm {
                    start = cmul(start, inv);
                }
                let mut z = cmul(c, start);
                for k in 0..width {
                    re[k] += z[0];
                    im[k] += z[1];
                    z = cmul(z, *e2);
                }
            }
            re.iter()
                .zip(&im)
                .map(|(a, b)| (a * a + b * b) / area)
                .collect()
        })
        .collect();
    for (p1, row) in rows.into_iter().enumerate() {
        grid.values[p1 * width..(p1 + 1) * width].copy_from_slice(&row);
    }
    let n = p.len() as f64;
    let zero = grid.idx(0, 0);
    grid.values[zero] = n * n / area;
    grid.mirror_axis_row();
    Ok(grid)
}

#[inline]
fn cmul(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

/// Periodogram by explicit trigonometric sums at every lattice frequency.
pub fn periodogram_direct(
    p: &PointPattern,
    pmax: usize,
    standardize: bool,
) -> Result<PeriodogramGrid> {
    if pmax == 0 {
        return Err(Error::param("pmax", "must be at least 1"));
    }
    let (pts, l) = prepare(p, standardize)?;
    let mut grid = empty_grid(p, pmax, l, standardize);
    let area = l[0] * l[1];
    let idx: Vec<(i64, i64)> = grid.indices().collect();
    let values: Vec<f64> = idx
        .par_iter()
        .map(|&(p1, p2)| {
            let w = [2.0 * PI * p1 as f64 / l[0], 2.0 * PI * p2 as f64 / l[1]];
            let (mut a, mut b) = (0.0, 0.0);
            for x in &pts {
                let t = w[0] * x[0] + w[1] * x[1];
                a += t.cos();
                b -= t.sin();
            }
            (a * a + b * b) / area
        })
        .collect();
    grid.values = values;
    grid.mirror_axis_row();
    Ok(grid)
}

/// Expected periodogram bias `λ²|W| Π sin²(½ l_j ω_j)/(½ l_j ω_j)²` of a
/// Poisson process, with each factor equal to 1 at `ω_j = 0`.
pub fn bias_term(lambda: f64, window: &RectWindow, omega: &[f64]) -> f64 {
    let mut v = lambda * lambda * window.volume();
    for (j, w) in omega.iter().enumerate() {
        let t = 0.5 * window.side(j) * w;
        if t != 0.0 {
            v *= (t.sin() / t).powi(2);
        }
    }
    v
}

fn ma_weight(d1: i64, d2: i64) -> f64 {
    match (d1.abs(), d2.abs()) {
        (0, 0) => 4.0,
        (1, 0) | (0, 1) => 2.0,
        _ => 1.0,
    }
}

/// Smooth the grid excluding `ω = 0` from input and output; weights missing
/// at the lattice border are dropped and the rest renormalized.
pub fn smooth(grid: &PeriodogramGrid, method: Smoothing) -> Result<PeriodogramGrid> {
    let (offsets, repeats): (Vec<(i64, i64, f64)>, usize) = match method {
        Smoothing::MovingAverage { repeats } => {
            if repeats == 0 {
                return Err(Error::param("repeats", "must be at least 1"));
            }
            let mut o = Vec::new();
            for d1 in -1..=1 {
                for d2 in -1..=1 {
                    o.push((d1, d2, ma_weight(d1, d2)));
                }
            }
            (o, repeats)
        }
        Smoothing::Gaussian { sigma } => {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::param("sigma", "must be positive"));
            }
            let reach = (4.0 * sigma).floor() as i64;
            let mut o = Vec::new();
            for d1 in -reach..=reach {
                for d2 in -reach..=reach {
                    let r2 = (d1 * d1 + d2 * d2) as f64;
                    if r2 <= 16.0 * sigma * sigma {
                        o.push((d1, d2, (-0.5 * r2 / (sigma * sigma)).exp()));
                    }
                }
            }
            (o, 1)
        }
    };
    let mut out = grid.clone();
    let zero = out.idx(0, 0);
    out.values[zero] = f64::NAN;
    let idx: Vec<(i64, i64)> = grid.indices().collect();
    for _ in 0..repeats {
        let cur = out.clone();
        let vals: Vec<f64> = idx
            .par_iter()
            .map(|&(p1, p2)| {
                if p1 == 0 && p2 == 0 {
                    return f64::NAN;
                }
                let (mut s, mut wsum) = (0.0, 0.0);
                for &(d1, d2, w) in &offsets {
                    let (q1, q2) = (p1 + d1, p2 + d2);
                    if q1 == 0 && q2 == 0 {
                        continue;
                    }
                    if let Some(v) = cur.get(q1, q2) {
                        s += w * v;
                        wsum += w;
                    }
                }
                s / wsum
            })
            .collect();
        out.values = vals;
        out.mirror_axis_row();
    }
    out.smoothing = Some(method);
    Ok(out)
}

/// Lattice points of the half-plane `p₁ > 0` or `p₁ = 0, p₂ > 0` with
/// `0 < ||p|| ≤ P`, as `(p₁, p₂, value)`.
fn half_plane(grid: &PeriodogramGrid) -> Vec<(i64, i64, f64)> {
    let pm = grid.pmax as f64;
    grid.indices()
        .filter(|&(p1, p2)| p1 > 0 || p2 > 0)
        .filter(|&(p1, p2)| ((p1 * p1 + p2 * p2) as f64).sqrt() <= pm)
        .map(|(p1, p2)| (p1, p2, grid.get(p1, p2).unwrap()))
        .collect()
}

fn grid_params(grid: &PeriodogramGrid, curve: SummaryCurve) -> SummaryCurve {
    curve
        .with_param("pmax", grid.pmax)
        .with_param("intensity", grid.intensity)
        .with_param("standardized", grid.standardized)
        .with_param(
            "smoothing",
            serde_json::to_value(grid.smoothing).unwrap_or(serde_json::Value::Null),
        )
}

/// Annular averages over `r − 1 < ||p|| ≤ r`, `r = 1..P`.
pub fn r_spectrum(grid: &PeriodogramGrid) -> SummaryCurve {
    let rs: Vec<f64> = (1..=grid.pmax).map(|r| r as f64).collect();
    let mut curve = grid_params(grid, SummaryCurve::new("r_spectrum", rs));
    let mut sums = vec![0.0; grid.pmax];
    for (p1, p2, v) in half_plane(grid) {
        let r = ((p1 * p1 + p2 * p2) as f64).sqrt();
        let k = (r.ceil() as usize).clamp(1, grid.pmax) - 1;
        sums[k] += v;
        curve.counts[k] += 1;
    }
    for k in 0..grid.pmax {
        if curve.counts[k] > 0 {
            curve.values[k] = Some(sums[k] / curve.counts[k] as f64);
        }
    }
    curve
}

/// Angular averages over `θ − 5° < θ' ≤ θ + 5°` for `θ = 0°, 10°, …, 170°`,
/// with `θ' = atan(p₂/p₁)` taken in `[0°, 180°)`. Grid in radians.
pub fn theta_spectrum(grid: &PeriodogramGrid) -> SummaryCurve {
    let thetas: Vec<f64> = (0..18).map(|k| (10 * k) as f64 * PI / 180.0).collect();
    let mut curve = grid_params(grid, SummaryCurve::new("theta_spectrum", thetas));
    let mut sums = [0.0; 18];
    for (p1, p2, v) in half_plane(grid) {
        let deg = (p2 as f64).atan2(p1 as f64).to_degrees().rem_euclid(180.0);
        // Bin k covers (10k − 5, 10k + 5].
        let k = ((deg + 5.0) / 10.0).ceil() as i64 - 1;
        let k = k.rem_euclid(18) as usize;
        sums[k] += v;
        curve.counts[k] += 1;
    }
    for k in 0..18 {
        if curve.counts[k] > 0 {
            curve.values[k] = Some(sums[k] / curve.counts[k] as f64);
        }
    }
    curve
}

/// Quantiles of `χ²_{2m}/(2m)` at `(1 − level)/2` and `(1 + level)/2`.
pub fn chi2_envelope(m: usize, level: f64) -> Result<(f64, f64)> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", "must lie in (0, 1)"));
    }
    let dof = 2.0 * m as f64;
    let chi = ChiSquared::new(dof).map_err(|e| Error::Numerical(e.to_string()))?;
    let lo = chi.inverse_cdf(0.5 * (1.0 - level)) / dof;
    let hi = chi.inverse_cdf(0.5 * (1.0 + level)) / dof;
    Ok((lo, hi))
}
