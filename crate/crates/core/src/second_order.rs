//! Fry sets, directional K-measures, the second-order orientation density
//! and anisotropic pair correlation estimators.
//!
//! All estimators are translation-corrected pair sums
//! `Σ_{x≠y} f(y − x) / |W_x ∩ W_y|` divided by a squared intensity, or, with
//! a non-constant [`IntensityModel`], with every term divided by
//! `λ(x) λ(y)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{SummaryCurve, SummaryCurve2D};
use crate::error::{Error, Result};
use crate::geometry::{
    planar_angle, unit_ball_volume, vector_angle, wrap_angle, CylinderSpec,
    Direction, DirectionalSet, SectorSpec, TestSet, Vec3,
};
use crate::index::GridIndex;
use crate::intensity::{IntensityModel, PairNormalization};
use crate::kernel::Kernel;
use crate::pattern::PointPattern;

/// All ordered difference vectors `x_j − x_i`, `i ≠ j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrySet {
    pub dim: usize,
    pub vectors: Vec<Vec3>,
}

impl FrySet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn fry(p: &PointPattern) -> Result<FrySet> {
    if p.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: p.len(),
        });
    }
    let mut vectors = Vec::with_capacity(p.len() * (p.len() - 1));
    for i in 0..p.len() {
        for j in 0..p.len() {
            if i != j {
                vectors.push(crate::geometry::sub(p.point(j), p.point(i)));
            }
        }
    }
    Ok(FrySet {
        dim: p.dim(),
        vectors,
    })
}

/// Fry vectors of length at most `radius`.
pub fn fry_within(p: &PointPattern, radius: f64) -> Result<FrySet> {
    if p.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: p.len(),
        });
    }
    let index = GridIndex::new(p, radius);
    let vectors = index.pairs_within(radius).into_iter().map(|q| q.d).collect();
    Ok(FrySet {
        dim: p.dim(),
        vectors,
    })
}

/// A pair difference with its translation-correction weight.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WeightedPair {
    pub d: Vec3,
    pub dist: f64,
    pub w: f64,
}

pub(crate) struct PairSums {
    pub pairs: Vec<WeightedPair>,
    /// Divisor applied to every sum (1 for per-point normalization).
    pub lambda_sq: f64,
}

pub(crate) fn weighted_pairs(
    p: &PointPattern,
    reach: f64,
    intensity: &IntensityModel,
) -> Result<PairSums> {
    if p.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: p.len(),
        });
    }
    if !(reach > 0.0) || !reach.is_finite() {
        return Err(Error::param("r", "ranges must be positive and finite"));
    }
    let norm = intensity.resolve(p)?;
    let dim = p.dim();
    let index = GridIndex::new(p, reach);
    let w = p.window();
    let mut pairs = Vec::new();
    for q in index.pairs_within(reach) {
        let overlap = w.translation_overlap(&q.d[..dim]);
        if !(overlap > 0.0) {
            return Err(Error::WindowTooSmall(format!(
                "points {} and {} have disjoint translated windows",
                q.i, q.j
            )));
        }
        let mut weight = 1.0 / overlap;
        if let PairNormalization::PerPoint { inverse } = &norm {
            weight *= inverse[q.i] * inverse[q.j];
        }
        pairs.push(WeightedPair {
            d: q.d,
            dist: q.dist,
            w: weight,
        });
    }
    let lambda_sq = match norm {
        PairNormalization::Global { lambda_sq } => lambda_sq,
        PairNormalization::PerPoint { .. } => 1.0,
    };
    Ok(PairSums { pairs, lambda_sq })
}

fn check_ranges(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("r", "range grid is empty"));
    }
    if grid.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::param("r", "ranges must be positive and finite"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("r", "range grid must be strictly increasing"));
    }
    Ok(())
}

fn check_dim(p: &PointPattern, dim: usize) -> Result<()> {
    if p.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: dim,
        });
    }
    Ok(())
}

/// Sum of pair weights falling in each set, with the number of pairs.
pub fn pair_sums_in_sets<S: TestSet>(
    p: &PointPattern,
    sets: &[S],
    intensity: &IntensityModel,
) -> Result<(Vec<f64>, Vec<usize>, f64)> {
    let reach = sets.iter().map(|s| s.reach()).fold(0.0, f64::max);
    let ps = weighted_pairs(p, reach, intensity)?;
    let out: Vec<(f64, usize)> = sets
        .par_iter()
        .map(|s| {
            let mut sum = 0.0;
            let mut c = 0;
            for q in &ps.pairs {
                if s.contains(&q.d) {
                    sum += q.w;
                    c += 1;
                }
            }
            (sum, c)
        })
        .collect();
    let (sums, counts) = out.into_iter().unzip();
    Ok((sums, counts, ps.lambda_sq))
}

/// The member of the family `B(r)` at range `r`.
pub fn set_at(set: &DirectionalSet, r: f64) -> Result<DirectionalSet> {
    match set {
        DirectionalSet::Sector(s) => Ok(DirectionalSet::Sector(SectorSpec::new(
            s.axis,
            s.half_angle,
            Some(r),
        )?)),
        DirectionalSet::Cylinder(c) => Ok(DirectionalSet::Cylinder(CylinderSpec::new(
            c.axis,
            r,
            c.half_width,
        )?)),
    }
}

/// `K̂(B(r))` on the range grid; `λ²K̂` is kept in the `lambda2_k`
/// parameter.
pub fn k_measure(
    p: &PointPattern,
    set: &DirectionalSet,
    grid: &[f64],
    intensity: &IntensityModel,
) -> Result<SummaryCurve> {
    check_ranges(grid)?;
    check_dim(p, set.dim())?;
    let sets: Vec<DirectionalSet> = grid.iter().map(|&r| set_at(set, r)).collect::<Result<_>>()?;
    let (sums, counts, lambda_sq) = pair_sums_in_sets(p, &sets, intensity)?;
    let name = match set {
        DirectionalSet::Sector(_) => "conical_k",
        DirectionalSet::Cylinder(_) => "cylindrical_k",
    };
    let mut curve = SummaryCurve::new(name, grid.to_vec())
        .with_param("set", serde_json::to_value(set)?)
        .with_param("intensity", intensity.name())
        .with_param("lambda_sq", lambda_sq)
        .with_param("lambda2_k", sums.clone());
    for k in 0..grid.len() {
        curve.values[k] = Some(sums[k] / lambda_sq);
        curve.counts[k] = counts[k];
    }
    Ok(curve)
}

/// Second-order orientation density on `[0, π)` from pairs with
/// `r1 < ||y − x|| < r2`, and its cumulative distribution `F_K`.
pub fn orientation_density_2nd(
    p: &PointPattern,
    r1: f64,
    r2: f64,
    bandwidth: f64,
    kernel: Kernel,
    grid: &[f64],
    intensity: &IntensityModel,
) -> Result<(SummaryCurve, SummaryCurve)> {
    check_dim(p, 2)?;
    if !(r1 >= 0.0 && r2 > r1) {
        return Err(Error::param("r2", "need 0 <= r1 < r2"));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::param("bandwidth", "must be positive"));
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("angles", "grid must be non-empty and increasing"));
    }
    let ps = weighted_pairs(p, r2, intensity)?;
    let terms: Vec<(f64, f64)> = ps
        .pairs
        .iter()
        .filter(|q| q.dist > r1 && q.dist < r2)
        .map(|q| {
            let a = planar_angle(q.d[0], q.d[1]).expect("distinct points");
            (wrap_angle(a, PI), q.w)
        })
        .collect();
    let total: f64 = terms.iter().map(|t| t.1).sum();
    let mut density = SummaryCurve::new("orientation_density_2nd", grid.to_vec())
        .with_param("r1", r1)
        .with_param("r2", r2)
        .with_param("bandwidth", bandwidth)
        .with_param("kernel", kernel.name())
        .with_param("intensity", intensity.name())
        .with_param("pairs", terms.len());
    let mut cumulative = SummaryCurve::new("orientation_cdf_2nd", grid.to_vec())
        .with_param("r1", r1)
        .with_param("r2", r2)
        .with_param("bandwidth", bandwidth);
    if terms.is_empty() {
        density.warnings.push("no pairs in the distance band".into());
        cumulative.warnings.push("no pairs in the distance band".into());
        return Ok((density, cumulative));
    }
    let eval = |a: f64| -> (f64, usize) {
        let mut s = 0.0;
        let mut c = 0;
        for &(alpha, w) in &terms {
            let kv = kernel.eval_wrapped(a - alpha, bandwidth, PI);
            if kv != 0.0 {
                c += 1;
            }
            s += w * kv;
        }
        (s / total, c)
    };
    let vals: Vec<(f64, usize)> = grid.par_iter().map(|&a| eval(a)).collect();
    for (k, (v, c)) in vals.iter().enumerate() {
        density.values[k] = Some(*v);
        density.counts[k] = *c;
    }
    // Trapezoid rule from 0 through the grid nodes.
    let mut acc = 0.0;
    let mut prev = (0.0, eval(0.0).0);
    for (k, &a) in grid.iter().enumerate() {
        let f = vals[k].0;
        acc += 0.5 * (a - prev.0) * (f + prev.1);
        prev = (a, f);
        cumulative.values[k] = Some(acc);
        cumulative.counts[k] = vals[k].1;
    }
    Ok((density, cumulative))
}

/// Rose of directions: a density on `[0, π)` repeated over `[0, 2π)`.
pub fn rose(density: &SummaryCurve) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = density
        .grid
        .iter()
        .zip(&density.values)
        .flat_map(|(&a, v)| {
            let v = v.unwrap_or(f64::NAN);
            [(a, v), (a + PI, v)]
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Options shared by the kernel pair-correlation estimators.
#[derive(Debug, Clone)]
pub struct PcfOptions {
    /// Range bandwidth; `None` selects the rule of thumb.
    pub h_r: Option<f64>,
    pub kernel: Kernel,
    pub intensity: IntensityModel,
}

impl Default for PcfOptions {
    fn default() -> Self {
        PcfOptions {
            h_r: None,
            kernel: Kernel::Epanechnikov,
            intensity: IntensityModel::Stationary,
        }
    }
}

/// `c / λ̂^{1/d}`, with `c = 0.3` for directional estimators and `0.15`
/// for isotropic ones.
pub fn default_range_bandwidth(p: &PointPattern, directional: bool) -> f64 {
    let c = if directional { 0.3 } else { 0.15 };
    c / p.intensity().powf(1.0 / p.dim() as f64)
}

fn resolve_bandwidth(p: &PointPattern, opts: &PcfOptions, directional: bool) -> Result<f64> {
    let h = opts
        .h_r
        .unwrap_or_else(|| default_range_bandwidth(p, directional));
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::param("h_r", "must be positive"));
    }
    Ok(h)
}

/// Evaluate `Σ_pairs w · f(pair, node)` for every node in parallel.
fn node_sums<F>(pairs: &[WeightedPair], nodes: usize, f: F) -> Vec<(f64, usize)>
where
    F: Fn(usize, &WeightedPair, usize) -> f64 + Sync,
{
    (0..nodes)
        .into_par_iter()
        .map(|k| {
            let mut s = 0.0;
            let mut c = 0;
            for (i, q) in pairs.iter().enumerate() {
                let v = f(i, q, k);
                if v != 0.0 {
                    s += q.w * v;
                    c += 1;
                }
            }
            (s, c)
        })
        .collect()
}

fn flag_below_bandwidth(curve: &mut SummaryCurve, h: f64) {
    for (k, r) in curve.grid.iter().enumerate() {
        curve.flagged[k] = *r < h;
    }
    curve.set_param("flag", "boundary-biased: r below the range bandwidth");
}

/// Isotropic pair correlation function.
pub fn pcf_isotropic(p: &PointPattern, grid: &[f64], opts: &PcfOptions) -> Result<SummaryCurve> {
    check_ranges(grid)?;
    let h = resolve_bandwidth(p, opts, false)?;
    let reach = grid[grid.len() - 1] + opts.kernel.reach(h);
    let ps = weighted_pairs(p, reach, &opts.intensity)?;
    let dim = p.dim();
    let sums = node_sums(&ps.pairs, grid.len(), |_, q, k| {
        opts.kernel.eval(q.dist - grid[k], h)
    });
    let mut curve = SummaryCurve::new("pcf", grid.to_vec())
        .with_param("h_r", h)
        .with_param("kernel", opts.kernel.name())
        .with_param("intensity", opts.intensity.name());
    for (k, &r) in grid.iter().enumerate() {
        let surface = dim as f64 * unit_ball_volume(dim) * r.powi(dim as i32 - 1);
        curve.values[k] = Some(sums[k].0 / (surface * ps.lambda_sq));
        curve.counts[k] = sums[k].1;
    }
    flag_below_bandwidth(&mut curve, h);
    Ok(curve)
}

/// Conical pair correlation: pairs whose difference lies within angle `ε`
/// of `u`, kernel-smoothed in range, normalized by the cap size `v(ε, r)`.
pub fn pcf_conical(
    p: &PointPattern,
    sector: &SectorSpec,
    grid: &[f64],
    opts: &PcfOptions,
) -> Result<SummaryCurve> {
    check_ranges(grid)?;
    check_dim(p, sector.axis.dim())?;
    let h = resolve_bandwidth(p, opts, sector.half_angle < PI)?;
    let reach = grid[grid.len() - 1] + opts.kernel.reach(h);
    let ps = weighted_pairs(p, reach, &opts.intensity)?;
    let u = *sector.axis.vector();
    let eps = sector.half_angle;
    let inside: Vec<bool> = ps
        .pairs
        .iter()
        .map(|q| vector_angle(&q.d, &u) < eps)
        .collect();
    let sums = node_sums(&ps.pairs, grid.len(), |i, q, k| {
        if inside[i] {
            opts.kernel.eval(q.dist - grid[k], h)
        } else {
            0.0
        }
    });
    let mut curve = SummaryCurve::new("conical_pcf", grid.to_vec())
        .with_param("direction", sector.axis.as_slice().to_vec())
        .with_param("half_angle", eps)
        .with_param("h_r", h)
        .with_param("kernel", opts.kernel.name())
        .with_param("intensity", opts.intensity.name());
    for (k, &r) in grid.iter().enumerate() {
        let cap = if p.dim() == 2 {
            2.0 * r * eps
        } else {
            2.0 * PI * r * r * (1.0 - eps.cos())
        };
        curve.values[k] = Some(sums[k].0 / (cap * ps.lambda_sq));
        curve.counts[k] = sums[k].1;
    }
    flag_below_bandwidth(&mut curve, h);
    Ok(curve)
}

/// Cylindrical pair correlation: pairs within `h_c` of the axis line,
/// kernel-smoothed in the axial coordinate `|v · u|`.
pub fn pcf_cylindrical(
    p: &PointPattern,
    axis: &Direction,
    half_width: f64,
    grid: &[f64],
    opts: &PcfOptions,
) -> Result<SummaryCurve> {
    check_ranges(grid)?;
    check_dim(p, axis.dim())?;
    if !(half_width > 0.0) {
        return Err(Error::param("half_width", "must be positive"));
    }
    if grid[0] <= half_width {
        return Err(Error::param(
            "r",
            format!("every range must exceed the half-width {half_width}"),
        ));
    }
    let h = resolve_bandwidth(p, opts, true)?;
    let reach = (grid[grid.len() - 1] + opts.kernel.reach(h)).hypot(half_width);
    let ps = weighted_pairs(p, reach, &opts.intensity)?;
    let cyl = CylinderSpec {
        axis: *axis,
        half_height: f64::INFINITY,
        half_width,
    };
    let split: Vec<Option<f64>> = ps
        .pairs
        .iter()
        .map(|q| {
            let (s, perp) = cyl.axial_split(&q.d);
            (perp < half_width).then_some(s.abs())
        })
        .collect();
    let sums = node_sums(&ps.pairs, grid.len(), |i, _, k| {
        match split[i] {
            Some(s) => opts.kernel.eval(s - grid[k], h),
            None => 0.0,
        }
    });
    let dim = p.dim();
    // Both halves of the cylinder contribute to each axial distance.
    let section = 2.0 * unit_ball_volume(dim - 1) * half_width.powi(dim as i32 - 1);
    let overlap_range = std::f64::consts::SQRT_2 * half_width;
    let mut curve = SummaryCurve::new("cylindrical_pcf", grid.to_vec())
        .with_param("direction", axis.as_slice().to_vec())
        .with_param("half_width", half_width)
        .with_param("h_r", h)
        .with_param("kernel", opts.kernel.name())
        .with_param("intensity", opts.intensity.name())
        .with_param(
            "flag",
            "short range: cylinders 45° apart overlap below sqrt(2)·half_width",
        );
    for (k, &r) in grid.iter().enumerate() {
        curve.values[k] = Some(sums[k].0 / (section * ps.lambda_sq));
        curve.counts[k] = sums[k].1;
        curve.flagged[k] = r < overlap_range;
    }
    Ok(curve)
}

/// Kernel estimator `ĝ(u, r) = λ̂⁻² Σ k_h(y − x − r u) / |W_x ∩ W_y|` with a
/// radially symmetric kernel on `R^d`.
pub fn pcf_guan(
    p: &PointPattern,
    u: &Direction,
    grid: &[f64],
    bandwidth: f64,
    kernel: Kernel,
    intensity: &IntensityModel,
) -> Result<SummaryCurve> {
    check_ranges(grid)?;
    check_dim(p, u.dim())?;
    if !(bandwidth > 0.0) {
        return Err(Error::param("bandwidth", "must be positive"));
    }
    let reach = grid[grid.len() - 1] + kernel.reach(bandwidth);
    let ps = weighted_pairs(p, reach, intensity)?;
    let v = *u.vector();
    let dim = p.dim();
    let sums = node_sums(&ps.pairs, grid.len(), |_, q, k| {
        let r = grid[k];
        let e = [q.d[0] - r * v[0], q.d[1] - r * v[1], q.d[2] - r * v[2]];
        let n = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
        kernel.eval_radial(n, bandwidth, dim)
    });
    let mut curve = SummaryCurve::new("guan_pcf", grid.to_vec())
        .with_param("direction", u.as_slice().to_vec())
        .with_param("bandwidth", bandwidth)
        .with_param("kernel", kernel.name())
        .with_param("intensity", intensity.name())
        .with_param("flag", "origin bias: r below the bandwidth");
    for k in 0..grid.len() {
        curve.values[k] = Some(sums[k].0 / ps.lambda_sq);
        curve.counts[k] = sums[k].1;
        curve.flagged[k] = grid[k] < bandwidth;
    }
    Ok(curve)
}

/// Options of the anisotropic (angle × range) pair correlation estimator.
#[derive(Debug, Clone)]
pub struct AnisoPcfOptions {
    pub h_r: Option<f64>,
    /// Angular bandwidth.
    pub h_a: f64,
    pub kernel: Kernel,
    pub intensity: IntensityModel,
}

impl Default for AnisoPcfOptions {
    fn default() -> Self {
        AnisoPcfOptions {
            h_r: None,
            h_a: PI / 8.0,
            kernel: Kernel::Epanechnikov,
            intensity: IntensityModel::Stationary,
        }
    }
}

/// Anisotropic pair correlation on an angle × range grid, symmetrized over
/// antipodal directions. In 3D `polar` holds the colatitudes; pass an empty
/// slice in 2D.
pub fn pcf_aniso(
    p: &PointPattern,
    angles: &[f64],
    polar: &[f64],
    grid: &[f64],
    opts: &AnisoPcfOptions,
) -> Result<SummaryCurve2D> {
    check_ranges(grid)?;
    let dim = p.dim();
    if angles.is_empty() {
        return Err(Error::param("angles", "angle grid is empty"));
    }
    if dim == 3 && polar.is_empty() {
        return Err(Error::param("polar", "3D estimation needs a colatitude grid"));
    }
    if dim == 2 && !polar.is_empty() {
        return Err(Error::param("polar", "colatitudes are only used in 3D"));
    }
    if polar.iter().any(|t| !(*t > 0.0 && *t < PI)) {
        return Err(Error::param("polar", "colatitudes must lie strictly inside (0, π)"));
    }
    if !(opts.h_a > 0.0) {
        return Err(Error::param("h_a", "must be positive"));
    }
    let h = match opts.h_r {
        Some(h) if h > 0.0 => h,
        Some(_) => return Err(Error::param("h_r", "must be positive")),
        None => default_range_bandwidth(p, true),
    };
    let kernel = opts.kernel;
    let reach = grid[grid.len() - 1] + kernel.reach(h);
    let ps = weighted_pairs(p, reach, &opts.intensity)?;
    let ang: Vec<(f64, f64)> = ps
        .pairs
        .iter()
        .map(|q| {
            let phi = planar_angle(q.d[0], q.d[1]).unwrap_or(0.0);
            let theta = if dim == 3 {
                (q.d[2] / q.dist).clamp(-1.0, 1.0).acos()
            } else {
                0.0
            };
            (phi, theta)
        })
        .collect();
    let np = polar.len().max(1);
    let nr = grid.len();
    let nodes = angles.len() * np * nr;
    let h_a = opts.h_a;
    let (sums, counts): (Vec<f64>, Vec<usize>) = (0..nodes)
        .into_par_iter()
        .map(|node| {
            let k = node % nr;
            let pi_ = (node / nr) % np;
            let a = node / (nr * np);
            let r = grid[k];
            let phi0 = angles[a];
            let mut s = 0.0;
            let mut c = 0;
            for (q, &(phi, theta)) in ps.pairs.iter().zip(&ang) {
                let kr = kernel.eval(q.dist - r, h);
                if kr == 0.0 {
                    continue;
                }
                let ka = if dim == 2 {
                    kernel.eval_wrapped(phi - phi0, h_a, 2.0 * PI)
                        + kernel.eval_wrapped(phi - phi0 - PI, h_a, 2.0 * PI)
                } else {
                    let t0 = polar[pi_];
                    kernel.eval_wrapped(phi - phi0, h_a, 2.0 * PI) * kernel.eval(theta - t0, h_a)
                        + kernel.eval_wrapped(phi - phi0 - PI, h_a, 2.0 * PI)
                            * kernel.eval(theta - (PI - t0), h_a)
                };
                if ka != 0.0 {
                    s += q.w * kr * ka;
                    c += 1;
                }
            }
            (s, c)
        })
        .unzip();
    let mut curve = SummaryCurve2D::new("aniso_pcf", angles.to_vec(), polar.to_vec(), grid.to_vec());
    curve.set_param("h_r", h);
    curve.set_param("h_a", h_a);
    curve.set_param("kernel", kernel.name());
    curve.set_param("intensity", opts.intensity.name());
    curve.set_param(
        "flag",
        "boundary-biased below the range bandwidth; unstable near the poles in 3D",
    );
    for node in 0..nodes {
        let k = node % nr;
        let pi_ = (node / nr) % np;
        let r = grid[k];
        let norm = if dim == 2 {
            2.0 * r
        } else {
            2.0 * r * r * polar[pi_].sin()
        };
        curve.values[node] = Some(sums[node] / (norm * ps.lambda_sq));
        curve.counts[node] = counts[node];
        let pole = dim == 3 && {
            let t = polar[pi_];
            t <= 5.0 * h_a || t >= PI - 5.0 * h_a
        };
        curve.flagged[node] = r < h || pole;
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RectWindow;
    use crate::rng::stream;
    use crate::simulate::poisson;
    use std::sync::Arc;

    fn hand_pattern() -> PointPattern {
        let pts = [
            [0.12, 0.2],
            [0.3, 0.25],
            [0.45, 0.6],
            [0.55, 0.4],
            [0.8, 0.35],
            [0.7, 0.75],
            [0.25, 0.8],
            [0.9, 0.9],
        ];
        let v: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        PointPattern::new(&v, RectWindow::cube(2, 0.0, 1.0).unwrap()).unwrap()
    }

    fn overlap(d: [f64; 2]) -> f64 {
        (1.0 - d[0].abs()) * (1.0 - d[1].abs())
    }

    fn diffs(p: &PointPattern) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for i in 0..p.len() {
            for j in 0..p.len() {
                if i != j {
                    let (x, y) = (p.point(i), p.point(j));
                    out.push([y[0] - x[0], y[1] - x[1]]);
                }
            }
        }
        out
    }

    fn lam2(p: &PointPattern) -> f64 {
        let n = p.len() as f64;
        n * (n - 1.0)
    }

    fn epa(t: f64, h: f64) -> f64 {
        let u = t / h;
        if u.abs() <= 1.0 {
            0.75 * (1.0 - u * u) / h
        } else {
            0.0
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn fry_is_symmetric() {
        let p = PointPattern::new(
            &[vec![0.0, 0.0], vec![1.0, 0.0]],
            RectWindow::cube(2, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        assert_eq!(fry(&p).unwrap().vectors, vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]);
        let q = hand_pattern();
        let f = fry(&q).unwrap();
        assert_eq!(f.len(), 56);
        for v in &f.vectors {
            assert!(f.vectors.contains(&[-v[0], -v[1], -v[2]]));
        }
    }

    #[test]
    fn conical_k_matches_direct_formula() {
        let p = hand_pattern();
        let s = SectorSpec::new(Direction::planar(0.4), PI / 6.0, None).unwrap();
        let grid = [0.2, 0.4, 0.6];
        let c = k_measure(&p, &DirectionalSet::Sector(s), &grid, &IntensityModel::Stationary)
            .unwrap();
        let u = [0.4f64.cos(), 0.4f64.sin()];
        for (k, r) in grid.iter().enumerate() {
            let mut sum = 0.0;
            for d in diffs(&p) {
                let n = d[0].hypot(d[1]);
                let ang = ((d[0] * u[0] + d[1] * u[1]).abs() / n).min(1.0).acos();
                if n <= *r && ang < PI / 6.0 {
                    sum += 1.0 / overlap(d);
                }
            }
            assert!(rel(c.value(k), sum / lam2(&p)) < 1e-12);
        }
    }

    #[test]
    fn cylindrical_k_matches_direct_formula() {
        let p = hand_pattern();
        let cyl = CylinderSpec::new(Direction::planar(1.1), 0.3, 0.1).unwrap();
        let grid = [0.2, 0.5];
        let c = k_measure(&p, &DirectionalSet::Cylinder(cyl), &grid, &IntensityModel::Stationary)
            .unwrap();
        let u = [1.1f64.cos(), 1.1f64.sin()];
        for (k, r) in grid.iter().enumerate() {
            let mut sum = 0.0;
            for d in diffs(&p) {
                let s = d[0] * u[0] + d[1] * u[1];
                let perp = (d[0] * u[1] - d[1] * u[0]).abs();
                if s.abs() <= *r && perp <= 0.1 {
                    sum += 1.0 / overlap(d);
                }
            }
            assert!(rel(c.value(k), sum / lam2(&p)) < 1e-12 || (sum == 0.0 && c.value(k) == 0.0));
        }
    }

    #[test]
    fn orientation_density_matches_direct_formula() {
        let p = hand_pattern();
        let grid: Vec<f64> = (0..12).map(|k| k as f64 * PI / 12.0).collect();
        let h = 0.5;
        let (f, cdf) = orientation_density_2nd(
            &p,
            0.05,
            0.5,
            h,
            Kernel::Epanechnikov,
            &grid,
            &IntensityModel::Stationary,
        )
        .unwrap();
        let mut terms = Vec::new();
        for d in diffs(&p) {
            let n = d[0].hypot(d[1]);
            if n > 0.05 && n < 0.5 {
                terms.push((d[1].atan2(d[0]).rem_euclid(PI), 1.0 / overlap(d)));
            }
        }
        let total: f64 = terms.iter().map(|t| t.1).sum();
        for (k, a) in grid.iter().enumerate() {
            let mut s = 0.0;
            for &(al, w) in &terms {
                for m in -2..=2 {
                    s += w * epa(a - al + m as f64 * PI, h);
                }
            }
            assert!(rel(f.value(k), s / total) < 1e-12);
        }
        assert!(cdf.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn orientation_density_integrates_to_one() {
        let w = RectWindow::cube(2, 0.0, 1.0).unwrap();
        let p = poisson(150.0, &w, &mut stream(2, 0));
        let m = 4000;
        let grid: Vec<f64> = (0..m).map(|k| k as f64 * PI / m as f64).collect();
        let (f, _) = orientation_density_2nd(
            &p,
            0.0,
            0.1,
            0.3,
            Kernel::Epanechnikov,
            &grid,
            &IntensityModel::Stationary,
        )
        .unwrap();
        let total: f64 = f.values.iter().map(|v| v.unwrap()).sum::<f64>() * PI / m as f64;
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn conical_pcf_matches_direct_formula_and_full_cone_is_isotropic() {
        let p = hand_pattern();
        let grid = [0.1, 0.25, 0.4];
        let opts = PcfOptions {
            h_r: Some(0.08),
            ..Default::default()
        };
        let s = SectorSpec::new(Direction::planar(2.0), PI / 5.0, None).unwrap();
        let c = pcf_conical(&p, &s, &grid, &opts).unwrap();
        let u = [2.0f64.cos(), 2.0f64.sin()];
        for (k, r) in grid.iter().enumerate() {
            let mut sum = 0.0;
            for d in diffs(&p) {
                let n = d[0].hypot(d[1]);
                let ang = ((d[0] * u[0] + d[1] * u[1]) / n).clamp(-1.0, 1.0).acos();
                if ang < PI / 5.0 {
                    sum += epa(n - r, 0.08) / overlap(d);
                }
            }
            let want = sum / (2.0 * r * PI / 5.0 * lam2(&p));
            assert!((c.value(k) - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
        let full = SectorSpec::new(Direction::planar(0.7), PI, None).unwrap();
        let a = pcf_conical(&p, &full, &grid, &opts).unwrap();
        let b = pcf_isotropic(&p, &grid, &opts).unwrap();
        for k in 0..grid.len() {
            assert!((a.value(k) - b.value(k)).abs() <= 1e-12 * b.value(k).abs().max(1.0));
        }
    }

    #[test]
    fn cylindrical_pcf_matches_direct_formula() {
        let p = hand_pattern();
        let grid = [0.15, 0.3];
        let opts = PcfOptions {
            h_r: Some(0.1),
            ..Default::default()
        };
        let c = pcf_cylindrical(&p, &Direction::planar(0.3), 0.1, &grid, &opts).unwrap();
        let u = [0.3f64.cos(), 0.3f64.sin()];
        for (k, r) in grid.iter().enumerate() {
            let mut sum = 0.0;
            for d in diffs(&p) {
                let s = d[0] * u[0] + d[1] * u[1];
                let perp = (d[0] * u[1] - d[1] * u[0]).abs();
                if perp < 0.1 {
                    sum += epa(s.abs() - r, 0.1) / overlap(d);
                }
            }
            let want = sum / (2.0 * 2.0 * 0.1 * lam2(&p));
            assert!((c.value(k) - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn guan_pcf_matches_direct_formula_and_is_symmetric() {
        let p = hand_pattern();
        let grid = [0.1, 0.2, 0.35];
        let u = Direction::planar(0.8);
        let c = pcf_guan(&p, &u, &grid, 0.15, Kernel::Epanechnikov, &IntensityModel::Stationary)
            .unwrap();
        let v = [0.8f64.cos(), 0.8f64.sin()];
        for (k, r) in grid.iter().enumerate() {
            let mut sum = 0.0;
            for d in diffs(&p) {
                let e = (-d[0] - r * v[0]).hypot(-d[1] - r * v[1]);
                if e <= 0.15 {
                    sum += 2.0 / PI * (1.0 - (e / 0.15).powi(2)) / (0.15 * 0.15) / overlap(d);
                }
            }
            let want = sum / lam2(&p);
            assert!((c.value(k) - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
        let back = pcf_guan(
            &p,
            &u.negate(),
            &grid,
            0.15,
            Kernel::Epanechnikov,
            &IntensityModel::Stationary,
        )
        .unwrap();
        for k in 0..grid.len() {
            assert!((c.value(k) - back.value(k)).abs() <= 1e-12 * c.value(k).abs().max(1.0));
        }
    }

    #[test]
    fn aniso_pcf_matches_direct_formula_and_antipodes() {
        let p = hand_pattern();
        let angles: Vec<f64> = (0..8).map(|k| k as f64 * PI / 4.0).collect();
        let grid = [0.2, 0.35];
        let opts = AnisoPcfOptions {
            h_r: Some(0.1),
            h_a: 0.6,
            ..Default::default()
        };
        let c = pcf_aniso(&p, &angles, &[], &grid, &opts).unwrap();
        let wrapped = |t: f64| {
            let mut s = 0.0;
            for m in -2..=2 {
                s += epa(t + 2.0 * PI * m as f64, 0.6);
            }
            s
        };
        for (a, phi0) in angles.iter().enumerate() {
            for (k, r) in grid.iter().enumerate() {
                let mut sum = 0.0;
                for d in diffs(&p) {
                    let n = d[0].hypot(d[1]);
                    let al = d[1].atan2(d[0]);
                    sum += epa(n - r, 0.1) * (wrapped(al - phi0) + wrapped(al - phi0 - PI))
                        / overlap(d);
                }
                let want = sum / (2.0 * r * lam2(&p));
                let got = c.get(a, 0, k).unwrap();
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
                let anti = c.get((a + 4) % 8, 0, k).unwrap();
                assert!((got - anti).abs() <= 1e-12 * got.abs().max(1.0));
            }
        }
    }

    #[test]
    fn aniso_pcf_3d_rejects_poles_and_flags_near_them() {
        let w = RectWindow::cube(3, 0.0, 1.0).unwrap();
        let p = poisson(100.0, &w, &mut stream(3, 0));
        let opts = AnisoPcfOptions {
            h_r: Some(0.05),
            h_a: 0.1,
            ..Default::default()
        };
        assert!(pcf_aniso(&p, &[0.0], &[0.0], &[0.2], &opts).is_err());
        let c = pcf_aniso(&p, &[0.0, 1.0], &[0.3, PI / 2.0], &[0.2], &opts).unwrap();
        assert!(c.flagged[c.index(0, 0, 0)]);
        assert!(!c.flagged[c.index(0, 1, 0)]);
    }

    #[test]
    fn soirs_with_constant_intensity_scales_stationary_estimate() {
        let p = hand_pattern();
        let s = DirectionalSet::Sector(SectorSpec::new(Direction::planar(0.0), PI / 4.0, None).unwrap());
        let grid = [0.3, 0.6];
        let stat = k_measure(&p, &s, &grid, &IntensityModel::Stationary).unwrap();
        let two = k_measure(&p, &s, &grid, &IntensityModel::Constant(2.0)).unwrap();
        let func = k_measure(&p, &s, &grid, &IntensityModel::Function(Arc::new(|_: &[f64]| 2.0)))
            .unwrap();
        let lam_sq = lam2(&p);
        for k in 0..grid.len() {
            let want = stat.value(k) * lam_sq / 4.0;
            assert!(rel(two.value(k), want) < 1e-12);
            assert!(rel(func.value(k), want) < 1e-12);
        }
    }

    #[test]
    fn k_measure_is_equivariant_under_linear_maps() {
        use crate::geometry::TransformedSet;
        use crate::simulate::{apply_transform, GeometricTransform};
        let w = RectWindow::cube(2, -1.0, 1.0).unwrap();
        let p = poisson(150.0, &w, &mut stream(12, 0));
        let t = GeometricTransform::scaling(&[1.0 / 0.6, 0.6]).unwrap();
        let q = apply_transform(&p, &t).unwrap();
        let base = DirectionalSet::Sector(SectorSpec::new(Direction::planar(0.5), PI / 8.0, None).unwrap());
        let grid = [0.1, 0.2, 0.3];
        let sets: Vec<DirectionalSet> = grid.iter().map(|&r| set_at(&base, r).unwrap()).collect();
        let m = t.matrix();
        let tsets: Vec<TransformedSet<DirectionalSet>> =
            sets.iter().map(|s| TransformedSet::new(s, &m).unwrap()).collect();
        let (a, _, _) = pair_sums_in_sets(&p, &sets, &IntensityModel::Stationary).unwrap();
        let (b, _, _) = pair_sums_in_sets(&q, &tsets, &IntensityModel::Stationary).unwrap();
        let det = t.determinant();
        for k in 0..grid.len() {
            assert!(rel(b[k], a[k] / det) < 1e-10);
        }
    }

    #[test]
    fn cylinder_ranges_must_exceed_half_width() {
        let p = hand_pattern();
        let cyl = CylinderSpec::new(Direction::planar(0.0), 0.3, 0.1).unwrap();
        let r = k_measure(&p, &DirectionalSet::Cylinder(cyl), &[0.05, 0.2], &IntensityModel::Stationary);
        assert!(r.is_err());
    }
}
