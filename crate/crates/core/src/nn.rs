//! Nearest-neighbour directional summaries: orientation density,
//! directional distribution, and global and local directed G functions.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::SummaryCurve;
use crate::error::{Error, Result};
use crate::geometry::{to_polar, SectorSpec, Vec3};
use crate::index::GridIndex;
use crate::kernel::Kernel;
use crate::pattern::PointPattern;

pub const DEFAULT_ORIENTATION_BANDWIDTH: f64 = PI / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NNRecord {
    pub index: usize,
    pub neighbour: usize,
    pub distance: f64,
    /// Planar angle of `x_nn - x_i`, in `[0, 2π)`; 0 on the 3D polar axis.
    pub phi: f64,
    /// Colatitude in 3D.
    pub theta: Option<f64>,
    pub difference: Vec3,
    /// Distance from `x_i` to the window boundary.
    pub border: f64,
}

fn require_points(p: &PointPattern, needed: usize) -> Result<()> {
    if p.len() < needed {
        return Err(Error::InsufficientPoints {
            needed,
            got: p.len(),
        });
    }
    Ok(())
}

fn typical_spacing(p: &PointPattern) -> f64 {
    (p.window().volume() / p.len().max(1) as f64).powf(1.0 / p.dim() as f64)
}

/// Nearest neighbour of every point; ties go to the lowest index.
pub fn nn_records(p: &PointPattern) -> Result<Vec<NNRecord>> {
    require_points(p, 2)?;
    let index = GridIndex::new(p, typical_spacing(p));
    (0..p.len())
        .into_par_iter()
        .map(|i| {
            let (j, d, dist) = index
                .nearest_where(i, |_| true)
                .expect("at least two points");
            let polar = to_polar(&d[..p.dim()])?;
            Ok(NNRecord {
                index: i,
                neighbour: j,
                distance: dist,
                phi: polar.phi.unwrap_or(0.0),
                theta: polar.theta,
                difference: d,
                border: p.window().boundary_distance(p.point(i)),
            })
        })
        .collect()
}

/// Default angle grid: `m` equally spaced nodes on `[0, period)`.
pub fn angle_grid(m: usize, period: f64) -> Vec<f64> {
    (0..m).map(|k| period * k as f64 / m as f64).collect()
}

fn check_grid(grid: &[f64], name: &'static str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(name, "grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(name, "grid must be strictly increasing"));
    }
    Ok(())
}

/// Kernel estimate of the nearest-neighbour orientation density (planar),
/// border-corrected by `d_i < e_i` and weighted by `1/|W ⊖ b(o, d_i)|`.
pub fn orientation_density(
    p: &PointPattern,
    bandwidth: f64,
    kernel: Kernel,
    grid: &[f64],
) -> Result<SummaryCurve> {
    if p.dim() != 2 {
        return Err(Error::param(
            "dim",
            "the orientation density is only defined for planar patterns",
        ));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::param("bandwidth", "must be positive"));
    }
    check_grid(grid, "angles")?;
    let recs = nn_records(p)?;
    let mut curve = SummaryCurve::new("nn_orientation_density", grid.to_vec())
        .with_param("bandwidth", bandwidth)
        .with_param("kernel", kernel.name())
        .with_param("n", p.len());
    let contrib: Vec<(f64, f64)> = recs
        .iter()
        .filter(|r| r.distance < r.border)
        .map(|r| (r.phi, 1.0 / p.window().eroded_volume_ball(r.distance)))
        .collect();
    let lambda_nn: f64 = contrib.iter().map(|c| c.1).sum();
    curve.set_param("lambda_nn", lambda_nn);
    curve.set_param("contributing_points", contrib.len());
    if contrib.is_empty() {
        curve
            .warnings
            .push("no point is closer to its nearest neighbour than to the border".into());
        return Ok(curve);
    }
    for (k, &a) in grid.iter().enumerate() {
        let mut s = 0.0;
        let mut c = 0;
        for &(phi, w) in &contrib {
            let kv = kernel.eval_wrapped(a - phi, bandwidth, TAU);
            if kv != 0.0 {
                c += 1;
            }
            s += w * kv;
        }
        curve.values[k] = Some(s / lambda_nn);
        curve.counts[k] = c;
    }
    Ok(curve)
}

/// `D̂_r(A(a))` with `A(a) = {u : φ(u) ∈ [0, a]}`, using points with
/// `b(x_i, r) ⊂ W`. In 3D only the azimuth enters `A(a)`.
pub fn directional_distribution(p: &PointPattern, r: f64, grid: &[f64]) -> Result<SummaryCurve> {
    if !(r > 0.0) {
        return Err(Error::param("r", "must be positive"));
    }
    check_grid(grid, "angles")?;
    let recs = nn_records(p)?;
    let used: Vec<f64> = recs
        .iter()
        .filter(|q| q.distance < r && q.border >= r)
        .map(|q| q.phi)
        .collect();
    let mut curve = SummaryCurve::new("nn_directional_distribution", grid.to_vec())
        .with_param("r", r)
        .with_param("denominator", used.len());
    if used.is_empty() {
        curve
            .warnings
            .push("no interior point has its nearest neighbour within r".into());
        return Ok(curve);
    }
    for (k, &a) in grid.iter().enumerate() {
        let c = used.iter().filter(|&&phi| phi <= a).count();
        curve.values[k] = Some(c as f64 / used.len() as f64);
        curve.counts[k] = c;
    }
    Ok(curve)
}

/// Border-corrected distribution of the nearest-neighbour distance among
/// points whose nearest neighbour lies in the double cone of `sector`.
pub fn g_global(p: &PointPattern, sector: &SectorSpec, grid: &[f64]) -> Result<SummaryCurve> {
    check_grid(grid, "r")?;
    if sector.axis.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: sector.axis.dim(),
        });
    }
    let recs = nn_records(p)?;
    let unbounded = SectorSpec {
        radius: None,
        ..*sector
    };
    let used: Vec<f64> = recs
        .iter()
        .filter(|q| unbounded.contains_vec(&q.difference) && q.border >= q.distance)
        .map(|q| q.distance)
        .collect();
    let mut curve = SummaryCurve::new("g_global", grid.to_vec())
        .with_param("half_angle", sector.half_angle)
        .with_param("direction", sector.axis.as_slice().to_vec())
        .with_param("denominator", used.len());
    if used.is_empty() {
        curve
            .warnings
            .push("no point has its nearest neighbour in the sector".into());
        return Ok(curve);
    }
    for (k, &r) in grid.iter().enumerate() {
        let c = used.iter().filter(|&&d| d < r).count();
        curve.values[k] = Some(c as f64 / used.len() as f64);
        curve.counts[k] = c;
    }
    Ok(curve)
}

/// Distance from each point to its nearest neighbour inside the double cone
/// `x_i + C(u, ε)`; `None` when the cone holds no other point.
pub fn cone_nn_distances(p: &PointPattern, sector: &SectorSpec) -> Vec<Option<f64>> {
    let index = GridIndex::new(p, typical_spacing(p));
    let cone = SectorSpec {
        radius: None,
        ..*sector
    };
    (0..p.len())
        .into_par_iter()
        .map(|i| {
            index
                .nearest_where(i, |d| cone.contains_vec(d))
                .map(|(_, _, dist)| dist)
        })
        .collect()
}

/// Hanisch-type estimator of the local directed G function, normalized by
/// its value beyond the largest cone-neighbour distance.
pub fn g_local(p: &PointPattern, sector: &SectorSpec, grid: &[f64]) -> Result<SummaryCurve> {
    check_grid(grid, "r")?;
    require_points(p, 2)?;
    if sector.axis.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: sector.axis.dim(),
        });
    }
    if sector.half_angle > PI / 2.0 {
        return Err(Error::param("half_angle", "must not exceed π/2"));
    }
    let dists = cone_nn_distances(p, sector);
    let mut terms: Vec<(f64, f64)> = Vec::new();
    for (i, d) in dists.iter().enumerate() {
        let Some(d) = *d else { continue };
        let s = sector.with_radius(d);
        let Some(eroded) = p.window().erode_by_sector(&s)? else {
            continue;
        };
        if eroded.contains(p.point(i)) {
            terms.push((d, 1.0 / eroded.volume()));
        }
    }
    let total: f64 = terms.iter().map(|t| t.1).sum();
    let mut curve = SummaryCurve::new("g_local", grid.to_vec())
        .with_param("half_angle", sector.half_angle)
        .with_param("direction", sector.axis.as_slice().to_vec())
        .with_param("contributing_points", terms.len());
    if terms.is_empty() {
        curve
            .warnings
            .push("no point has a cone neighbour inside the eroded window".into());
        return Ok(curve);
    }
    for (k, &r) in grid.iter().enumerate() {
        let mut s = 0.0;
        let mut c = 0;
        for &(d, w) in &terms {
            if d < r {
                s += w;
                c += 1;
            }
        }
        curve.values[k] = Some(s / total);
        curve.counts[k] = c;
    }
    Ok(curve)
}
