//! Preferred-direction estimation by fitting origin-centred ellipses
//! (ellipsoids in 3D) to pseudo-Fry contours.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, planar_angle, vector_angle, Direction, RectWindow, Vec3};
use crate::pattern::PointPattern;
use crate::rng::{stream, Rng};
use crate::second_order::{fry_within, FrySet};

/// Fraction of the smallest window half-side used as the Fry-vector cutoff.
pub const BORDER_CUTOFF: f64 = 0.7;
pub const MAX_DROPPED_FRACTION: f64 = 0.25;

pub fn border_cutoff(w: &RectWindow) -> f64 {
    BORDER_CUTOFF * 0.5 * w.min_side()
}

/// `m` equally spaced planar directions starting at angle 0.
pub fn planar_directions(m: usize) -> Vec<Direction> {
    (0..m)
        .map(|k| Direction::planar(2.0 * PI * k as f64 / m as f64))
        .collect()
}

/// Vertices of an icosahedron subdivided `levels` times and projected onto
/// the sphere: 12, 42, 162, ... directions.
pub fn icosphere(levels: usize) -> Vec<Direction> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push([
                    0.5 * (p[0] + q[0]),
                    0.5 * (p[1] + q[1]),
                    0.5 * (p[2] + q[2]),
                ]);
                verts.len() - 1
            })
        };
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut verts);
            let bc = midpoint(f[1], f[2], &mut verts);
            let ca = midpoint(f[2], f[0], &mut verts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    verts
        .iter()
        .map(|v| Direction::from_vector(v).expect("non-zero vertex"))
        .collect()
}

/// 36 planar directions or 162 icosphere directions.
pub fn default_directions(dim: usize) -> Vec<Direction> {
    if dim == 2 {
        planar_directions(36)
    } else {
        icosphere(2)
    }
}

/// Half-angle giving cones of total measure equal to the full circle or
/// sphere: `π/m` in 2D, `acos(1 − 2/m)` in 3D.
pub fn default_half_angle(dim: usize, m: usize) -> f64 {
    if dim == 2 {
        PI / m as f64
    } else {
        (1.0 - 2.0 / m as f64).acos()
    }
}

/// Sorted lengths of the Fry vectors inside each single cone.
#[derive(Debug, Clone)]
pub struct SectorDistances {
    pub dim: usize,
    pub directions: Vec<Direction>,
    pub half_angle: f64,
    pub distances: Vec<Vec<f64>>,
}

pub fn sector_distances(
    fry: &FrySet,
    directions: &[Direction],
    half_angle: f64,
) -> Result<SectorDistances> {
    if directions.is_empty() {
        return Err(Error::param("directions", "direction set is empty"));
    }
    if directions.iter().any(|u| u.dim() != fry.dim) {
        return Err(Error::DimensionMismatch {
            expected: fry.dim,
            got: directions[0].dim(),
        });
    }
    if !(half_angle > 0.0 && half_angle <= PI) {
        return Err(Error::param("half_angle", "must lie in (0, π]"));
    }
    let distances = directions
        .par_iter()
        .map(|u| {
            let mut d: Vec<f64> = fry
                .vectors
                .iter()
                .filter(|v| vector_angle(v, u.vector()) < half_angle)
                .map(norm)
                .filter(|&r| r > 0.0)
                .collect();
            d.sort_by(f64::total_cmp);
            d
        })
        .collect();
    Ok(SectorDistances {
        dim: fry.dim,
        directions: directions.to_vec(),
        half_angle,
        distances,
    })
}

/// Contour `G_l = {r_l(u) u}` through the `l`-th nearest Fry point of each
/// sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoFryContour {
    pub dim: usize,
    pub level: usize,
    pub half_angle: f64,
    pub directions: Vec<Direction>,
    pub radii: Vec<f64>,
    pub points: Vec<Vec3>,
    pub dropped: usize,
    pub warnings: Vec<String>,
}

impl SectorDistances {
    pub fn contour(&self, level: usize) -> Result<PseudoFryContour> {
        if level == 0 {
            return Err(Error::param("level", "contour levels start at 1"));
        }
        let mut c = PseudoFryContour {
            dim: self.dim,
            level,
            half_angle: self.half_angle,
            directions: Vec::new(),
            radii: Vec::new(),
            points: Vec::new(),
            dropped: 0,
            warnings: Vec::new(),
        };
        for (u, d) in self.directions.iter().zip(&self.distances) {
            match d.get(level - 1) {
                Some(&r) => {
                    let v = u.vector();
                    c.directions.push(*u);
                    c.radii.push(r);
                    c.points.push([r * v[0], r * v[1], r * v[2]]);
                }
                None => c.dropped += 1,
            }
        }
        let m = self.directions.len();
        if c.dropped as f64 > MAX_DROPPED_FRACTION * m as f64 {
            return Err(Error::param(
                "level",
                format!(
                    "{} of {m} sectors hold fewer than {level} Fry points",
                    c.dropped
                ),
            ));
        }
        if c.dropped > 0 {
            c.warnings.push(format!(
                "{} of {m} directions dropped: fewer than {level} Fry points in the sector",
                c.dropped
            ));
        }
        Ok(c)
    }
}

pub fn pseudo_fry(
    fry: &FrySet,
    level: usize,
    directions: &[Direction],
    half_angle: f64,
) -> Result<PseudoFryContour> {
    sector_distances(fry, directions, half_angle)?.contour(level)
}

/// Fit of `xᵀ A x = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidFit {
    pub dim: usize,
    pub matrix: Vec<Vec<f64>>,
    /// Free entries of `A`: `(a11, a12, a22)` or
    /// `(a11, a12, a13, a22, a23, a33)`.
    pub coefficients: Vec<f64>,
    pub coefficient_covariance: Vec<Vec<f64>>,
    /// Descending.
    pub semi_axes: Vec<f64>,
    /// Unit axes matching `semi_axes`.
    pub axes: Vec<Vec3>,
    /// Angle of the major axis' planar projection in `[0, π)`.
    pub rotation: f64,
    /// Noise variance per coordinate.
    pub sigma_sq: f64,
    pub n_points: usize,
}

/// Monomial exponents and multiplicities of the regressors.
fn design(dim: usize) -> Vec<([usize; 3], f64)> {
    if dim == 2 {
        vec![([2, 0, 0], 1.0), ([1, 1, 0], 2.0), ([0, 2, 0], 1.0)]
    } else {
        vec![
            ([2, 0, 0], 1.0),
            ([1, 1, 0], 2.0),
            ([1, 0, 1], 2.0),
            ([0, 2, 0], 1.0),
            ([0, 1, 1], 2.0),
            ([0, 0, 2], 1.0),
        ]
    }
}

/// Unbiased estimate of `x₀^k` from `x = x₀ + N(0, s2)`.
fn hermite(k: usize, x: f64, s2: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        2 => x * x - s2,
        3 => x * x * x - 3.0 * s2 * x,
        4 => x.powi(4) - 6.0 * s2 * x * x + 3.0 * s2 * s2,
        _ => unreachable!("regressor moments have degree at most 4"),
    }
}

fn monomial(e: [usize; 3], x: &Vec3, s2: f64) -> f64 {
    hermite(e[0], x[0], s2) * hermite(e[1], x[1], s2) * hermite(e[2], x[2], s2)
}

pub(crate) fn coefficient_matrix(dim: usize, a: &[f64]) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    if dim == 2 {
        m[(0, 0)] = a[0];
        m[(0, 1)] = a[1];
        m[(1, 0)] = a[1];
        m[(1, 1)] = a[2];
    } else {
        m[(0, 0)] = a[0];
        m[(0, 1)] = a[1];
        m[(1, 0)] = a[1];
        m[(0, 2)] = a[2];
        m[(2, 0)] = a[2];
        m[(1, 1)] = a[3];
        m[(1, 2)] = a[4];
        m[(2, 1)] = a[4];
        m[(2, 2)] = a[5];
    }
    m
}

/// One point's contribution `(b, Ψ)` to the noise-adjusted normal
/// equations `Σ Ψ_i β = Σ b_i`.
fn point_terms(x: &Vec3, dim: usize, s2: f64) -> (DVector<f64>, DMatrix<f64>) {
    let terms = design(dim);
    let p = terms.len();
    let mut psi = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    for (j, (ej, cj)) in terms.iter().enumerate() {
        b[j] = cj * monomial(*ej, x, s2);
        for (k, (ek, ck)) in terms.iter().enumerate().skip(j) {
            let e = [ej[0] + ek[0], ej[1] + ek[1], ej[2] + ek[2]];
            let v = cj * ck * monomial(e, x, s2);
            psi[(j, k)] = v;
            psi[(k, j)] = v;
        }
    }
    (b, psi)
}

/// Solve the noise-adjusted normal equations for variance `s2`.
fn adjusted_solve(points: &[Vec3], dim: usize, s2: f64) -> Result<DVector<f64>> {
    let p = design(dim).len();
    let mut psi = DMatrix::zeros(p, p);
    let mut beta = DVector::zeros(p);
    for x in points {
        let (b, m) = point_terms(x, dim, s2);
        beta += b;
        psi += m;
    }
    let eig = SymmetricEigen::new(psi.clone());
    let eigenvalues: &DVector<f64> = &eig.eigenvalues;
    let max = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(Error::Singular {
            context: "ellipse normal equations",
            condition,
        });
    }
    psi.cholesky()
        .map(|c| c.solve(&beta))
        .ok_or(Error::Singular {
            context: "ellipse normal equations",
            condition,
        })
}

/// [`adjusted_solve`] with the noise variance halved until the adjusted
/// normal equations are positive definite and the fitted form is elliptical.
fn damped_solve(points: &[Vec3], dim: usize, s2: f64) -> Option<(DVector<f64>, f64)> {
    let mut s2 = s2;
    for _ in 0..30 {
        if let Ok(c) = adjusted_solve(points, dim, s2) {
            let a = coefficient_matrix(dim, c.as_slice());
            let ok = if dim == 2 {
                a[(0, 0)] > 0.0 && a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] > 0.0
            } else {
                a.symmetric_eigenvalues().iter().all(|&v| v > 0.0)
            };
            if ok {
                return Some((c, s2));
            }
        }
        s2 *= 0.5;
    }
    None
}

/// Sandwich covariance `Ψ⁻¹ V Ψ⁻¹` of the adjusted estimating equations,
/// with `V` summed over clusters of antipodal points: a Fry contour holds
/// each pair difference twice, as `d` and `−d`.
fn sandwich_covariance(points: &[Vec3], dim: usize, s2: f64, coef: &DVector<f64>) -> Result<DMatrix<f64>> {
    let p = coef.len();
    let n = points.len();
    let mut cluster: Vec<usize> = (0..n).collect();
    for i in 0..n {
        if cluster[i] != i {
            continue;
        }
        let scale = norm(&points[i]).max(f64::MIN_POSITIVE);
        if let Some(j) = (i + 1..n).find(|&j| {
            cluster[j] == j
                && (0..3).all(|k| (points[i][k] + points[j][k]).abs() <= 1e-9 * scale)
        }) {
            cluster[j] = i;
        }
    }
    let mut psi = DMatrix::zeros(p, p);
    let mut g = vec![DVector::zeros(p); n];
    for (i, x) in points.iter().enumerate() {
        let (b, m) = point_terms(x, dim, s2);
        g[cluster[i]] += b - &m * coef;
        psi += m;
    }
    let clusters = (0..n).filter(|&i| cluster[i] == i).count();
    let mut v = DMatrix::zeros(p, p);
    for (i, gi) in g.iter().enumerate() {
        if cluster[i] == i {
            v += gi * gi.transpose();
        }
    }
    v *= clusters as f64 / (clusters.saturating_sub(p)).max(1) as f64;
    let inv = psi.try_inverse().ok_or(Error::Singular {
        context: "ellipse normal equations",
        condition: f64::INFINITY,
    })?;
    Ok(&inv * v * &inv)
}

/// Residual variance of the orthogonal distances to the fitted surface.
fn geometric_variance(points: &[Vec3], a: &Matrix3<f64>, p: usize) -> f64 {
    let n = points.len();
    let mut ss = 0.0;
    for x in points {
        let v = nalgebra::Vector3::new(x[0], x[1], x[2]);
        let q = v.dot(&(a * v)) - 1.0;
        let g = 2.0 * (a * v).norm();
        if g > 0.0 {
            ss += (q / g).powi(2);
        }
    }
    ss / (n.saturating_sub(p)).max(1) as f64
}

/// Adjusted least-squares fit of an origin-centred ellipse (ellipsoid).
pub fn fit_points(points: &[Vec3], dim: usize) -> Result<EllipsoidFit> {
    if dim != 2 && dim != 3 {
        return Err(Error::param("dim", "must be 2 or 3"));
    }
    let p = design(dim).len();
    let needed = if dim == 2 { 5 } else { 9 };
    if points.len() < needed {
        return Err(Error::InsufficientPoints {
            needed,
            got: points.len(),
        });
    }
    let mut coef = adjusted_solve(points, dim, 0.0)?;
    let mut s2 = 0.0;
    for _ in 0..2 {
        let target = geometric_variance(points, &coefficient_matrix(dim, coef.as_slice()), p);
        if let Some((c, used)) = damped_solve(points, dim, target) {
            coef = c;
            s2 = used;
        }
    }
    let a = coefficient_matrix(dim, coef.as_slice());
    let sigma_sq = geometric_variance(points, &a, p);

    let (values, vectors): (Vec<f64>, Vec<Vec3>) = if dim == 2 {
        let m = Matrix2::new(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        let e = SymmetricEigen::new(m);
        (0..2)
            .map(|k| {
                let v = e.eigenvectors.column(k);
                (e.eigenvalues[k], [v[0], v[1], 0.0])
            })
            .unzip()
    } else {
        let e = SymmetricEigen::new(a);
        (0..3)
            .map(|k| {
                let v = e.eigenvectors.column(k);
                (e.eigenvalues[k], [v[0], v[1], v[2]])
            })
            .unzip()
    };
    if values.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NonElliptical(format!(
            "fitted form has eigenvalues {values:?}"
        )));
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let semi_axes: Vec<f64> = order.iter().map(|&k| 1.0 / values[k].sqrt()).collect();
    let axes: Vec<Vec3> = order.iter().map(|&k| vectors[k]).collect();
    let major = axes[0];
    let rotation = planar_angle(major[0], major[1])
        .map(|a| a.rem_euclid(PI))
        .unwrap_or(0.0);
    let rotation = if rotation >= PI { 0.0 } else { rotation };

    let cov = sandwich_covariance(points, dim, s2, &coef)?;

    Ok(EllipsoidFit {
        dim,
        matrix: (0..dim)
            .map(|i| (0..dim).map(|j| a[(i, j)]).collect())
            .collect(),
        coefficients: coef.iter().copied().collect(),
        coefficient_covariance: (0..p)
            .map(|i| (0..p).map(|j| 0.5 * (cov[(i, j)] + cov[(j, i)])).collect())
            .collect(),
        semi_axes,
        axes,
        rotation,
        sigma_sq,
        n_points: points.len(),
    })
}

pub fn fit_ellipsoid(contour: &PseudoFryContour) -> Result<EllipsoidFit> {
    fit_points(&contour.points, contour.dim)
}

impl EllipsoidFit {
    /// Radius of the fitted surface in direction `u`.
    pub fn radius(&self, u: &Vec3) -> f64 {
        let a = coefficient_matrix(self.dim, &self.coefficients);
        let v = nalgebra::Vector3::new(u[0], u[1], u[2]);
        1.0 / v.dot(&(a * v)).sqrt()
    }

    /// Geometric mean of the semi-axes.
    pub fn scale(&self) -> f64 {
        (self.semi_axes.iter().map(|a| a.ln()).sum::<f64>() / self.dim as f64).exp()
    }
}

/// Fit of one contour level, or why it was rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelFit {
    pub level: usize,
    pub dropped: usize,
    pub fit: Option<EllipsoidFit>,
    pub error: Option<String>,
}

/// Consensus fit over several contour levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsensusFit {
    pub consensus: EllipsoidFit,
    pub levels: Vec<LevelFit>,
    pub warnings: Vec<String>,
}

/// Resample every accepted contour fit with its fitted noise, normalize each
/// to unit geometric-mean semi-axis, superimpose and refit.
pub fn average_rotation(contours: &[PseudoFryContour], rng: &mut Rng) -> Result<ConsensusFit> {
    let mut levels = Vec::new();
    let mut warnings = Vec::new();
    let mut pooled = Vec::new();
    let mut dim = 2;
    for c in contours {
        dim = c.dim;
        warnings.extend(c.warnings.iter().map(|w| format!("level {}: {w}", c.level)));
        match fit_ellipsoid(c) {
            Ok(fit) => {
                let g = fit.scale();
                let sd = fit.sigma_sq.sqrt();
                for u in &c.directions {
                    let v = u.vector();
                    let r = fit.radius(v);
                    let mut x = [0.0; 3];
                    for j in 0..c.dim {
                        let e: f64 = StandardNormal.sample(rng);
                        x[j] = (r * v[j] + sd * e) / g;
                    }
                    pooled.push(x);
                }
                levels.push(LevelFit {
                    level: c.level,
                    dropped: c.dropped,
                    fit: Some(fit),
                    error: None,
                });
            }
            Err(e) => {
                warnings.push(format!("level {} rejected: {e}", c.level));
                levels.push(LevelFit {
                    level: c.level,
                    dropped: c.dropped,
                    fit: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    if levels.iter().all(|l| l.fit.is_none()) {
        return Err(Error::NonElliptical(
            "every contour level was rejected".into(),
        ));
    }
    let consensus = fit_points(&pooled, dim)?;
    Ok(ConsensusFit {
        consensus,
        levels,
        warnings,
    })
}

/// Fry vectors within the border cutoff, contours at `levels`, and the
/// consensus fit.
pub fn fry_ellipse(
    p: &PointPattern,
    levels: &[usize],
    directions: &[Direction],
    half_angle: f64,
    seed: u64,
) -> Result<ConsensusFit> {
    if levels.is_empty() {
        return Err(Error::param("levels", "no contour levels given"));
    }
    let fry = fry_within(p, border_cutoff(p.window()))?;
    let sectors = sector_distances(&fry, directions, half_angle)?;
    let mut contours = Vec::new();
    let mut errors = Vec::new();
    for &l in levels {
        match sectors.contour(l) {
            Ok(c) => contours.push(c),
            Err(e) => errors.push(format!("level {l} skipped: {e}")),
        }
    }
    if contours.is_empty() {
        return Err(Error::param(
            "levels",
            format!("no usable contour level: {}", errors.join("; ")),
        ));
    }
    let mut out = average_rotation(&contours, &mut stream(seed, 0))?;
    out.warnings.splice(0..0, errors);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipse_points(a: f64, b: f64, rot: f64, m: usize) -> Vec<Vec3> {
        (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                let (x, y) = (a * t.cos(), b * t.sin());
                [
                    x * rot.cos() - y * rot.sin(),
                    x * rot.sin() + y * rot.cos(),
                    0.0,
                ]
            })
            .collect()
    }

    #[test]
    fn icosphere_counts_and_unit_length() {
        assert_eq!(icosphere(0).len(), 12);
        assert_eq!(icosphere(1).len(), 42);
        let s = icosphere(2);
        assert_eq!(s.len(), 162);
        for u in &s {
            assert!((norm(u.vector()) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn noiseless_ellipse_is_recovered() {
        let f = fit_points(&ellipse_points(2.0, 1.0, 0.0, 36), 2).unwrap();
        assert!((f.semi_axes[0] - 2.0).abs() < 1e-8);
        assert!((f.semi_axes[1] - 1.0).abs() < 1e-8);
        assert!(f.rotation.min(PI - f.rotation) < 1e-8);
        let g = fit_points(&ellipse_points(2.0, 1.0, PI / 6.0, 36), 2).unwrap();
        assert!((g.rotation - PI / 6.0).abs() < 1e-8);
        assert!((g.semi_axes[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn scaling_scales_semi_axes() {
        let pts = ellipse_points(1.5, 0.7, 0.4, 24);
        let f = fit_points(&pts, 2).unwrap();
        let scaled: Vec<Vec3> = pts.iter().map(|x| [3.0 * x[0], 3.0 * x[1], 0.0]).collect();
        let g = fit_points(&scaled, 2).unwrap();
        for k in 0..2 {
            assert!((g.semi_axes[k] - 3.0 * f.semi_axes[k]).abs() < 1e-8);
        }
        assert!((g.rotation - f.rotation).abs() < 1e-8);
    }

    #[test]
    fn ellipsoid_in_3d() {
        let dirs = icosphere(1);
        let axes = [3.0, 2.0, 1.0];
        let pts: Vec<Vec3> = dirs
            .iter()
            .map(|u| {
                let v = u.vector();
                let q: f64 = (0..3).map(|j| (v[j] / axes[j]).powi(2)).sum();
                let r = 1.0 / q.sqrt();
                [r * v[0], r * v[1], r * v[2]]
            })
            .collect();
        let f = fit_points(&pts, 3).unwrap();
        for k in 0..3 {
            assert!((f.semi_axes[k] - axes[k]).abs() < 1e-8);
        }
        assert!(f.axes[0][0].abs() > 1.0 - 1e-8);
    }

    #[test]
    fn hyperbola_is_rejected() {
        let pts: Vec<Vec3> = (0..20)
            .map(|k| {
                let t = -1.0 + 0.1 * k as f64;
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                [s * t.cosh(), t.sinh(), 0.0]
            })
            .collect();
        assert!(matches!(
            fit_points(&pts, 2),
            Err(Error::NonElliptical(_))
        ));
    }

    #[test]
    fn very_noisy_circle_still_fits() {
        let mut rng = stream(5, 0);
        let pts: Vec<Vec3> = (0..36)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 36.0;
                let z: f64 = StandardNormal.sample(&mut rng);
                let r = (1.0 + 0.4 * z).abs();
                [r * t.cos(), r * t.sin(), 0.0]
            })
            .collect();
        let f = fit_points(&pts, 2).unwrap();
        assert!(f.semi_axes.iter().all(|a| a.is_finite() && *a > 0.0));
    }

    #[test]
    fn circle_contour_from_fry_set() {
        let vectors: Vec<Vec3> = (0..72)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / 72.0;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        let fry = FrySet { dim: 2, vectors };
        let dirs = planar_directions(36);
        let c = pseudo_fry(&fry, 1, &dirs, default_half_angle(2, 36)).unwrap();
        assert_eq!(c.points.len(), 36);
        for p in &c.points {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
        let d = pseudo_fry(&fry, 2, &dirs, default_half_angle(2, 36)).unwrap();
        assert!(c.radii.iter().zip(&d.radii).all(|(a, b)| a <= b));
        assert!(pseudo_fry(&fry, 3, &dirs, default_half_angle(2, 36)).is_err());
    }

    #[test]
    fn single_contour_consensus_matches_its_fit() {
        let pts = ellipse_points(2.0, 1.0, 1.0, 36);
        let dirs: Vec<Direction> = pts.iter().map(|p| Direction::from_vector(p).unwrap()).collect();
        let radii = pts.iter().map(norm).collect();
        let c = PseudoFryContour {
            dim: 2,
            level: 1,
            half_angle: 0.1,
            directions: dirs,
            radii,
            points: pts,
            dropped: 0,
            warnings: vec![],
        };
        let fit = fit_ellipsoid(&c).unwrap();
        let cons = average_rotation(&[c], &mut stream(1, 0)).unwrap();
        assert!((cons.consensus.rotation - fit.rotation).abs() < PI / 180.0);
    }
}
