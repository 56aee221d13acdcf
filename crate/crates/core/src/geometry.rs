//! Windows, polar coordinates, directional test sets and the edge-correction
//! volumes built from them.
//!
//! Points are handled as coordinate slices of length 2 or 3. Short-lived
//! difference vectors use the fixed-size [`Vec3`], with the third component
//! left at zero for planar data.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for geometric comparisons of normalized quantities.
pub const GEOM_TOL: f64 = 1e-12;

/// Fixed-size scratch vector; planar code leaves `[2]` at zero.
pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec3 {
    let mut out = [0.0; 3];
    for j in 0..a.len() {
        out[j] = a[j] - b[j];
    }
    out
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn to_vec3(v: &[f64]) -> Vec3 {
    let mut out = [0.0; 3];
    out[..v.len()].copy_from_slice(v);
    out
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::param("dim", format!("must be 2 or 3, got {dim}")))
    }
}

/// Wrap an angle into `[0, period)`.
pub fn wrap_angle(a: f64, period: f64) -> f64 {
    let w = a.rem_euclid(period);
    // rem_euclid can return `period` itself for tiny negative inputs.
    if w >= period {
        0.0
    } else {
        w
    }
}

/// Signed angular difference wrapped into `(-period/2, period/2]`.
pub fn angle_diff(a: f64, b: f64, period: f64) -> f64 {
    let d = wrap_angle(a - b, period);
    if d > period / 2.0 {
        d - period
    } else {
        d
    }
}

/// Polar (2D) or spherical (3D) representation of a vector.
///
/// Angles that are not defined at the given vector are `None`: both angles at
/// the origin, and `phi` on the 3D polar axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polar {
    pub r: f64,
    /// Anti-clockwise angle from the x-axis in `[0, 2π)`.
    pub phi: Option<f64>,
    /// Colatitude `acos(z/r)` in `[0, π]`; always `None` in 2D.
    pub theta: Option<f64>,
}

/// Planar angle of `(x, y)`, or `None` at the origin.
pub fn planar_angle(x: f64, y: f64) -> Option<f64> {
    if x == 0.0 && y == 0.0 {
        return None;
    }
    // atan2 agrees with the branch definition except that the negative
    // x-axis maps to π rather than 0.
    Some(wrap_angle(y.atan2(x), TAU))
}

pub fn to_polar(v: &[f64]) -> Result<Polar> {
    check_dim(v.len())?;
    let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let phi = planar_angle(v[0], v[1]);
    let theta = if v.len() == 3 && r > 0.0 {
        Some((v[2] / r).clamp(-1.0, 1.0).acos())
    } else {
        None
    };
    Ok(Polar { r, phi, theta })
}

/// Inverse of [`to_polar`]. Pass `theta = None` for 2D.
pub fn from_polar(r: f64, phi: f64, theta: Option<f64>) -> Vec<f64> {
    match theta {
        None => vec![r * phi.cos(), r * phi.sin()],
        Some(t) => vec![
            r * t.sin() * phi.cos(),
            r * t.sin() * phi.sin(),
            r * t.cos(),
        ],
    }
}

/// Axis-aligned box window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectWindow {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl RectWindow {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        check_dim(lo.len())?;
        for j in 0..lo.len() {
            if !(hi[j] > lo[j]) || !lo[j].is_finite() || !hi[j].is_finite() {
                return Err(Error::param(
                    "window",
                    format!("side {j} is empty: lo={} hi={}", lo[j], hi[j]),
                ));
            }
        }
        Ok(RectWindow { lo, hi })
    }

    /// Square (cube) `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, j: usize) -> f64 {
        self.hi[j] - self.lo[j]
    }

    pub fn sides(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.side(j)).collect()
    }

    pub fn min_side(&self) -> f64 {
        self.sides().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.side(j)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| 0.5 * (self.lo[j] + self.hi[j])).collect()
    }

    /// Closed containment with a small relative slack.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|j| {
            let slack = GEOM_TOL * self.side(j).max(1.0);
            x[j] >= self.lo[j] - slack && x[j] <= self.hi[j] + slack
        })
    }

    /// Distance from an interior point to the window boundary.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        (0..self.dim())
            .map(|j| (x[j] - self.lo[j]).min(self.hi[j] - x[j]))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// `|W ∩ (W + h)|` for a box window.
    pub fn translation_overlap(&self, h: &[f64]) -> f64 {
        (0..self.dim())
            .map(|j| (self.side(j) - h[j].abs()).max(0.0))
            .product()
    }

    pub fn translate(&self, t: &[f64]) -> RectWindow {
        RectWindow {
            lo: self.lo.iter().zip(t).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(t).map(|(a, b)| a + b).collect(),
        }
    }

    /// Shrink every side by `extents[j]` on both ends; `None` when empty.
    pub fn shrink(&self, extents: &[f64]) -> Option<RectWindow> {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        for j in 0..self.dim() {
            lo[j] += extents[j];
            hi[j] -= extents[j];
            if !(hi[j] > lo[j]) {
                return None;
            }
        }
        Some(RectWindow { lo, hi })
    }

    /// Volume of the window shrunk by `extents`, zero when empty.
    pub fn shrunk_volume(&self, extents: &[f64]) -> f64 {
        (0..self.dim())
            .map(|j| (self.side(j) - 2.0 * extents[j]).max(0.0))
            .product()
    }

    /// `W ⊖ b(o, r)`.
    pub fn erode_by_ball(&self, r: f64) -> Result<Option<RectWindow>> {
        if !(r >= 0.0) {
            return Err(Error::param("r", format!("must be >= 0, got {r}")));
        }
        Ok(self.shrink(&vec![r; self.dim()]))
    }

    /// `|W ⊖ b(o, r)|`.
    pub fn eroded_volume_ball(&self, r: f64) -> f64 {
        self.shrunk_volume(&[r, r, r][..self.dim()])
    }

    /// `W ⊖ S(u, ε, r)`. A box eroded by a centrally symmetric set depends
    /// only on the set's per-axis extents.
    pub fn erode_by_sector(&self, s: &SectorSpec) -> Result<Option<RectWindow>> {
        let ext = s.extents()?;
        Ok(self.shrink(&ext[..self.dim()]))
    }

    pub fn is_square(&self) -> bool {
        let s0 = self.side(0);
        (1..self.dim()).all(|j| (self.side(j) - s0).abs() <= GEOM_TOL * s0)
    }
}

/// Unit vector in 2 or 3 dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    dim: usize,
    v: Vec3,
}

impl Direction {
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        check_dim(v.len())?;
        let v3 = to_vec3(v);
        let n = norm(&v3);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::param("direction", "zero or non-finite vector"));
        }
        Ok(Direction {
            dim: v.len(),
            v: [v3[0] / n, v3[1] / n, v3[2] / n],
        })
    }

    /// Planar direction at anti-clockwise angle `phi` from the x-axis.
    pub fn planar(phi: f64) -> Self {
        Direction {
            dim: 2,
            v: [phi.cos(), phi.sin(), 0.0],
        }
    }

    pub fn spherical(phi: f64, theta: f64) -> Self {
        Direction {
            dim: 3,
            v: [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()],
        }
    }

    /// Coordinate axis `j` in dimension `dim`.
    pub fn axis(dim: usize, j: usize) -> Self {
        let mut v = [0.0; 3];
        v[j] = 1.0;
        Direction { dim, v }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self) -> &Vec3 {
        &self.v
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.dim]
    }

    pub fn negate(&self) -> Self {
        Direction {
            dim: self.dim,
            v: [-self.v[0], -self.v[1], -self.v[2]],
        }
    }

    pub fn polar(&self) -> Polar {
        to_polar(self.as_slice()).expect("direction has valid dimension")
    }
}

/// Angle between the line spanned by `u` and the vector `v`, in `[0, π/2]`.
#[inline]
pub fn axial_angle(v: &Vec3, u: &Vec3) -> f64 {
    let n = norm(v);
    if n == 0.0 {
        return 0.0;
    }
    (dot(v, u).abs() / n).min(1.0).acos()
}

/// Angle between `v` and `u` in `[0, π]`.
#[inline]
pub fn vector_angle(v: &Vec3, u: &Vec3) -> f64 {
    let n = norm(v);
    if n == 0.0 {
        return 0.0;
    }
    (dot(v, u) / n).clamp(-1.0, 1.0).acos()
}

/// Origin-centred set used as a test region for difference vectors.
pub trait TestSet: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, v: &Vec3) -> bool;
    /// Upper bound on `||v||` over members.
    fn reach(&self) -> f64;
}

/// Double cone `C(u, ε)` or its truncation `S(u, ε, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub axis: Direction,
    pub half_angle: f64,
    pub radius: Option<f64>,
}

impl SectorSpec {
    pub fn new(axis: Direction, half_angle: f64, radius: Option<f64>) -> Result<Self> {
        if !(half_angle > 0.0 && half_angle <= PI) {
            return Err(Error::param(
                "half_angle",
                format!("must lie in (0, π], got {half_angle}"),
            ));
        }
        if let Some(r) = radius {
            if !(r > 0.0) {
                return Err(Error::param("radius", format!("must be > 0, got {r}")));
            }
        }
        Ok(SectorSpec {
            axis,
            half_angle,
            radius,
        })
    }

    pub fn with_radius(&self, r: f64) -> SectorSpec {
        SectorSpec {
            radius: Some(r),
            ..*self
        }
    }

    /// Membership in the double cone; the apex belongs to the set.
    pub fn contains_vec(&self, v: &Vec3) -> bool {
        let n = norm(v);
        if n == 0.0 {
            return true;
        }
        if let Some(r) = self.radius {
            if n > r {
                return false;
            }
        }
        self.half_angle > PI / 2.0 || axial_angle(v, self.axis.vector()) < self.half_angle
    }

    /// Per-axis half-extent of `S(u, ε, r)`.
    pub fn extents(&self) -> Result<Vec3> {
        let r = self
            .radius
            .ok_or_else(|| Error::param("radius", "sector erosion needs a finite radius"))?;
        let mut out = [0.0; 3];
        let u = self.axis.vector();
        for (j, e) in out.iter_mut().enumerate().take(self.axis.dim()) {
            // Maximum of |w_j| over unit w within ε of ±u.
            let beta = u[j].abs().min(1.0).acos();
            *e = if beta <= self.half_angle {
                r
            } else {
                r * (beta - self.half_angle).cos()
            };
        }
        Ok(out)
    }
}

impl TestSet for SectorSpec {
    fn dim(&self) -> usize {
        self.axis.dim()
    }
    fn contains(&self, v: &Vec3) -> bool {
        self.contains_vec(v)
    }
    fn reach(&self) -> f64 {
        self.radius.unwrap_or(f64::INFINITY)
    }
}

/// Origin-centred cylinder (rectangle in 2D) `L(r, u, h_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub axis: Direction,
    pub half_height: f64,
    pub half_width: f64,
}

impl CylinderSpec {
    pub fn new(axis: Direction, half_height: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::param("half_width", "must be > 0"));
        }
        if !(half_height > half_width) {
            return Err(Error::param(
                "half_height",
                format!("must exceed the half-width {half_width}, got {half_height}"),
            ));
        }
        Ok(CylinderSpec {
            axis,
            half_height,
            half_width,
        })
    }

    /// Coordinate along the axis and distance to the axis.
    #[inline]
    pub fn axial_split(&self, v: &Vec3) -> (f64, f64) {
        let u = self.axis.vector();
        let s = dot(v, u);
        let perp = [v[0] - s * u[0], v[1] - s * u[1], v[2] - s * u[2]];
        (s, norm(&perp))
    }

    pub fn contains_vec(&self, v: &Vec3) -> bool {
        let (s, d) = self.axial_split(v);
        s.abs() <= self.half_height && d <= self.half_width
    }
}

impl TestSet for CylinderSpec {
    fn dim(&self) -> usize {
        self.axis.dim()
    }
    fn contains(&self, v: &Vec3) -> bool {
        self.contains_vec(v)
    }
    fn reach(&self) -> f64 {
        self.half_height.hypot(self.half_width)
    }
}

/// Either directional test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectionalSet {
    Sector(SectorSpec),
    Cylinder(CylinderSpec),
}

impl TestSet for DirectionalSet {
    fn dim(&self) -> usize {
        match self {
            DirectionalSet::Sector(s) => s.dim(),
            DirectionalSet::Cylinder(c) => c.dim(),
        }
    }
    fn contains(&self, v: &Vec3) -> bool {
        match self {
            DirectionalSet::Sector(s) => s.contains_vec(v),
            DirectionalSet::Cylinder(c) => c.contains_vec(v),
        }
    }
    fn reach(&self) -> f64 {
        match self {
            DirectionalSet::Sector(s) => s.reach(),
            DirectionalSet::Cylinder(c) => c.reach(),
        }
    }
}

/// Image `T B` of a test set under an invertible linear map, given through
/// `T` and `T⁻¹` (row-major, `dim × dim`).
pub struct TransformedSet<'a, S: TestSet> {
    pub inner: &'a S,
    pub forward_norm: f64,
    pub inverse: [[f64; 3]; 3],
}

impl<'a, S: TestSet> TransformedSet<'a, S> {
    pub fn new(inner: &'a S, t: &[[f64; 3]; 3]) -> Result<Self> {
        let dim = inner.dim();
        let inverse = invert(t, dim)?;
        // Frobenius norm bounds the operator norm.
        let forward_norm = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| t[i][j] * t[i][j])
            .sum::<f64>()
            .sqrt();
        Ok(TransformedSet {
            inner,
            forward_norm,
            inverse,
        })
    }
}

impl<S: TestSet> TestSet for TransformedSet<'_, S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn contains(&self, v: &Vec3) -> bool {
        self.inner.contains(&apply(&self.inverse, v))
    }
    fn reach(&self) -> f64 {
        self.forward_norm * self.inner.reach()
    }
}

#[inline]
pub fn apply(m: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Inverse of the leading `dim × dim` block; the rest is left zero.
pub fn invert(m: &[[f64; 3]; 3], dim: usize) -> Result<[[f64; 3]; 3]> {
    let mut out = [[0.0; 3]; 3];
    match dim {
        2 => {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() < 1e-300 {
                return Err(Error::param("transform", "matrix is singular"));
            }
            out[0][0] = m[1][1] / det;
            out[0][1] = -m[0][1] / det;
            out[1][0] = -m[1][0] / det;
            out[1][1] = m[0][0] / det;
        }
        3 => {
            let mat = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
            let inv = mat
                .try_inverse()
                .ok_or_else(|| Error::param("transform", "matrix is singular"))?;
            for (i, row) in out.iter_mut().enumerate() {
                for (j, e) in row.iter_mut().enumerate() {
                    *e = inv[(i, j)];
                }
            }
        }
        _ => check_dim(dim)?,
    }
    Ok(out)
}

pub fn determinant(m: &[[f64; 3]; 3], dim: usize) -> f64 {
    if dim == 2 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    } else {
        nalgebra::Matrix3::from_fn(|i, j| m[i][j]).determinant()
    }
}

/// Volume of the unit ball in dimension `d` (`d` in 1..=3).
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!("dimension above 3"),
    }
}
