//! Sector-intensity wavelet variance per focal point, and the directional
//! Morlet wavelet transform with its scale-angle energy density.

use std::f64::consts::PI;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{SummaryCurve, SummaryCurve2D};
use crate::error::{Error, Result};
use crate::geometry::RectWindow;
use crate::pattern::PointPattern;

pub const SECTORS: usize = 180;

/// Combined intensities of opposite 1° sectors around a focal point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorIntensityProfile {
    pub focal: usize,
    pub point: [f64; 2],
    /// `η(x, θ_i)` for `θ_i = i°`.
    pub eta: Vec<f64>,
    pub counts: Vec<usize>,
    /// Area of both opposite sectors inside the window.
    pub areas: Vec<f64>,
}

type Polygon = Vec<[f64; 2]>;

fn clip(poly: &Polygon, inside: impl Fn(&[f64; 2]) -> bool, cut: impl Fn(&[f64; 2], &[f64; 2]) -> [f64; 2]) -> Polygon {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let cur = poly[k];
        let prev = poly[(k + poly.len() - 1) % poly.len()];
        match (inside(&prev), inside(&cur)) {
            (true, true) => out.push(cur),
            (true, false) => out.push(cut(&prev, &cur)),
            (false, true) => {
                out.push(cut(&prev, &cur));
                out.push(cur);
            }
            (false, false) => {}
        }
    }
    out
}

/// Clip a polygon to an axis-aligned rectangle.
fn clip_to_rect(poly: Polygon, w: &RectWindow) -> Polygon {
    let mut p = poly;
    for j in 0..2 {
        for (bound, keep_above) in [(w.lo()[j], true), (w.hi()[j], false)] {
            if p.is_empty() {
                return p;
            }
            p = clip(
                &p,
                |x| if keep_above { x[j] >= bound } else { x[j] <= bound },
                |a, b| {
                    let t = (bound - a[j]) / (b[j] - a[j]);
                    let mut c = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    c[j] = bound;
                    c
                },
            );
        }
    }
    p
}

fn polygon_area(p: &Polygon) -> f64 {
    let mut s = 0.0;
    for k in 0..p.len() {
        let (a, b) = (p[k], p[(k + 1) % p.len()]);
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s.abs()
}

/// Area of the 1° wedge centred on `deg` degrees, clipped to the window.
fn wedge_area(x: &[f64; 2], deg: f64, w: &RectWindow) -> f64 {
    // Clip in coordinates centred on the focal point.
    let lo = [w.lo()[0] - x[0], w.lo()[1] - x[1]];
    let hi = [w.hi()[0] - x[0], w.hi()[1] - x[1]];
    let local = RectWindow::new(lo.to_vec(), hi.to_vec()).expect("translated window");
    let reach = (0..4)
        .map(|c| {
            let cx = if c & 1 == 1 { hi[0] } else { lo[0] };
            let cy = if c & 2 == 2 { hi[1] } else { lo[1] };
            cx.hypot(cy)
        })
        .fold(0.0, f64::max);
    // The triangle's far edge lies beyond the circumscribed disc.
    let r = reach / (0.5f64.to_radians()).cos() * (1.0 + 1e-9);
    let a0 = (deg - 0.5).to_radians();
    let a1 = (deg + 0.5).to_radians();
    let tri = vec![
        [0.0, 0.0],
        [r * a0.cos(), r * a0.sin()],
        [r * a1.cos(), r * a1.sin()],
    ];
    polygon_area(&clip_to_rect(tri, &local))
}

fn check_planar(p: &PointPattern) -> Result<()> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: p.dim(),
        });
    }
    Ok(())
}

pub fn sector_profile(p: &PointPattern, focal: usize) -> Result<SectorIntensityProfile> {
    check_planar(p)?;
    if p.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: p.len(),
        });
    }
    if focal >= p.len() {
        return Err(Error::param("focal", "index out of range"));
    }
    let x = [p.point(focal)[0], p.point(focal)[1]];
    let w = p.window();
    let mut counts = vec![0usize; SECTORS];
    for (j, y) in p.points().enumerate() {
        if j == focal {
            continue;
        }
        let (dx, dy) = (y[0] - x[0], y[1] - x[1]);
        if dx == 0.0 && dy == 0.0 {
            continue;
        }
        let deg = dy.atan2(dx).to_degrees().rem_euclid(360.0);
        let k = (deg.round() as usize) % 360;
        counts[k % SECTORS] += 1;
    }
    let mut eta = vec![0.0; SECTORS];
    let mut areas = vec![0.0; SECTORS];
    for i in 0..SECTORS {
        let a = wedge_area(&x, i as f64, w) + wedge_area(&x, i as f64 + 180.0, w);
        areas[i] = a;
        if counts[i] > 0 {
            eta[i] = counts[i] as f64 / a;
        }
    }
    Ok(SectorIntensityProfile {
        focal,
        point: x,
        eta,
        counts,
        areas,
    })
}

/// French Top Hat: 1 on `|t| < 1`, −½ on `1 < |t| < 3`, with the mean of
/// the adjacent values at the jumps so integer supports sum to zero.
pub fn french_top_hat(t: f64) -> f64 {
    let a = t.abs();
    if a < 1.0 {
        1.0
    } else if a == 1.0 {
        0.25
    } else if a < 3.0 {
        -0.5
    } else if a == 3.0 {
        -0.25
    } else {
        0.0
    }
}

/// `W(θ, b) = b⁻¹ Σ_i η(θ_i) ψ((θ_i − θ)/b)` with `η` extended
/// 180°-periodically; `theta` and `b` in degrees.
pub fn rosenberg_transform(eta: &[f64], theta: f64, b: f64) -> Result<f64> {
    if eta.len() != SECTORS {
        return Err(Error::param("eta", "profile must have 180 values"));
    }
    if !(b > 0.0) {
        return Err(Error::param("scale", "must be positive"));
    }
    let lo = (theta - 3.0 * b).floor() as i64;
    let hi = (theta + 3.0 * b).ceil() as i64;
    let mut s = 0.0;
    for i in lo..=hi {
        let psi = french_top_hat((i as f64 - theta) / b);
        if psi != 0.0 {
            s += eta[i.rem_euclid(SECTORS as i64) as usize] * psi;
        }
    }
    Ok(s / b)
}

/// [`rosenberg_transform`] at an integer angle for integer scales
/// `1..=bmax`, from nested window sums around `theta` grown one scale at a
/// time. Sums stay local to the wavelet support, so there is no
/// cancellation against the total mass of `η`.
fn integer_transforms(eta: &[f64], theta: i64, bmax: i64, out: &mut Vec<f64>) {
    let e = |d: i64| eta[(theta + d).rem_euclid(SECTORS as i64) as usize];
    out.clear();
    // Σ_{|d| < b} and Σ_{|d| < 3b}.
    let mut inner = e(0);
    let mut outer = e(-2) + e(-1) + e(0) + e(1) + e(2);
    for b in 1..=bmax {
        let edges = e(-b) + e(b);
        let rim = e(-3 * b) + e(3 * b);
        let ring = outer - inner - edges;
        out.push((inner + 0.25 * edges - 0.5 * ring - 0.25 * rim) / b as f64);
        inner += edges;
        for d in 3 * b..3 * b + 3 {
            outer += e(-d) + e(d);
        }
    }
}

/// Default scales: 1°, 2°, …, 45°.
pub fn default_rosenberg_scales() -> Vec<f64> {
    (1..=45).map(|b| b as f64).collect()
}

/// `P̄(θ) = mean_x m⁻¹ Σ_k W²(x, θ, b_k)` over focal points farther than
/// `border_margin` from the window boundary; grid in radians.
pub fn rosenberg_variance(
    p: &PointPattern,
    scales: &[f64],
    border_margin: Option<f64>,
) -> Result<SummaryCurve> {
    check_planar(p)?;
    if scales.is_empty() {
        return Err(Error::param("scales", "no scales given"));
    }
    if scales.iter().any(|&b| !(1.0..=45.0).contains(&b)) {
        return Err(Error::param("scales", "must lie in [1°, 45°]"));
    }
    let margin = border_margin.unwrap_or(0.1 * p.window().min_side());
    if !(margin >= 0.0) {
        return Err(Error::param("border_margin", "must be non-negative"));
    }
    let interior: Vec<usize> = (0..p.len())
        .filter(|&i| p.window().boundary_distance(p.point(i)) > margin)
        .collect();
    if interior.is_empty() {
        return Err(Error::InsufficientPoints { needed: 1, got: 0 });
    }
    let integer = scales.iter().all(|b| b.fract() == 0.0);
    let bmax = scales.iter().cloned().fold(0.0, f64::max) as i64;
    let per_point: Vec<Vec<f64>> = interior
        .par_iter()
        .map(|&i| -> Result<Vec<f64>> {
            let prof = sector_profile(p, i)?;
            let mut out = vec![0.0; SECTORS];
            let mut ladder = Vec::new();
            for (t, o) in out.iter_mut().enumerate() {
                if integer {
                    integer_transforms(&prof.eta, t as i64, bmax, &mut ladder);
                }
                let mut s = 0.0;
                for &b in scales {
                    let w = if integer {
                        ladder[b as usize - 1]
                    } else {
                        rosenberg_transform(&prof.eta, t as f64, b)?
                    };
                    s += w * w;
                }
                *o = s / scales.len() as f64;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let grid: Vec<f64> = (0..SECTORS).map(|k| (k as f64).to_radians()).collect();
    let mut curve = SummaryCurve::new("rosenberg_variance", grid)
        .with_param("scales_deg", scales.to_vec())
        .with_param("border_margin", margin)
        .with_param("focal_points", interior.len());
    for k in 0..SECTORS {
        let s: f64 = per_point.iter().map(|v| v[k]).sum();
        curve.values[k] = Some(s / interior.len() as f64);
        curve.counts[k] = interior.len();
    }
    Ok(curve)
}

/// Anisotropic Morlet wavelet with `A = diag(D, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Morlet {
    pub d: f64,
    pub k0: [f64; 2],
    /// Subtract the constant that makes the wavelet integrate to zero.
    pub adjusted: bool,
}

impl Default for Morlet {
    fn default() -> Self {
        Morlet {
            d: 0.1,
            k0: [0.0, 5.5],
            adjusted: true,
        }
    }
}

impl Morlet {
    fn correction(&self) -> f64 {
        if self.adjusted {
            let q = self.k0[0] * self.k0[0] / (self.d * self.d) + self.k0[1] * self.k0[1];
            (-0.5 * q).exp()
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> Complex<f64> {
        let norm = self.d.sqrt() / PI.sqrt();
        let env = (-0.5 * (self.d * self.d * x[0] * x[0] + x[1] * x[1])).exp();
        let ph = self.k0[0] * x[0] + self.k0[1] * x[1];
        let (s, c) = ph.sin_cos();
        Complex::new(norm * env * (c - self.correction()), norm * env * s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.d > 0.0) {
            return Err(Error::param("d", "must be positive"));
        }
        if self.k0[0].hypot(self.k0[1]) < 5.5 {
            return Err(Error::param("k0", "wave vector length must be at least 5.5"));
        }
        Ok(())
    }
}

/// Scale, angle and translation grids of the transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwtGrid {
    pub scales: Vec<f64>,
    /// Radians.
    pub angles: Vec<f64>,
    pub translations: Vec<[f64; 2]>,
    pub cell_area: f64,
}

impl CwtGrid {
    /// `m × m` cell centres over the window.
    pub fn translations(w: &RectWindow, m: usize) -> (Vec<[f64; 2]>, f64) {
        let (sx, sy) = (w.side(0) / m as f64, w.side(1) / m as f64);
        let mut out = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                out.push([
                    w.lo()[0] + (i as f64 + 0.5) * sx,
                    w.lo()[1] + (j as f64 + 0.5) * sy,
                ]);
            }
        }
        (out, sx * sy)
    }

    /// 32×32 translations, 16 log-spaced scales in `[0.02, 1]·edge`, 1°
    /// angles on `[0°, 180°)`.
    pub fn default_for(w: &RectWindow) -> Self {
        let edge = w.min_side();
        let scales = (0..16)
            .map(|k| edge * 0.02 * (50f64).powf(k as f64 / 15.0))
            .collect();
        let angles = (0..180).map(|k| (k as f64).to_radians()).collect();
        let (translations, cell_area) = Self::translations(w, 32);
        CwtGrid {
            scales,
            angles,
            translations,
            cell_area,
        }
    }

    fn validate(&self, w: &RectWindow) -> Result<()> {
        if self.scales.is_empty() || self.angles.is_empty() || self.translations.is_empty() {
            return Err(Error::param("grid", "scales, angles and translations must be non-empty"));
        }
        let edge = w.sides().into_iter().fold(0.0, f64::max);
        if self.scales.iter().any(|&a| !(a > 0.0 && a <= edge)) {
            return Err(Error::param("scales", "must lie in (0, window edge length]"));
        }
        if !(self.cell_area > 0.0) {
            return Err(Error::param("cell_area", "must be positive"));
        }
        Ok(())
    }
}

/// Coefficients `Ŝ(a, b, θ) = a⁻¹ Σ_x conj ψ(a⁻¹ R_{−θ}(x − b))`, indexed
/// `[(scale · angles + angle) · translations + b]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CwtField {
    pub grid: CwtGrid,
    pub wavelet: Morlet,
    pub coefficients: Vec<[f64; 2]>,
}

fn coefficient(p: &PointPattern, wavelet: &Morlet, a: f64, theta: f64, b: [f64; 2]) -> Complex<f64> {
    let (s, c) = theta.sin_cos();
    let mut acc = Complex::new(0.0, 0.0);
    for x in p.points() {
        let (dx, dy) = (x[0] - b[0], x[1] - b[1]);
        let u = [(c * dx + s * dy) / a, (-s * dx + c * dy) / a];
        acc += wavelet.eval(u).conj();
    }
    acc / a
}

fn cwt_rows(p: &PointPattern, grid: &CwtGrid, wavelet: &Morlet) -> Result<Vec<Vec<Complex<f64>>>> {
    check_planar(p)?;
    wavelet.validate()?;
    grid.validate(p.window())?;
    let na = grid.angles.len();
    Ok((0..grid.scales.len() * na)
        .into_par_iter()
        .map(|k| {
            let (a, theta) = (grid.scales[k / na], grid.angles[k % na]);
            grid.translations
                .iter()
                .map(|&b| coefficient(p, wavelet, a, theta, b))
                .collect()
        })
        .collect())
}

pub fn cwt(p: &PointPattern, grid: &CwtGrid, wavelet: &Morlet) -> Result<CwtField> {
    let rows = cwt_rows(p, grid, wavelet)?;
    Ok(CwtField {
        grid: grid.clone(),
        wavelet: *wavelet,
        coefficients: rows.into_iter().flatten().map(|z| [z.re, z.im]).collect(),
    })
}

fn energy_curve(grid: &CwtGrid, wavelet: &Morlet, nu: Vec<f64>) -> SummaryCurve2D {
    let na = grid.angles.len();
    let mut curve = SummaryCurve2D::new("scale_angle_energy", grid.angles.clone(), vec![], grid.scales.clone());
    curve.set_param("d", wavelet.d);
    curve.set_param("k0", wavelet.k0.to_vec());
    curve.set_param("adjusted", wavelet.adjusted);
    curve.set_param("translations", grid.translations.len());
    curve.set_param("cell_area", grid.cell_area);
    for (k, v) in nu.into_iter().enumerate() {
        let (s, a) = (k / na, k % na);
        let i = curve.index(a, 0, s);
        curve.values[i] = Some(v);
        curve.counts[i] = grid.translations.len();
    }
    curve
}

/// `ν(a, θ) = Σ_b |Ŝ(a, b, θ)|² · cell area`.
pub fn energy(field: &CwtField) -> SummaryCurve2D {
    let nb = field.grid.translations.len();
    let nu = field
        .coefficients
        .chunks(nb)
        .map(|row| row.iter().map(|z| z[0] * z[0] + z[1] * z[1]).sum::<f64>() * field.grid.cell_area)
        .collect();
    energy_curve(&field.grid, &field.wavelet, nu)
}

/// Energy density without storing the coefficients.
pub fn cwt_energy(p: &PointPattern, grid: &CwtGrid, wavelet: &Morlet) -> Result<SummaryCurve2D> {
    let rows = cwt_rows(p, grid, wavelet)?;
    let nu = rows
        .iter()
        .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.cell_area)
        .collect();
    Ok(energy_curve(grid, wavelet, nu))
}

/// Angle of the largest energy among scales not exceeding `max_scale`.
pub fn peak_angle(energy: &SummaryCurve2D, max_scale: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (a, &theta) in energy.angles.iter().enumerate() {
        for (k, &s) in energy.r.iter().enumerate() {
            if s > max_scale {
                continue;
            }
            if let Some(v) = energy.get(a, 0, k) {
                if best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, theta));
                }
            }
        }
    }
    best.map(|b| b.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::simulate::poisson;

    fn square() -> RectWindow {
        RectWindow::cube(2, -1.0, 1.0).unwrap()
    }

    #[test]
    fn profile_of_two_points() {
        let a = 30f64.to_radians();
        let p = PointPattern::new(&[vec![0.0, 0.0], vec![0.5 * a.cos(), 0.5 * a.sin()]], square()).unwrap();
        let prof = sector_profile(&p, 0).unwrap();
        for (i, e) in prof.eta.iter().enumerate() {
            assert_eq!(*e > 0.0, i == 30);
        }
        let total: f64 = prof.areas.iter().sum();
        assert!((total - 4.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn profile_counts_partition_the_other_points() {
        let p = poisson(80.0, &square(), &mut stream(1, 0));
        let prof = sector_profile(&p, 3).unwrap();
        let s: f64 = prof.eta.iter().zip(&prof.areas).map(|(e, a)| e * a).sum();
        assert!((s - (p.len() - 1) as f64).abs() < 1e-9);
        let q = PointPattern::new(&[vec![0.9, 0.9], vec![0.0, 0.0]], square()).unwrap();
        let prof = sector_profile(&q, 0).unwrap();
        let total: f64 = prof.areas.iter().sum();
        assert!((total - 4.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn constant_profile_has_zero_transform() {
        let eta = vec![3.0; SECTORS];
        for b in [1.0, 7.0, 45.0] {
            for t in [0.0, 17.0, 179.0] {
                assert!(rosenberg_transform(&eta, t, b).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integer_ladder_matches_the_general_transform() {
        let mut rng = stream(2, 0);
        use rand::Rng;
        let eta: Vec<f64> = (0..SECTORS).map(|_| rng.random::<f64>()).collect();
        let mut ladder = Vec::new();
        for t in [0, 1, 44, 90, 179] {
            integer_transforms(&eta, t, 45, &mut ladder);
            for b in 1..=45 {
                let d = rosenberg_transform(&eta, t as f64, b as f64).unwrap();
                assert!((ladder[b as usize - 1] - d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transform_peaks_at_a_single_sector() {
        let mut delta = vec![0.0; SECTORS];
        delta[40] = 1.0;
        let w: Vec<f64> = (0..SECTORS)
            .map(|t| rosenberg_transform(&delta, t as f64, 1.0).unwrap())
            .collect();
        let best = (0..SECTORS).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        assert_eq!(best, 40);
    }

    #[test]
    fn morlet_values_and_zero_integral() {
        let m = Morlet {
            d: 0.5,
            k0: [0.0, 2.0],
            adjusted: false,
        };
        assert!((m.eval([0.0, 0.0]).re - 0.5f64.sqrt() / PI.sqrt()).abs() < 1e-15);
        assert!(m.eval([10.0, 10.0]).norm() < 1e-20);
        let integrate = |w: &Morlet| {
            let h = 0.01;
            let mut s = Complex::new(0.0, 0.0);
            let mut x = -20.0;
            while x <= 20.0 {
                let mut y = -8.0;
                while y <= 8.0 {
                    s += w.eval([x, y]);
                    y += h;
                }
                x += h;
            }
            s * h * h
        };
        let raw = integrate(&m);
        // ∫ψ = √D/√π · 2π/D · exp(−|k₀|²/2) for k₀ along the second axis.
        let want = 0.5f64.sqrt() / PI.sqrt() * 2.0 * PI / 0.5 * (-2.0f64).exp();
        assert!((raw.re - want).abs() < 1e-6, "{} {want}", raw.re);
        let adj = integrate(&Morlet { adjusted: true, ..m });
        assert!(adj.norm() < 1e-6, "{adj}");
    }

    #[test]
    fn cwt_matches_pointwise_oracle_and_empty_pattern() {
        let p = poisson(20.0, &square(), &mut stream(3, 0));
        let (translations, cell_area) = CwtGrid::translations(&square(), 4);
        let grid = CwtGrid {
            scales: vec![0.1, 0.5],
            angles: vec![0.0, 1.0, 2.0],
            translations,
            cell_area,
        };
        let m = Morlet::default();
        let f = cwt(&p, &grid, &m).unwrap();
        let mut k = 0;
        for &a in &grid.scales {
            for &t in &grid.angles {
                for b in &grid.translations {
                    let mut s = Complex::new(0.0, 0.0);
                    for x in p.points() {
                        let d = [x[0] - b[0], x[1] - b[1]];
                        let u = [
                            (t.cos() * d[0] + t.sin() * d[1]) / a,
                            (-t.sin() * d[0] + t.cos() * d[1]) / a,
                        ];
                        s += m.eval(u).conj();
                    }
                    s /= a;
                    assert_eq!(f.coefficients[k], [s.re, s.im]);
                    k += 1;
                }
            }
        }
        let e = energy(&f);
        let e2 = cwt_energy(&p, &grid, &m).unwrap();
        assert_eq!(e.values, e2.values);
        let empty = PointPattern::empty(square());
        let z = cwt_energy(&empty, &grid, &m).unwrap();
        assert!(z.values.iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn rosenberg_variance_rotates_with_the_pattern() {
        let p = poisson(60.0, &square(), &mut stream(4, 0));
        let rot: Vec<Vec<f64>> = p.points().map(|x| vec![-x[1], x[0]]).collect();
        let q = PointPattern::new(&rot, square()).unwrap();
        let scales = [1.0, 3.0, 10.0];
        let a = rosenberg_variance(&p, &scales, None).unwrap();
        let b = rosenberg_variance(&q, &scales, None).unwrap();
        for k in 0..SECTORS {
            let want = a.value(k);
            let got = b.value((k + 90) % SECTORS);
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{k}: {got} {want}");
        }
    }
}
