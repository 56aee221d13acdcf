//! Naive direct-formula oracles shared by the integration tests. Every
//! oracle loops over ordered pairs or points explicitly and uses its own
//! kernels and geometry, independent of the library code paths.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use aniso_core::rng::stream;
use aniso_core::simulate::poisson;
use aniso_core::{PointPattern, RectWindow};

pub fn uniform_pattern(n: usize, window: &RectWindow, seed: u64) -> PointPattern {
    use rand::Rng;
    let mut rng = stream(seed, 7);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..window.dim())
                .map(|j| rng.random_range(window.lo()[j]..window.hi()[j]))
                .collect()
        })
        .collect();
    PointPattern::new(&pts, window.clone()).unwrap()
}

pub fn poisson_pattern(lambda: f64, window: &RectWindow, seed: u64) -> PointPattern {
    poisson(lambda, window, &mut stream(seed, 11))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn epan(t: f64, h: f64) -> f64 {
    let u = t / h;
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u) / h
    } else {
        0.0
    }
}

/// Shortest signed difference on a circle of circumference `period`.
pub fn circ(t: f64, period: f64) -> f64 {
    let mut d = t % period;
    if d > period / 2.0 {
        d -= period;
    }
    if d < -period / 2.0 {
        d += period;
    }
    d
}

fn diff(p: &PointPattern, i: usize, j: usize) -> Vec<f64> {
    p.point(j).iter().zip(p.point(i)).map(|(a, b)| a - b).collect()
}

fn len(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn angle0(v: &[f64]) -> f64 {
    let a = v[1].atan2(v[0]);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

fn boundary(w: &RectWindow, x: &[f64]) -> f64 {
    (0..w.dim())
        .map(|j| (x[j] - w.lo()[j]).min(w.hi()[j] - x[j]))
        .fold(f64::INFINITY, f64::min)
}

fn overlap(w: &RectWindow, d: &[f64]) -> f64 {
    (0..w.dim()).map(|j| (w.side(j) - d[j].abs()).max(0.0)).product()
}

fn lambda_sq(p: &PointPattern) -> f64 {
    let n = p.len() as f64;
    let v = p.window().volume();
    n * (n - 1.0) / (v * v)
}

// ---------------------------------------------------------------------------
// Nearest neighbours.

pub struct Nn {
    pub j: usize,
    pub d: f64,
    pub phi: f64,
    pub e: f64,
    pub v: Vec<f64>,
}

pub fn nearest(p: &PointPattern) -> Vec<Nn> {
    (0..p.len())
        .map(|i| {
            let mut best = (f64::INFINITY, 0);
            for j in 0..p.len() {
                if j != i {
                    let d = len(&diff(p, i, j));
                    if d < best.0 {
                        best = (d, j);
                    }
                }
            }
            let v = diff(p, i, best.1);
            Nn {
                j: best.1,
                d: best.0,
                phi: angle0(&v),
                e: boundary(p.window(), p.point(i)),
                v,
            }
        })
        .collect()
}

/// Planar NN orientation density with the Epanechnikov kernel.
pub fn nn_orientation(p: &PointPattern, h: f64, grid: &[f64]) -> Vec<f64> {
    let w = p.window();
    let terms: Vec<(f64, f64)> = nearest(p)
        .into_iter()
        .filter(|r| r.d < r.e)
        .map(|r| (r.phi, 1.0 / ((w.side(0) - 2.0 * r.d) * (w.side(1) - 2.0 * r.d))))
        .collect();
    let total: f64 = terms.iter().map(|t| t.1).sum();
    grid.iter()
        .map(|&a| terms.iter().map(|&(phi, wt)| wt * epan(circ(a - phi, TAU), h)).sum::<f64>() / total)
        .collect()
}

pub fn nn_directional(p: &PointPattern, r: f64, grid: &[f64]) -> Vec<f64> {
    let used: Vec<f64> = nearest(p)
        .into_iter()
        .filter(|q| q.d < r && q.e >= r)
        .map(|q| q.phi)
        .collect();
    grid.iter()
        .map(|&a| used.iter().filter(|&&phi| phi <= a).count() as f64 / used.len() as f64)
        .collect()
}

/// Axial angle between `v` and the planar direction `phi`.
fn axial(v: &[f64], phi: f64) -> f64 {
    let c = (v[0] * phi.cos() + v[1] * phi.sin()).abs() / len(v);
    c.min(1.0).acos()
}

pub fn g_global(p: &PointPattern, phi: f64, eps: f64, grid: &[f64]) -> Vec<f64> {
    let used: Vec<f64> = nearest(p)
        .into_iter()
        .filter(|q| axial(&q.v, phi) < eps && q.e >= q.d)
        .map(|q| q.d)
        .collect();
    grid.iter()
        .map(|&r| used.iter().filter(|&&d| d < r).count() as f64 / used.len() as f64)
        .collect()
}

/// Largest `|cos|` (coordinate 0) or `|sin|` (coordinate 1) over the arc
/// `[phi − eps, phi + eps]`.
fn arc_extent(phi: f64, eps: f64, j: usize) -> f64 {
    let f = |a: f64| if j == 0 { a.cos().abs() } else { a.sin().abs() };
    let peak = if j == 0 { 0.0 } else { PI / 2.0 };
    let lo = phi - eps;
    let hi = phi + eps;
    let k = ((lo - peak) / PI).ceil();
    if peak + k * PI <= hi {
        1.0
    } else {
        f(lo).max(f(hi))
    }
}

pub fn g_local(p: &PointPattern, phi: f64, eps: f64, grid: &[f64]) -> Vec<f64> {
    let w = p.window();
    let mut terms = Vec::new();
    for i in 0..p.len() {
        let mut best = f64::INFINITY;
        for j in 0..p.len() {
            if j == i {
                continue;
            }
            let v = diff(p, i, j);
            if axial(&v, phi) < eps {
                best = best.min(len(&v));
            }
        }
        if !best.is_finite() {
            continue;
        }
        let ex = [best * arc_extent(phi, eps, 0), best * arc_extent(phi, eps, 1)];
        let x = p.point(i);
        let inside = (0..2).all(|j| x[j] >= w.lo()[j] + ex[j] && x[j] <= w.hi()[j] - ex[j]);
        let sides = [w.side(0) - 2.0 * ex[0], w.side(1) - 2.0 * ex[1]];
        if inside && sides[0] > 0.0 && sides[1] > 0.0 {
            terms.push((best, 1.0 / (sides[0] * sides[1])));
        }
    }
    let total: f64 = terms.iter().map(|t| t.1).sum();
    grid.iter()
        .map(|&r| terms.iter().filter(|t| t.0 < r).map(|t| t.1).sum::<f64>() / total)
        .collect()
}

// ---------------------------------------------------------------------------
// Second order.

/// `Σ_{x≠y} 1(y − x ∈ S(u, ε, r)) / |W_x ∩ W_y|` for a planar double sector.
pub fn sector_sum(p: &PointPattern, phi: f64, eps: f64, r: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            if i == j {
                continue;
            }
            let v = diff(p, i, j);
            if len(&v) <= r && axial(&v, phi) < eps {
                s += 1.0 / overlap(p.window(), &v);
            }
        }
    }
    s
}

/// Same for the rectangle of half-length `r` and half-width `hc` along `phi`.
pub fn cylinder_sum(p: &PointPattern, phi: f64, r: f64, hc: f64) -> f64 {
    let u = [phi.cos(), phi.sin()];
    let mut s = 0.0;
    for i in 0..p.len() {
        for j in 0..p.len() {
            if i == j {
                continue;
            }
            let v = diff(p, i, j);
            let along = v[0] * u[0] + v[1] * u[1];
            let across = (-v[0] * u[1] + v[1] * u[0]).abs();
            if along.abs() <= r && across <= hc {
                s += 1.0 / overlap(p.window(), &v);
            }
        }
    }
    s
}

pub fn k_sector(p: &PointPattern, phi: f64, eps: f64, r: f64) -> f64 {
    sector_sum(p, phi, eps, r) / lambda_sq(p)
}

pub fn k_cylinder(p: &PointPattern, phi: f64, r: f64, hc: f64) -> f64 {
    cylinder_sum(p, phi, r, hc) / lambda_sq(p)
}

fn pair_loop(p: &PointPattern, mut f: impl FnMut(&[f64], f64)) {
    for i in 0..p.len() {
        for j in 0..p.len() {
            if i != j {
                let v = diff(p, i, j);
                let w = 1.0 / overlap(p.window(), &v);
                f(&v, w);
            }
        }
    }
}

pub fn pcf_iso(p: &PointPattern, r: f64, h: f64) -> f64 {
    let mut s = 0.0;
    pair_loop(p, |v, w| s += w * epan(len(v) - r, h));
    s / (TAU * r * lambda_sq(p))
}

/// One-sided cone of half-angle `eps` about `phi`.
pub fn pcf_cone(p: &PointPattern, phi: f64, eps: f64, r: f64, h: f64) -> f64 {
    let mut s = 0.0;
    pair_loop(p, |v, w| {
        let c = (v[0] * phi.cos() + v[1] * phi.sin()) / len(v);
        if c.clamp(-1.0, 1.0).acos() < eps {
            s += w * epan(len(v) - r, h);
        }
    });
    s / (2.0 * eps * r * lambda_sq(p))
}

pub fn pcf_cyl(p: &PointPattern, phi: f64, hc: f64, r: f64, h: f64) -> f64 {
    let u = [phi.cos(), phi.sin()];
    let mut s = 0.0;
    pair_loop(p, |v, w| {
        let along = v[0] * u[0] + v[1] * u[1];
        let across = (-v[0] * u[1] + v[1] * u[0]).abs();
        if across < hc {
            s += w * epan(along.abs() - r, h);
        }
    });
    s / (4.0 * hc * lambda_sq(p))
}

pub fn pcf_aniso(p: &PointPattern, phi: f64, r: f64, h: f64, ha: f64) -> f64 {
    let mut s = 0.0;
    pair_loop(p, |v, w| {
        let a = angle0(v);
        let ka = epan(circ(a - phi, TAU), ha) + epan(circ(a - phi - PI, TAU), ha);
        s += w * epan(len(v) - r, h) * ka;
    });
    s / (2.0 * r * lambda_sq(p))
}

// ---------------------------------------------------------------------------
// Spectral.

/// `|W|⁻¹ |Σ exp(−iωᵀ(x − lo))|²` at lattice index `(p1, p2)`.
pub fn periodogram_at(p: &PointPattern, p1: i64, p2: i64) -> f64 {
    let w = p.window();
    let om = [TAU * p1 as f64 / w.side(0), TAU * p2 as f64 / w.side(1)];
    let (mut re, mut im) = (0.0, 0.0);
    for x in p.points() {
        let t = om[0] * (x[0] - w.lo()[0]) + om[1] * (x[1] - w.lo()[1]);
        re += t.cos();
        im += t.sin();
    }
    (re * re + im * im) / w.volume()
}

// ---------------------------------------------------------------------------
// Wavelets.

/// Area of `{x + ρ(cos α, sin α) : a0 ≤ α ≤ a1}` inside the window, by
/// integrating `½ ρ(α)²` piecewise between the corner directions.
pub fn wedge_area(w: &RectWindow, x: &[f64], a0: f64, a1: f64) -> f64 {
    let mut cuts = vec![a0, a1];
    for c in 0..4 {
        let cx = if c & 1 == 1 { w.hi()[0] } else { w.lo()[0] };
        let cy = if c & 2 == 2 { w.hi()[1] } else { w.lo()[1] };
        let mut a = (cy - x[1]).atan2(cx - x[0]);
        while a < a0 {
            a += TAU;
        }
        while a - TAU >= a0 {
            a -= TAU;
        }
        if a > a0 && a < a1 {
            cuts.push(a);
        }
    }
    cuts.sort_by(f64::total_cmp);
    // Walls: outward normal angle and distance from x.
    let walls = [
        (0.0, w.hi()[0] - x[0]),
        (PI / 2.0, w.hi()[1] - x[1]),
        (PI, x[0] - w.lo()[0]),
        (1.5 * PI, x[1] - w.lo()[1]),
    ];
    let mut area = 0.0;
    for k in 0..cuts.len() - 1 {
        let (lo, hi) = (cuts[k], cuts[k + 1]);
        let mid = 0.5 * (lo + hi);
        let exit = |&(n, d): &(f64, f64)| {
            let c = (mid - n).cos();
            if c > 0.0 {
                d / c
            } else {
                f64::INFINITY
            }
        };
        let &(nrm, dist) = walls
            .iter()
            .min_by(|a, b| exit(a).total_cmp(&exit(b)))
            .unwrap();
        area += 0.5 * dist * dist * ((hi - nrm).tan() - (lo - nrm).tan());
    }
    area
}

pub fn top_hat(t: f64) -> f64 {
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

pub fn eta(p: &PointPattern, focal: usize) -> Vec<f64> {
    let x = p.point(focal);
    let mut counts = [0usize; 180];
    for j in 0..p.len() {
        if j == focal {
            continue;
        }
        let deg = angle0(&diff(p, focal, j)).to_degrees();
        counts[(deg.round() as usize % 360) % 180] += 1;
    }
    (0..180)
        .map(|i| {
            if counts[i] == 0 {
                return 0.0;
            }
            let area: f64 = [i as f64, i as f64 + 180.0]
                .iter()
                .map(|&c| wedge_area(p.window(), x, (c - 0.5).to_radians(), (c + 0.5).to_radians()))
                .sum();
            counts[i] as f64 / area
        })
        .collect()
}

pub fn rosenberg_w(eta: &[f64], theta: f64, b: f64) -> f64 {
    let mut s = 0.0;
    for (i, &e) in eta.iter().enumerate() {
        for m in -3..=3 {
            s += e * top_hat((i as f64 + 180.0 * m as f64 - theta) / b);
        }
    }
    s / b
}

pub fn rosenberg_pbar(p: &PointPattern, scales: &[f64], margin: f64) -> Vec<f64> {
    let focal: Vec<usize> = (0..p.len())
        .filter(|&i| boundary(p.window(), p.point(i)) > margin)
        .collect();
    let mut out = vec![0.0; 180];
    for &i in &focal {
        let e = eta(p, i);
        for (t, o) in out.iter_mut().enumerate() {
            let s: f64 = scales.iter().map(|&b| rosenberg_w(&e, t as f64, b).powi(2)).sum();
            *o += s / scales.len() as f64;
        }
    }
    out.iter().map(|v| v / focal.len() as f64).collect()
}

/// Morlet with `A = diag(d, 1)` and the admissibility correction.
pub fn morlet(x: [f64; 2], d: f64, k0: [f64; 2]) -> (f64, f64) {
    let c = d.sqrt() / PI.sqrt() * (-0.5 * (d * d * x[0] * x[0] + x[1] * x[1])).exp();
    let corr = (-0.5 * (k0[0] * k0[0] / (d * d) + k0[1] * k0[1])).exp();
    let ph = k0[0] * x[0] + k0[1] * x[1];
    (c * (ph.cos() - corr), c * ph.sin())
}

pub fn cwt_energy(
    p: &PointPattern,
    a: f64,
    theta: f64,
    translations: &[[f64; 2]],
    cell: f64,
    d: f64,
    k0: [f64; 2],
) -> f64 {
    let mut e = 0.0;
    for b in translations {
        let (mut re, mut im) = (0.0, 0.0);
        for x in p.points() {
            let v = [x[0] - b[0], x[1] - b[1]];
            let u = [
                (theta.cos() * v[0] + theta.sin() * v[1]) / a,
                (-theta.sin() * v[0] + theta.cos() * v[1]) / a,
            ];
            let (r, i) = morlet(u, d, k0);
            re += r;
            im -= i;
        }
        e += (re * re + im * im) / (a * a);
    }
    e * cell
}

// ---------------------------------------------------------------------------
// Library against oracle.

/// Largest deviation between a library curve and its oracle, relative to the
/// oracle's largest magnitude (absolute when the oracle vanishes).
pub fn curve_err(lib: &[f64], oracle: &[f64]) -> f64 {
    assert_eq!(lib.len(), oracle.len());
    let scale = oracle.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return lib.iter().map(|v| v.abs()).fold(0.0, f64::max);
    }
    lib.iter()
        .zip(oracle)
        .map(|(a, b)| {
            if a.is_nan() && b.is_nan() {
                0.0
            } else {
                (a - b).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn vals(c: &aniso_core::SummaryCurve) -> Vec<f64> {
    c.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
}

/// Every estimator against its oracle on one planar pattern; returns the
/// name and deviation of each comparison.
pub fn estimator_errors(p: &PointPattern) -> Vec<(&'static str, f64)> {
    use aniso_core::intensity::IntensityModel;
    use aniso_core::kernel::Kernel;
    use aniso_core::second_order::{self as so, AnisoPcfOptions, PcfOptions};
    use aniso_core::wavelet::{self, CwtGrid, Morlet};
    use aniso_core::{nn, spectral, CylinderSpec, Direction, DirectionalSet, SectorSpec};

    let side = p.window().min_side();
    let phi = 0.7;
    let dir = Direction::planar(phi);
    let mut out = Vec::new();

    let angles = nn::angle_grid(72, TAU);
    let h = PI / 8.0;
    let lib = nn::orientation_density(p, h, Kernel::Epanechnikov, &angles).unwrap();
    out.push(("nn_orientation_density", curve_err(&vals(&lib), &nn_orientation(p, h, &angles))));

    let r_nn = 0.2 * side;
    let lib = nn::directional_distribution(p, r_nn, &angles).unwrap();
    out.push(("nn_directional_distribution", curve_err(&vals(&lib), &nn_directional(p, r_nn, &angles))));

    let ranges: Vec<f64> = (1..=20).map(|k| 0.02 * side * k as f64).collect();
    let cone = SectorSpec::new(dir, PI / 4.0, None).unwrap();
    let lib = nn::g_global(p, &cone, &ranges).unwrap();
    out.push(("g_global", curve_err(&vals(&lib), &g_global(p, phi, PI / 4.0, &ranges))));
    let lib = nn::g_local(p, &cone, &ranges).unwrap();
    out.push(("g_local", curve_err(&vals(&lib), &g_local(p, phi, PI / 4.0, &ranges))));

    let eps = PI / 8.0;
    let sector = DirectionalSet::Sector(SectorSpec::new(dir, eps, Some(1.0)).unwrap());
    let lib = so::k_measure(p, &sector, &ranges, &IntensityModel::Stationary).unwrap();
    let or: Vec<f64> = ranges.iter().map(|&r| k_sector(p, phi, eps, r)).collect();
    out.push(("conical_k", curve_err(&vals(&lib), &or)));

    let hc = 0.03 * side;
    let cyl_ranges: Vec<f64> = ranges.iter().copied().filter(|&r| r > hc).collect();
    let cyl = DirectionalSet::Cylinder(CylinderSpec::new(dir, 1.0, hc).unwrap());
    let lib = so::k_measure(p, &cyl, &cyl_ranges, &IntensityModel::Stationary).unwrap();
    let or: Vec<f64> = cyl_ranges.iter().map(|&r| k_cylinder(p, phi, r, hc)).collect();
    out.push(("cylindrical_k", curve_err(&vals(&lib), &or)));

    let hr = 0.05 * side;
    let opts = PcfOptions {
        h_r: Some(hr),
        ..Default::default()
    };
    let lib = so::pcf_isotropic(p, &ranges, &opts).unwrap();
    let or: Vec<f64> = ranges.iter().map(|&r| pcf_iso(p, r, hr)).collect();
    out.push(("pcf_isotropic", curve_err(&vals(&lib), &or)));

    let lib = so::pcf_conical(p, &SectorSpec::new(dir, eps, None).unwrap(), &ranges, &opts).unwrap();
    let or: Vec<f64> = ranges.iter().map(|&r| pcf_cone(p, phi, eps, r, hr)).collect();
    out.push(("pcf_conical", curve_err(&vals(&lib), &or)));

    let lib = so::pcf_cylindrical(p, &dir, hc, &cyl_ranges, &opts).unwrap();
    let or: Vec<f64> = cyl_ranges.iter().map(|&r| pcf_cyl(p, phi, hc, r, hr)).collect();
    out.push(("pcf_cylindrical", curve_err(&vals(&lib), &or)));

    let ha = PI / 8.0;
    let pcf_angles: Vec<f64> = (0..12).map(|k| PI * k as f64 / 12.0).collect();
    let aopts = AnisoPcfOptions {
        h_r: Some(hr),
        h_a: ha,
        ..Default::default()
    };
    let lib = so::pcf_aniso(p, &pcf_angles, &[], &ranges, &aopts).unwrap();
    let mut libv = Vec::new();
    let mut or = Vec::new();
    for (a, &ang) in pcf_angles.iter().enumerate() {
        for (k, &r) in ranges.iter().enumerate() {
            libv.push(lib.get(a, 0, k).unwrap_or(f64::NAN));
            or.push(pcf_aniso(p, ang, r, hr, ha));
        }
    }
    out.push(("pcf_aniso", curve_err(&libv, &or)));

    let pmax = 8;
    let g = spectral::periodogram(p, pmax, false).unwrap();
    let (libv, or): (Vec<f64>, Vec<f64>) = g
        .indices()
        .map(|(p1, p2)| (g.get(p1, p2).unwrap(), periodogram_at(p, p1, p2)))
        .unzip();
    out.push(("periodogram", curve_err(&libv, &or)));

    let scales = [1.0, 2.5, 5.0, 12.0, 30.0];
    let lib = wavelet::rosenberg_variance(p, &scales, None).unwrap();
    out.push(("rosenberg_variance", curve_err(&vals(&lib), &rosenberg_pbar(p, &scales, 0.1 * side))));
    let int_scales = [1.0, 4.0, 9.0, 45.0];
    let lib = wavelet::rosenberg_variance(p, &int_scales, None).unwrap();
    out.push((
        "rosenberg_variance_integer_scales",
        curve_err(&vals(&lib), &rosenberg_pbar(p, &int_scales, 0.1 * side)),
    ));

    let mut grid = CwtGrid::default_for(p.window());
    grid.scales = vec![grid.scales[3], grid.scales[8]];
    grid.angles = (0..6).map(|k| PI * k as f64 / 6.0).collect();
    let (tr, cell) = CwtGrid::translations(p.window(), 6);
    grid.translations = tr;
    grid.cell_area = cell;
    let m = Morlet::default();
    let lib = wavelet::cwt_energy(p, &grid, &m).unwrap();
    let mut libv = Vec::new();
    let mut or = Vec::new();
    for (a, &th) in grid.angles.iter().enumerate() {
        for (k, &s) in grid.scales.iter().enumerate() {
            libv.push(lib.get(a, 0, k).unwrap());
            or.push(cwt_energy(p, s, th, &grid.translations, grid.cell_area, m.d, m.k0));
        }
    }
    out.push(("cwt_energy", curve_err(&libv, &or)));
    out
}

// ---------------------------------------------------------------------------
// Spatial (3D) second-order oracles, with the axis given as a unit vector.

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn split(v: &[f64], u: &[f64]) -> (f64, f64) {
    let s = dotv(v, u);
    let perp: Vec<f64> = v.iter().zip(u).map(|(a, b)| a - s * b).collect();
    (s, len(&perp))
}

pub fn k_sector_3d(p: &PointPattern, u: &[f64], eps: f64, r: f64) -> f64 {
    let mut s = 0.0;
    pair_loop(p, |v, w| {
        if len(v) <= r && (dotv(v, u).abs() / len(v)).min(1.0).acos() < eps {
            s += w;
        }
    });
    s / lambda_sq(p)
}

pub fn k_cylinder_3d(p: &PointPattern, u: &[f64], r: f64, hc: f64) -> f64 {
    let mut s = 0.0;
    pair_loop(p, |v, w| {
        let (a, d) = split(v, u);
        if a.abs() <= r && d <= hc {
            s += w;
        }
    });
    s / lambda_sq(p)
}

pub fn pcf_iso_3d(p: &PointPattern, r: f64, h: f64) -> f64 {
    let mut s = 0.0;
    pair_loop(p, |v, w| s += w * epan(len(v) - r, h));
    s / (4.0 * PI * r * r * lambda_sq(p))
}

pub fn pcf_cone_3d(p: &PointPattern, u: &[f64], eps: f64, r: f64, h: f64) -> f64 {
    let mut s = 0.0;
    pair_loop(p, |v, w| {
        if (dotv(v, u) / len(v)).clamp(-1.0, 1.0).acos() < eps {
            s += w * epan(len(v) - r, h);
        }
    });
    s / (2.0 * PI * r * r * (1.0 - eps.cos()) * lambda_sq(p))
}

pub fn pcf_cyl_3d(p: &PointPattern, u: &[f64], hc: f64, r: f64, h: f64) -> f64 {
    let mut s = 0.0;
    pair_loop(p, |v, w| {
        let (a, d) = split(v, u);
        if d < hc {
            s += w * epan(a.abs() - r, h);
        }
    });
    s / (2.0 * PI * hc * hc * lambda_sq(p))
}

pub fn pcf_aniso_3d(p: &PointPattern, phi: f64, theta: f64, r: f64, h: f64, ha: f64) -> f64 {
    let mut s = 0.0;
    pair_loop(p, |v, w| {
        let a = angle0(v);
        let t = (v[2] / len(v)).clamp(-1.0, 1.0).acos();
        let ka = epan(circ(a - phi, TAU), ha) * epan(t - theta, ha)
            + epan(circ(a - phi - PI, TAU), ha) * epan(t - (PI - theta), ha);
        s += w * epan(len(v) - r, h) * ka;
    });
    s / (2.0 * r * r * theta.sin() * lambda_sq(p))
}

/// Spatial counterpart of [`estimator_errors`] for the second-order
/// estimators.
pub fn estimator_errors_3d(p: &PointPattern) -> Vec<(&'static str, f64)> {
    use aniso_core::intensity::IntensityModel;
    use aniso_core::second_order::{self as so, AnisoPcfOptions, PcfOptions};
    use aniso_core::{CylinderSpec, Direction, DirectionalSet, SectorSpec};

    let side = p.window().min_side();
    let raw = [0.3, -0.5, 0.8];
    let n = len(&raw);
    let u: Vec<f64> = raw.iter().map(|x| x / n).collect();
    let dir = Direction::from_vector(&u).unwrap();
    let u: Vec<f64> = dir.as_slice().to_vec();
    let ranges: Vec<f64> = (1..=12).map(|k| 0.04 * side * k as f64).collect();
    let mut out = Vec::new();

    let eps = PI / 6.0;
    let sector = DirectionalSet::Sector(SectorSpec::new(dir, eps, Some(1.0)).unwrap());
    let lib = so::k_measure(p, &sector, &ranges, &IntensityModel::Stationary).unwrap();
    let or: Vec<f64> = ranges.iter().map(|&r| k_sector_3d(p, &u, eps, r)).collect();
    out.push(("conical_k_3d", curve_err(&vals(&lib), &or)));

    let hc = 0.03 * side;
    let cyl_ranges: Vec<f64> = ranges.iter().copied().filter(|&r| r > hc).collect();
    let cyl = DirectionalSet::Cylinder(CylinderSpec::new(dir, 1.0, hc).unwrap());
    let lib = so::k_measure(p, &cyl, &cyl_ranges, &IntensityModel::Stationary).unwrap();
    let or: Vec<f64> = cyl_ranges.iter().map(|&r| k_cylinder_3d(p, &u, r, hc)).collect();
    out.push(("cylindrical_k_3d", curve_err(&vals(&lib), &or)));

    let hr = 0.06 * side;
    let opts = PcfOptions {
        h_r: Some(hr),
        ..Default::default()
    };
    let lib = so::pcf_isotropic(p, &ranges, &opts).unwrap();
    let or: Vec<f64> = ranges.iter().map(|&r| pcf_iso_3d(p, r, hr)).collect();
    out.push(("pcf_isotropic_3d", curve_err(&vals(&lib), &or)));

    let lib = so::pcf_conical(p, &SectorSpec::new(dir, eps, None).unwrap(), &ranges, &opts).unwrap();
    let or: Vec<f64> = ranges.iter().map(|&r| pcf_cone_3d(p, &u, eps, r, hr)).collect();
    out.push(("pcf_conical_3d", curve_err(&vals(&lib), &or)));

    let lib = so::pcf_cylindrical(p, &dir, hc, &cyl_ranges, &opts).unwrap();
    let or: Vec<f64> = cyl_ranges.iter().map(|&r| pcf_cyl_3d(p, &u, hc, r, hr)).collect();
    out.push(("pcf_cylindrical_3d", curve_err(&vals(&lib), &or)));

    let ha = PI / 6.0;
    let phis: Vec<f64> = (0..6).map(|k| TAU * k as f64 / 6.0).collect();
    let thetas = [PI / 4.0, PI / 2.0, 2.0 * PI / 3.0];
    let aopts = AnisoPcfOptions {
        h_r: Some(hr),
        h_a: ha,
        ..Default::default()
    };
    let lib = so::pcf_aniso(p, &phis, &thetas, &ranges, &aopts).unwrap();
    let mut libv = Vec::new();
    let mut or = Vec::new();
    for (a, &phi) in phis.iter().enumerate() {
        for (t, &theta) in thetas.iter().enumerate() {
            for (k, &r) in ranges.iter().enumerate() {
                libv.push(lib.get(a, t, k).unwrap_or(f64::NAN));
                or.push(pcf_aniso_3d(p, phi, theta, r, hr, ha));
            }
        }
    }
    out.push(("pcf_aniso_3d", curve_err(&libv, &or)));
    out
}
