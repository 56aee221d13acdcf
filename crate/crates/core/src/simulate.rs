//! Point process simulators and linear transforms of patterns.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{apply, determinant, invert, norm, RectWindow, Vec3, GEOM_TOL};
use crate::pattern::PointPattern;
use crate::rng::{stream, Rng};

pub type Matrix3 = [[f64; 3]; 3];

/// `T = R C` with `R` a rotation and `C` a positive diagonal scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricTransform {
    dim: usize,
    rotation: Matrix3,
    scaling: Vec3,
}

impl GeometricTransform {
    pub fn identity(dim: usize) -> Self {
        GeometricTransform {
            dim,
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            scaling: [1.0; 3],
        }
    }

    /// Planar transform: scale by `scale`, then rotate anti-clockwise by `angle`.
    pub fn planar(angle: f64, scale: [f64; 2]) -> Result<Self> {
        check_scale(&scale)?;
        let (s, c) = angle.sin_cos();
        Ok(GeometricTransform {
            dim: 2,
            rotation: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            scaling: [scale[0], scale[1], 1.0],
        })
    }

    /// Spatial transform: scale, then rotate by `angle` about `axis`.
    pub fn spatial(axis: [f64; 3], angle: f64, scale: [f64; 3]) -> Result<Self> {
        check_scale(&scale)?;
        let n = norm(&axis);
        if !(n > 0.0) {
            return Err(Error::param("axis", "rotation axis must be non-zero"));
        }
        let k = [axis[0] / n, axis[1] / n, axis[2] / n];
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let rotation = [
            [
                c + k[0] * k[0] * t,
                k[0] * k[1] * t - k[2] * s,
                k[0] * k[2] * t + k[1] * s,
            ],
            [
                k[1] * k[0] * t + k[2] * s,
                c + k[1] * k[1] * t,
                k[1] * k[2] * t - k[0] * s,
            ],
            [
                k[2] * k[0] * t - k[1] * s,
                k[2] * k[1] * t + k[0] * s,
                c + k[2] * k[2] * t,
            ],
        ];
        Ok(GeometricTransform {
            dim: 3,
            rotation,
            scaling: scale,
        })
    }

    /// Pure diagonal scaling.
    pub fn scaling(scale: &[f64]) -> Result<Self> {
        check_scale(scale)?;
        let mut t = Self::identity(scale.len());
        t.scaling[..scale.len()].copy_from_slice(scale);
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> Matrix3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.rotation[i][j] * self.scaling[j];
            }
        }
        if self.dim == 2 {
            m[2] = [0.0, 0.0, 1.0];
            m[0][2] = 0.0;
            m[1][2] = 0.0;
        }
        m
    }

    pub fn inverse_matrix(&self) -> Matrix3 {
        invert(&self.matrix(), self.dim).expect("scaling entries are positive")
    }

    pub fn determinant(&self) -> f64 {
        determinant(&self.matrix(), self.dim)
    }

    /// True when `T` maps axis-aligned boxes onto axis-aligned boxes.
    pub fn is_axis_aligned(&self) -> bool {
        let m = self.matrix();
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || m[i][j].abs() <= GEOM_TOL))
    }
}

fn check_scale(scale: &[f64]) -> Result<()> {
    if scale.len() != 2 && scale.len() != 3 {
        return Err(Error::param("scale", "must have 2 or 3 entries"));
    }
    if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::param("scale", "entries must be positive"));
    }
    Ok(())
}

fn map_point(m: &Matrix3, x: &[f64], out: &mut Vec<f64>) {
    let mut v = [0.0; 3];
    v[..x.len()].copy_from_slice(x);
    let y = apply(m, &v);
    out.extend_from_slice(&y[..x.len()]);
}

/// Bounding box of the image `T W`.
pub fn transform_window(w: &RectWindow, t: &GeometricTransform) -> Result<RectWindow> {
    let dim = w.dim();
    let m = t.matrix();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for corner in 0..(1usize << dim) {
        let x: Vec<f64> = (0..dim)
            .map(|j| if corner >> j & 1 == 1 { w.hi()[j] } else { w.lo()[j] })
            .collect();
        let mut y = Vec::with_capacity(dim);
        map_point(&m, &x, &mut y);
        for j in 0..dim {
            lo[j] = lo[j].min(y[j]);
            hi[j] = hi[j].max(y[j]);
        }
    }
    RectWindow::new(lo, hi)
}

/// Map every point and the window by `T`. A rotated window is replaced by
/// its bounding box and the pattern is flagged accordingly.
pub fn apply_transform(p: &PointPattern, t: &GeometricTransform) -> Result<PointPattern> {
    if t.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: t.dim(),
        });
    }
    let m = t.matrix();
    let mut coords = Vec::with_capacity(p.coords().len());
    for x in p.points() {
        map_point(&m, x, &mut coords);
    }
    let window = transform_window(p.window(), t)?;
    // Clamp round-off at the box faces.
    let dim = p.dim();
    for (k, c) in coords.iter_mut().enumerate() {
        let j = k % dim;
        *c = c.clamp(window.lo()[j], window.hi()[j]);
    }
    let mut out = PointPattern::from_flat_unchecked(dim, coords, window);
    out.set_window_is_bounding_box(!t.is_axis_aligned() || p.window_is_bounding_box());
    Ok(out)
}

/// Largest axis-aligned rectangle inside the parallelogram `T W` (planar).
pub fn inscribed_window(w: &RectWindow, t: &GeometricTransform) -> Result<RectWindow> {
    if t.is_axis_aligned() {
        return transform_window(w, t);
    }
    if w.dim() != 2 {
        return Err(Error::param(
            "transform",
            "inscribed rectangles are only available for planar rotations",
        ));
    }
    // TW = {c + x : |(T⁻¹x)_j| <= h_j}; a centred rectangle with half-sides
    // (a, b) fits iff |m_j0| a + |m_j1| b <= h_j for both rows of T⁻¹.
    let inv = t.inverse_matrix();
    let m = t.matrix();
    let c0 = w.center();
    let mut c = Vec::new();
    map_point(&m, &c0, &mut c);
    let h = [w.side(0) / 2.0, w.side(1) / 2.0];
    let rows = [
        [inv[0][0].abs(), inv[0][1].abs(), h[0]],
        [inv[1][0].abs(), inv[1][1].abs(), h[1]],
    ];
    let feasible = |a: f64, b: f64| {
        rows.iter()
            .all(|r| r[0] * a + r[1] * b <= r[2] * (1.0 + 1e-12))
    };
    let mut best = (0.0, 0.0);
    let mut consider = |a: f64, b: f64| {
        if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && feasible(a, b) && a * b > best.0 * best.1 {
            best = (a, b);
        }
    };
    for r in &rows {
        consider(r[2] / (2.0 * r[0]), r[2] / (2.0 * r[1]));
    }
    let det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
    if det.abs() > 0.0 {
        let a = (rows[0][2] * rows[1][1] - rows[0][1] * rows[1][2]) / det;
        let b = (rows[0][0] * rows[1][2] - rows[0][2] * rows[1][0]) / det;
        consider(a, b);
    }
    if best.0 == 0.0 {
        return Err(Error::Numerical("no inscribed rectangle found".into()));
    }
    RectWindow::new(
        vec![c[0] - best.0, c[1] - best.1],
        vec![c[0] + best.0, c[1] + best.1],
    )
}

/// A straight line through `anchor`, given by a planar `angle` or a
/// `direction` vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeLine {
    pub anchor: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
}

impl StripeLine {
    pub fn planar(anchor: [f64; 2], angle: f64) -> Self {
        StripeLine {
            anchor: anchor.to_vec(),
            angle: Some(angle),
            direction: None,
        }
    }

    fn unit_direction(&self, dim: usize) -> Result<Vec3> {
        if self.anchor.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.anchor.len(),
            });
        }
        let v = match (&self.direction, self.angle) {
            (Some(d), _) => {
                if d.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: d.len(),
                    });
                }
                crate::geometry::to_vec3(d)
            }
            (None, Some(a)) if dim == 2 => [a.cos(), a.sin(), 0.0],
            _ => {
                return Err(Error::param(
                    "lines",
                    "each line needs a direction vector (or an angle in 2D)",
                ))
            }
        };
        let n = norm(&v);
        if !(n > 0.0) {
            return Err(Error::param("lines", "line direction must be non-zero"));
        }
        Ok([v[0] / n, v[1] / n, v[2] / n])
    }
}

/// Point process models that can be simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Poisson {
        lambda: f64,
    },
    Strauss {
        beta: f64,
        gamma: f64,
        r: f64,
        #[serde(default)]
        mcmc_steps: Option<usize>,
    },
    MaternII {
        lambda_prop: f64,
        hardcore: f64,
    },
    /// Parents at rate `kappa`, each with Poisson(`mu`) Gaussian offspring.
    Thomas {
        kappa: f64,
        mu: f64,
        covariance: Vec<Vec<f64>>,
    },
    /// Poisson background plus Gaussian stripes along lines.
    LineStripes {
        lambda_bg: f64,
        lines: Vec<StripeLine>,
        amplitude: f64,
        sigma: f64,
    },
}

pub const DEFAULT_MCMC_STEPS: usize = 100_000;

impl ModelSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        match self {
            ModelSpec::Poisson { lambda } => pos("lambda", *lambda),
            ModelSpec::Strauss { beta, gamma, r, .. } => {
                pos("beta", *beta)?;
                pos("r", *r)?;
                if !(0.0..=1.0).contains(gamma) {
                    return Err(Error::param("gamma", format!("must lie in [0, 1], got {gamma}")));
                }
                Ok(())
            }
            ModelSpec::MaternII {
                lambda_prop,
                hardcore,
            } => {
                pos("lambda_prop", *lambda_prop)?;
                pos("hardcore", *hardcore)
            }
            ModelSpec::Thomas {
                kappa,
                mu,
                covariance,
            } => {
                pos("kappa", *kappa)?;
                pos("mu", *mu)?;
                cholesky(covariance, dim).map(|_| ())
            }
            ModelSpec::LineStripes {
                lambda_bg,
                lines,
                amplitude,
                sigma,
            } => {
                if !(*lambda_bg >= 0.0) {
                    return Err(Error::param("lambda_bg", "must be non-negative"));
                }
                pos("amplitude", *amplitude)?;
                pos("sigma", *sigma)?;
                for l in lines {
                    l.unit_direction(dim)?;
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Poisson { .. } => "poisson",
            ModelSpec::Strauss { .. } => "strauss",
            ModelSpec::MaternII { .. } => "matern_ii",
            ModelSpec::Thomas { .. } => "thomas",
            ModelSpec::LineStripes { .. } => "line_stripes",
        }
    }
}

/// A simulated pattern with sampler diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub pattern: PointPattern,
    pub mcmc_steps: Option<usize>,
    pub acceptance_rate: Option<f64>,
    pub warnings: Vec<String>,
}

/// Simulate `spec` in `window` from the stream keyed by `seed`.
pub fn simulate(spec: &ModelSpec, window: &RectWindow, seed: u64) -> Result<Simulation> {
    simulate_with(spec, window, &mut stream(seed, 0))
}

pub fn simulate_with(spec: &ModelSpec, window: &RectWindow, rng: &mut Rng) -> Result<Simulation> {
    let dim = window.dim();
    spec.validate(dim)?;
    let mut sim = Simulation {
        pattern: PointPattern::empty(window.clone()),
        mcmc_steps: None,
        acceptance_rate: None,
        warnings: Vec::new(),
    };
    match spec {
        ModelSpec::Poisson { lambda } => {
            sim.pattern = poisson(*lambda, window, rng);
        }
        ModelSpec::Strauss {
            beta,
            gamma,
            r,
            mcmc_steps,
        } => {
            let steps = mcmc_steps.unwrap_or(DEFAULT_MCMC_STEPS);
            let expected = beta * window.volume();
            if (steps as f64) < 10.0 * expected {
                sim.warnings.push(format!(
                    "mcmc_steps = {steps} is below 10 times the expected point count ({expected:.0}); the chain may not have converged"
                ));
            }
            let (p, rate) = strauss(*beta, *gamma, *r, steps, window, rng);
            sim.pattern = p;
            sim.mcmc_steps = Some(steps);
            sim.acceptance_rate = Some(rate);
        }
        ModelSpec::MaternII {
            lambda_prop,
            hardcore,
        } => {
            sim.pattern = matern_ii(*lambda_prop, *hardcore, window, rng);
        }
        ModelSpec::Thomas {
            kappa,
            mu,
            covariance,
        } => {
            let l = cholesky(covariance, dim)?;
            sim.pattern = thomas(*kappa, *mu, &l, covariance, window, rng);
        }
        ModelSpec::LineStripes {
            lambda_bg,
            lines,
            amplitude,
            sigma,
        } => {
            sim.pattern = line_stripes(*lambda_bg, lines, *amplitude, *sigma, window, rng)?;
        }
    }
    Ok(sim)
}

fn poisson_count(mean: f64, rng: &mut Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    let k: f64 = d.sample(rng);
    k as usize
}

fn uniform_point(window: &RectWindow, rng: &mut Rng, out: &mut Vec<f64>) {
    for j in 0..window.dim() {
        let u: f64 = rng.random();
        out.push(window.lo()[j] + u * window.side(j));
    }
}

pub fn poisson(lambda: f64, window: &RectWindow, rng: &mut Rng) -> PointPattern {
    let n = poisson_count(lambda * window.volume(), rng);
    let mut coords = Vec::with_capacity(n * window.dim());
    for _ in 0..n {
        uniform_point(window, rng, &mut coords);
    }
    PointPattern::from_flat_unchecked(window.dim(), coords, window.clone())
}

/// Cell grid over a window supporting insertion, removal and range counts.
struct DynamicGrid {
    dim: usize,
    lo: Vec3,
    cell: f64,
    ncell: [usize; 3],
    cells: Vec<Vec<usize>>,
    /// `(cell, slot)` of each point.
    slots: Vec<(usize, usize)>,
    coords: Vec<f64>,
}

impl DynamicGrid {
    fn new(window: &RectWindow, r: f64) -> Self {
        let dim = window.dim();
        let mut ncell = [1usize; 3];
        let mut lo = [0.0; 3];
        // Cap the grid size; larger cells are still correct.
        let mut cell = r;
        loop {
            let total: f64 = (0..dim).map(|j| (window.side(j) / cell).floor().max(1.0)).product();
            if total <= 4e6 {
                break;
            }
            cell *= 2.0;
        }
        for j in 0..dim {
            ncell[j] = ((window.side(j) / cell).floor() as usize).max(1);
            lo[j] = window.lo()[j];
        }
        // Cells are at least `r` wide: side / floor(side / r) >= r.
        let cell_w: Vec<f64> = (0..dim).map(|j| window.side(j) / ncell[j] as f64).collect();
        let cell = cell_w.iter().copied().fold(f64::INFINITY, f64::min);
        DynamicGrid {
            dim,
            lo,
            cell,
            ncell,
            cells: vec![Vec::new(); ncell[0] * ncell[1] * ncell[2]],
            slots: Vec::new(),
            coords: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.slots.len()
    }

    fn cell_coords(&self, x: &[f64]) -> [usize; 3] {
        let mut c = [0usize; 3];
        for j in 0..self.dim {
            let k = ((x[j] - self.lo[j]) / self.cell).floor();
            c[j] = if k <= 0.0 {
                0
            } else {
                (k as usize).min(self.ncell[j] - 1)
            };
        }
        c
    }

    fn cell_index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.ncell[1] + c[1]) * self.ncell[0] + c[0]
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn insert(&mut self, x: &[f64]) {
        let i = self.len();
        let c = self.cell_index(self.cell_coords(x));
        self.coords.extend_from_slice(x);
        self.slots.push((c, self.cells[c].len()));
        self.cells[c].push(i);
    }

    fn remove(&mut self, i: usize) {
        let (c, s) = self.slots[i];
        self.cells[c].swap_remove(s);
        if s < self.cells[c].len() {
            let moved = self.cells[c][s];
            self.slots[moved].1 = s;
        }
        let last = self.len() - 1;
        if i != last {
            let (lc, ls) = self.slots[last];
            self.cells[lc][ls] = i;
            self.slots[i] = (lc, ls);
            let dim = self.dim;
            self.coords.copy_within(last * dim..(last + 1) * dim, i * dim);
        }
        self.slots.pop();
        self.coords.truncate(last * self.dim);
    }

    /// Number of points within distance `r` of `x`, skipping `skip`.
    /// Cells are at least `r` wide, so the 3^d block around `x` suffices.
    fn count_within(&self, x: &[f64], r: f64, skip: Option<usize>) -> usize {
        let c = self.cell_coords(x);
        let r2 = r * r;
        let range = |j: usize| -> (usize, usize) {
            if j < self.dim {
                (c[j].saturating_sub(1), (c[j] + 1).min(self.ncell[j] - 1))
            } else {
                (0, 0)
            }
        };
        let (x0, x1) = range(0);
        let (y0, y1) = range(1);
        let (z0, z1) = range(2);
        let mut count = 0;
        for cz in z0..=z1 {
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    for &j in &self.cells[self.cell_index([cx, cy, cz])] {
                        if Some(j) == skip {
                            continue;
                        }
                        let y = self.point(j);
                        let d2: f64 = (0..self.dim).map(|k| (x[k] - y[k]).powi(2)).sum();
                        if d2 <= r2 {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }
}

/// Birth/death/move Metropolis–Hastings for the Strauss process, started
/// from a Poisson(β) pattern. Returns the final state and the acceptance rate.
pub fn strauss(
    beta: f64,
    gamma: f64,
    r: f64,
    steps: usize,
    window: &RectWindow,
    rng: &mut Rng,
) -> (PointPattern, f64) {
    let dim = window.dim();
    let vol = window.volume();
    let mut grid = DynamicGrid::new(window, r);
    let start = poisson(beta, window, rng);
    for x in start.points() {
        grid.insert(x);
    }
    let pow = |t: usize| if t == 0 { 1.0 } else { gamma.powi(t as i32) };
    let mut accepted = 0usize;
    let mut proposal = Vec::with_capacity(dim);
    for _ in 0..steps {
        let kind: f64 = rng.random();
        let n = grid.len();
        if kind < 1.0 / 3.0 {
            proposal.clear();
            uniform_point(window, rng, &mut proposal);
            let t = grid.count_within(&proposal, r, None);
            let ratio = beta * pow(t) * vol / (n as f64 + 1.0);
            if rng.random::<f64>() < ratio {
                grid.insert(&proposal);
                accepted += 1;
            }
        } else if kind < 2.0 / 3.0 {
            if n == 0 {
                continue;
            }
            let i = rng.random_range(0..n);
            let t = grid.count_within(grid.point(i), r, Some(i));
            let lam = beta * pow(t);
            // Accept with probability min(1, n / (|W| λ*)).
            if rng.random::<f64>() * vol * lam < n as f64 {
                grid.remove(i);
                accepted += 1;
            }
        } else {
            if n == 0 {
                continue;
            }
            let i = rng.random_range(0..n);
            proposal.clear();
            uniform_point(window, rng, &mut proposal);
            let t_old = grid.count_within(grid.point(i), r, Some(i));
            let t_new = grid.count_within(&proposal, r, Some(i));
            let ratio = if t_new <= t_old {
                1.0
            } else {
                pow(t_new - t_old)
            };
            if rng.random::<f64>() < ratio {
                grid.remove(i);
                grid.insert(&proposal);
                accepted += 1;
            }
        }
    }
    let rate = if steps == 0 {
        0.0
    } else {
        accepted as f64 / steps as f64
    };
    let p = PointPattern::from_flat_unchecked(dim, grid.coords, window.clone());
    (p, rate)
}

fn expand(window: &RectWindow, by: f64) -> RectWindow {
    let lo = window.lo().iter().map(|v| v - by).collect();
    let hi = window.hi().iter().map(|v| v + by).collect();
    RectWindow::new(lo, hi).expect("expanded window is valid")
}

/// Matérn type II hard-core process: dependent thinning of Poisson
/// proposals by uniform marks, simulated on a window enlarged by the
/// hard-core distance.
pub fn matern_ii(lambda_prop: f64, hardcore: f64, window: &RectWindow, rng: &mut Rng) -> PointPattern {
    let dim = window.dim();
    let big = expand(window, hardcore);
    let proposals = poisson(lambda_prop, &big, rng);
    let marks: Vec<f64> = (0..proposals.len()).map(|_| rng.random()).collect();
    let index = crate::index::GridIndex::new(&proposals, hardcore);
    let mut coords = Vec::new();
    let mut buf = Vec::new();
    for i in 0..proposals.len() {
        let x = proposals.point(i);
        if !window.contains(x) {
            continue;
        }
        index.neighbours_within(i, hardcore, &mut buf);
        if buf.iter().all(|&(j, _, _)| marks[j] > marks[i]) {
            coords.extend_from_slice(x);
        }
    }
    PointPattern::from_flat_unchecked(dim, coords, window.clone())
}

/// Lower Cholesky factor of a `dim × dim` covariance.
fn cholesky(cov: &[Vec<f64>], dim: usize) -> Result<Matrix3> {
    if cov.len() != dim || cov.iter().any(|r| r.len() != dim) {
        return Err(Error::param("covariance", format!("must be {dim}x{dim}")));
    }
    for i in 0..dim {
        for j in 0..dim {
            if (cov[i][j] - cov[j][i]).abs() > 1e-12 * (1.0 + cov[i][j].abs()) {
                return Err(Error::param("covariance", "must be symmetric"));
            }
        }
    }
    let mut l = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = cov[i][i] - s;
                if !(d > 0.0) {
                    return Err(Error::param("covariance", "must be positive definite"));
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (cov[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

pub fn thomas(
    kappa: f64,
    mu: f64,
    chol: &Matrix3,
    cov: &[Vec<f64>],
    window: &RectWindow,
    rng: &mut Rng,
) -> PointPattern {
    let dim = window.dim();
    // sqrt(trace) bounds the largest marginal standard deviation.
    let max_std = (0..dim).map(|j| cov[j][j]).sum::<f64>().sqrt();
    let parents = poisson(kappa, &expand(window, 4.0 * max_std), rng);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut coords = Vec::new();
    for p in parents.points() {
        let m = poisson_count(mu, rng);
        for _ in 0..m {
            let mut z = [0.0; 3];
            for v in z.iter_mut().take(dim) {
                *v = normal.sample(rng);
            }
            let off = apply(chol, &z);
            let x: Vec<f64> = (0..dim).map(|j| p[j] + off[j]).collect();
            if window.contains(&x) {
                coords.extend_from_slice(&x);
            }
        }
    }
    PointPattern::from_flat_unchecked(dim, coords, window.clone())
}

/// Poisson background plus, for every line, an inhomogeneous Poisson
/// process of intensity `amplitude · N(dist; 0, σ²)` in the distance to the
/// line. Each stripe is generated by thinning a homogeneous process on a
/// tube of radius 6σ around the line.
pub fn line_stripes(
    lambda_bg: f64,
    lines: &[StripeLine],
    amplitude: f64,
    sigma: f64,
    window: &RectWindow,
    rng: &mut Rng,
) -> Result<PointPattern> {
    let dim = window.dim();
    let mut coords = if lambda_bg > 0.0 {
        poisson(lambda_bg, window, rng).coords().to_vec()
    } else {
        Vec::new()
    };
    let tube = 6.0 * sigma;
    let peak = amplitude / (sigma * (2.0 * PI).sqrt());
    let corners: Vec<Vec<f64>> = (0..(1usize << dim))
        .map(|c| {
            (0..dim)
                .map(|j| if c >> j & 1 == 1 { window.hi()[j] } else { window.lo()[j] })
                .collect()
        })
        .collect();
    for line in lines {
        let u = line.unit_direction(dim)?;
        let a = &line.anchor;
        // Line parameter range covering the window.
        let half = corners
            .iter()
            .map(|c| norm(&crate::geometry::sub(c, a)))
            .fold(0.0, f64::max)
            + tube;
        let (e1, e2) = perpendicular_basis(&u, dim);
        let cross = if dim == 2 { 2.0 * tube } else { PI * tube * tube };
        let n = poisson_count(peak * 2.0 * half * cross, rng);
        for _ in 0..n {
            let t = (rng.random::<f64>() * 2.0 - 1.0) * half;
            let (s1, s2) = if dim == 2 {
                ((rng.random::<f64>() * 2.0 - 1.0) * tube, 0.0)
            } else {
                let rho = tube * rng.random::<f64>().sqrt();
                let ang = 2.0 * PI * rng.random::<f64>();
                (rho * ang.cos(), rho * ang.sin())
            };
            let d2 = s1 * s1 + s2 * s2;
            let keep = (-0.5 * d2 / (sigma * sigma)).exp();
            if rng.random::<f64>() >= keep {
                continue;
            }
            let x: Vec<f64> = (0..dim)
                .map(|j| a[j] + t * u[j] + s1 * e1[j] + s2 * e2[j])
                .collect();
            if window.contains(&x) {
                coords.extend_from_slice(&x);
            }
        }
    }
    Ok(PointPattern::from_flat_unchecked(dim, coords, window.clone()))
}

fn perpendicular_basis(u: &Vec3, dim: usize) -> (Vec3, Vec3) {
    if dim == 2 {
        return ([-u[1], u[0], 0.0], [0.0; 3]);
    }
    // Pick the coordinate axis least aligned with u.
    let k = (0..3)
        .min_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap())
        .unwrap();
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let s = crate::geometry::dot(&e, u);
    let mut e1 = [e[0] - s * u[0], e[1] - s * u[1], e[2] - s * u[2]];
    let n = norm(&e1);
    e1 = [e1[0] / n, e1[1] / n, e1[2] / n];
    let e2 = [
        u[1] * e1[2] - u[2] * e1[1],
        u[2] * e1[0] - u[0] * e1[2],
        u[0] * e1[1] - u[1] * e1[0],
    ];
    (e1, e2)
}
