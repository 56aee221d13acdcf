//! The full set of example summaries for the two archetype patterns,
//! written as CSV tables, plus the headline numbers each one should show.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::archetypes;
use crate::curve::SummaryCurve;
use crate::error::{Error, Result};
use crate::fry_ellipse::{border_cutoff, default_directions, default_half_angle, fry_ellipse, sector_distances, ConsensusFit};
use crate::geometry::{CylinderSpec, Direction, DirectionalSet, SectorSpec};
use crate::intensity::IntensityModel;
use crate::io::{
    curve2d_table, curve_table, cwt_table, pairs_table, periodogram_table, rosenberg_table, write_json,
    write_pattern, Table,
};
use crate::kernel::Kernel;
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::nn::{angle_grid, directional_distribution, g_global, g_local, orientation_density};
use crate::pattern::PointPattern;
use crate::second_order::{
    fry_within, k_measure, orientation_density_2nd, pcf_aniso, pcf_conical, pcf_cylindrical, rose,
    AnisoPcfOptions, PcfOptions,
};
use crate::spectral::{chi2_envelope, periodogram, r_spectrum, smooth, theta_spectrum, Smoothing, DEFAULT_PMAX};
use crate::wavelet::{cwt_energy, default_rosenberg_scales, peak_angle, rosenberg_variance, CwtGrid, Morlet};

pub const DIRECTIONS: [f64; 4] = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
pub const CONE_HALF_ANGLE: f64 = PI / 8.0;
pub const NN_CONE_HALF_ANGLE: f64 = PI / 4.0;
pub const CYLINDER_HALF_WIDTH: f64 = 0.03;
pub const NN_ORIENTATION_BANDWIDTH: f64 = PI / 8.0;
pub const FRY_RADIUS: f64 = 0.3;
pub const REGULAR_LEVELS: [usize; 7] = [3, 4, 5, 6, 7, 8, 9];
pub const CLUSTERED_LEVELS: [usize; 3] = [100, 150, 200];
pub const SPECTRAL_SMOOTHING: Smoothing = Smoothing::Gaussian { sigma: 2.0 };
pub const ENVELOPE_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Regular,
    Clustered,
}

impl Archetype {
    pub fn name(self) -> &'static str {
        match self {
            Archetype::Regular => "regular",
            Archetype::Clustered => "clustered",
        }
    }

    pub fn generate(self, seed: u64) -> Result<PointPattern> {
        match self {
            Archetype::Regular => archetypes::regular(seed),
            Archetype::Clustered => archetypes::clustered(seed),
        }
    }

    pub fn fry_levels(self) -> &'static [usize] {
        match self {
            Archetype::Regular => &REGULAR_LEVELS,
            Archetype::Clustered => &CLUSTERED_LEVELS,
        }
    }
}

/// The CWT grid of the figures: 10 log-spaced scales from 2% of the window
/// edge, 5° angles and 24 × 24 translations.
pub fn figure_cwt_grid(p: &PointPattern) -> CwtGrid {
    let mut grid = CwtGrid::default_for(p.window());
    grid.scales.truncate(10);
    grid.angles = (0..36).map(|k| (5.0 * k as f64).to_radians()).collect();
    let (translations, cell_area) = CwtGrid::translations(p.window(), 24);
    grid.translations = translations;
    grid.cell_area = cell_area;
    grid
}

fn values(c: &SummaryCurve) -> Vec<f64> {
    (0..c.len()).map(|k| c.value(k)).collect()
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, k| if v[k] > v[b] { k } else { b })
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, k| if v[k] < v[b] { k } else { b })
}

/// Nearest-neighbour orientation density modes on `[0, π)` and `[π, 2π)`.
pub fn orientation_modes(p: &PointPattern) -> Result<(f64, f64)> {
    let grid = angle_grid(360, 2.0 * PI);
    let d = orientation_density(p, NN_ORIENTATION_BANDWIDTH, Kernel::Epanechnikov, &grid)?;
    let v = values(&d);
    Ok((grid[argmax(&v[..180])], grid[180 + argmax(&v[180..])]))
}

/// Bin centre of the smallest and largest Θ-spectrum values.
pub fn theta_extremes(p: &PointPattern) -> Result<(f64, f64)> {
    let th = theta_spectrum(&periodogram(p, DEFAULT_PMAX, false)?);
    let v = values(&th);
    Ok((th.grid[argmin(&v)], th.grid[argmax(&v)]))
}

pub fn ellipse_rotation(p: &PointPattern, levels: &[usize], seed: u64) -> Result<ConsensusFit> {
    let dirs = default_directions(p.dim());
    fry_ellipse(p, levels, &dirs, default_half_angle(p.dim(), dirs.len()), seed)
}

pub fn rosenberg_peak(p: &PointPattern) -> Result<f64> {
    let c = rosenberg_variance(p, &default_rosenberg_scales(), None)?;
    Ok(c.grid[argmax(&values(&c))])
}

pub fn cwt_peak(p: &PointPattern, grid: &CwtGrid) -> Result<f64> {
    let e = cwt_energy(p, grid, &Morlet::default())?;
    peak_angle(&e, f64::INFINITY).ok_or_else(|| Error::Numerical("CWT energy is undefined everywhere".into()))
}

/// Headline numbers of one archetype run, all angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSummary {
    pub archetype: Archetype,
    pub seed: u64,
    pub n: usize,
    pub orientation_modes: (f64, f64),
    pub theta_spectrum_min: f64,
    pub theta_spectrum_max: f64,
    pub ellipse_rotation: f64,
    pub ellipse_semi_axes: Vec<f64>,
    pub rosenberg_peak: f64,
    pub cwt_peak: f64,
}

fn long_form(header: &str, curves: &[(f64, SummaryCurve)]) -> Table {
    let mut t = Table::new(&[header, "r", "value", "count"]);
    for (a, c) in curves {
        t.comments.push(format!(
            "{} {}",
            c.name,
            serde_json::to_string(&c.parameters).expect("parameters serialize")
        ));
        for k in 0..c.len() {
            t.push(vec![*a, c.grid[k], c.value(k), c.counts[k] as f64]);
        }
    }
    t
}

struct Writer<'a> {
    dir: &'a Path,
    prefix: String,
    reference: String,
    written: Vec<String>,
}

impl Writer<'_> {
    fn table(&mut self, name: &str, mut t: Table) -> Result<()> {
        t.comments.insert(0, self.reference.clone());
        t.write(&self.dir.join(name))?;
        self.written.push(format!("{}{name}", self.prefix));
        Ok(())
    }
}

fn range_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

/// Compute and write every summary for one archetype into `dir`.
pub fn write_archetype(
    archetype: Archetype,
    seed: u64,
    dir: &Path,
    reference: &str,
    prefix: &str,
) -> Result<(FigureSummary, Vec<String>)> {
    let p = archetype.generate(seed)?;
    let mut w = Writer {
        dir,
        prefix: prefix.into(),
        reference: reference.into(),
        written: Vec::new(),
    };
    write_pattern(&dir.join("pattern.csv"), &p, &[reference.to_string()])?;
    w.written.push(format!("{prefix}pattern.csv"));
    w.written.push(format!("{prefix}pattern.window.json"));

    // Fry points.
    let fry = fry_within(&p, FRY_RADIUS)?;
    let mut t = Table::new(&["dx", "dy"]).comment(format!("fry radius {FRY_RADIUS}"));
    for v in &fry.vectors {
        t.push(vec![v[0], v[1]]);
    }
    w.table("fry.csv", t)?;

    // Nearest-neighbour summaries.
    let grid = angle_grid(360, 2.0 * PI);
    for (name, h) in [("narrow", NN_ORIENTATION_BANDWIDTH), ("wide", 2.0 * NN_ORIENTATION_BANDWIDTH)] {
        let c = orientation_density(&p, h, Kernel::Epanechnikov, &grid)?;
        w.table(&format!("nn_orientation_{name}.csv"), curve_table(&c))?;
    }
    let a_grid: Vec<f64> = (0..=360).map(|k| (k as f64).to_radians()).collect();
    for (name, r) in [("short", 0.1), ("long", 0.3)] {
        let c = directional_distribution(&p, r, &a_grid)?;
        w.table(&format!("nn_directional_{name}.csv"), curve_table(&c))?;
    }
    let r_nn = range_grid(0.0, 0.3, 0.005);
    let mut glob = Vec::new();
    let mut loc = Vec::new();
    for &a in &DIRECTIONS {
        let s = SectorSpec::new(Direction::planar(a), NN_CONE_HALF_ANGLE, None)?;
        glob.push((a, g_global(&p, &s, &r_nn)?));
        loc.push((a, g_local(&p, &s, &r_nn)?));
    }
    w.table("nn_g_global.csv", long_form("direction", &glob))?;
    w.table("nn_g_local.csv", long_form("direction", &loc))?;

    // Second-order measures.
    let r_k = range_grid(0.005, 0.3, 0.005);
    let r_kc: Vec<f64> = r_k.iter().copied().filter(|&r| r > CYLINDER_HALF_WIDTH).collect();
    let mut cone = Vec::new();
    let mut cyl = Vec::new();
    for &a in &DIRECTIONS {
        let u = Direction::planar(a);
        let s = DirectionalSet::Sector(SectorSpec::new(u, CONE_HALF_ANGLE, None)?);
        cone.push((a, k_measure(&p, &s, &r_k, &IntensityModel::Stationary)?));
        let c = DirectionalSet::Cylinder(CylinderSpec::new(u, 0.1, CYLINDER_HALF_WIDTH)?);
        cyl.push((a, k_measure(&p, &c, &r_kc, &IntensityModel::Stationary)?));
    }
    w.table("k_conical.csv", long_form("direction", &cone))?;
    w.table("k_cylindrical.csv", long_form("direction", &cyl))?;
    let h_a = 3.0 / p.intensity().sqrt();
    let half = angle_grid(180, PI);
    for (name, r1, r2) in [("short", 0.0, 0.1), ("long", 0.1, 0.2)] {
        let (d, _) = orientation_density_2nd(&p, r1, r2, h_a, Kernel::Epanechnikov, &half, &IntensityModel::Stationary)?;
        w.table(&format!("orientation_2nd_{name}.csv"), curve_table(&d))?;
        if name == "short" {
            w.table("rose_short.csv", pairs_table(["angle", "density"], &rose(&d)))?;
        }
    }

    // Pair correlation functions.
    let r_pcf = range_grid(0.01, 0.3, 0.005);
    let aniso = pcf_aniso(&p, &DIRECTIONS, &[], &r_pcf, &AnisoPcfOptions::default())?;
    w.table("pcf_anisotropic.csv", curve2d_table(&aniso))?;
    let opts = PcfOptions::default();
    let r_cyl: Vec<f64> = r_pcf.iter().copied().filter(|&r| r > CYLINDER_HALF_WIDTH).collect();
    let mut cone = Vec::new();
    let mut cyl = Vec::new();
    for &a in &DIRECTIONS {
        let u = Direction::planar(a);
        cone.push((a, pcf_conical(&p, &SectorSpec::new(u, CONE_HALF_ANGLE, None)?, &r_pcf, &opts)?));
        cyl.push((a, pcf_cylindrical(&p, &u, CYLINDER_HALF_WIDTH, &r_cyl, &opts)?));
    }
    w.table("pcf_conical.csv", long_form("direction", &cone))?;
    w.table("pcf_cylindrical.csv", long_form("direction", &cyl))?;

    // Fry-point ellipses.
    let levels = archetype.fry_levels();
    let fit = ellipse_rotation(&p, levels, seed)?;
    let dirs = default_directions(2);
    let eps = default_half_angle(2, dirs.len());
    let sd = sector_distances(&fry_within(&p, border_cutoff(p.window()))?, &dirs, eps)?;
    let mut contours = Table::new(&["level", "angle", "radius", "x", "y"]);
    for &l in levels {
        let Ok(c) = sd.contour(l) else { continue };
        for (k, d) in c.directions.iter().enumerate() {
            let r = c.radii[k];
            let v = d.vector();
            contours.push(vec![l as f64, d.polar().phi.unwrap_or(f64::NAN), r, r * v[0], r * v[1]]);
        }
    }
    w.table("fry_contours.csv", contours)?;
    let mut ellipses = Table::new(&["level", "semi_major", "semi_minor", "rotation"]);
    for lf in &fit.levels {
        if let Some(f) = &lf.fit {
            ellipses.push(vec![lf.level as f64, f.semi_axes[0], f.semi_axes[1], f.rotation]);
        }
    }
    let c = &fit.consensus;
    ellipses.push(vec![f64::NAN, c.semi_axes[0], c.semi_axes[1], c.rotation]);
    w.table("fry_ellipses.csv", ellipses.comment("level NaN is the consensus fit"))?;

    // Spectra.
    let raw = periodogram(&p, DEFAULT_PMAX, false)?;
    let sm = smooth(&raw, SPECTRAL_SMOOTHING)?;
    w.table("periodogram_raw.csv", periodogram_table(&raw))?;
    w.table("periodogram_smoothed.csv", periodogram_table(&sm))?;
    let lambda = raw.intensity;
    for (name, f) in [("r_spectrum.csv", r_spectrum as fn(&_) -> _), ("theta_spectrum.csv", theta_spectrum)] {
        let (a, b) = (f(&raw), f(&sm));
        let mut t = Table::new(&["abscissa", "raw", "smoothed", "count", "raw_lower", "raw_upper"]).comment(format!(
            "{:.0}% envelope of raw averages under complete spatial randomness, intensity {lambda:e}",
            100.0 * ENVELOPE_LEVEL
        ));
        for k in 0..a.len() {
            let (lo, hi) = if a.counts[k] > 0 {
                chi2_envelope(a.counts[k], ENVELOPE_LEVEL)?
            } else {
                (f64::NAN, f64::NAN)
            };
            t.push(vec![a.grid[k], a.value(k), b.value(k), a.counts[k] as f64, lambda * lo, lambda * hi]);
        }
        w.table(name, t)?;
    }

    // Wavelets.
    let rv = rosenberg_variance(&p, &default_rosenberg_scales(), None)?;
    w.table("rosenberg.csv", rosenberg_table(&rv))?;
    let grid = figure_cwt_grid(&p);
    let energy = cwt_energy(&p, &grid, &Morlet::default())?;
    w.table("cwt_energy.csv", cwt_table(&energy))?;

    let th = theta_spectrum(&raw);
    let tv = values(&th);
    let summary = FigureSummary {
        archetype,
        seed,
        n: p.len(),
        orientation_modes: orientation_modes(&p)?,
        theta_spectrum_min: th.grid[argmin(&tv)],
        theta_spectrum_max: th.grid[argmax(&tv)],
        ellipse_rotation: c.rotation,
        ellipse_semi_axes: c.semi_axes.clone(),
        rosenberg_peak: rv.grid[argmax(&values(&rv))],
        cwt_peak: peak_angle(&energy, f64::INFINITY)
            .ok_or_else(|| Error::Numerical("CWT energy is undefined everywhere".into()))?,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    w.written.push(format!("{prefix}summary.json"));
    Ok((summary, w.written))
}

/// Write both archetypes under `out/<name>/` and the manifest at
/// `out/manifest.json`.
pub fn reproduce_figures(out: &Path, seed: u64, manifest: &mut RunManifest) -> Result<Vec<FigureSummary>> {
    let reference = manifest.reference(&format!("../{MANIFEST_FILE}"));
    let mut summaries = Vec::new();
    for a in [Archetype::Regular, Archetype::Clustered] {
        let prefix = format!("{}/", a.name());
        let (s, files) = write_archetype(a, seed, &out.join(a.name()), &reference, &prefix)?;
        summaries.push(s);
        for f in files {
            manifest.add_output(f);
        }
    }
    write_json(&out.join(MANIFEST_FILE), manifest)?;
    Ok(summaries)
}
