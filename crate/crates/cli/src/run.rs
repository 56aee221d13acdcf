use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use aniso_core::figures::reproduce_figures;
use aniso_core::fry_ellipse::{default_directions, default_half_angle, fry_ellipse, icosphere, planar_directions};
use aniso_core::io::{
    curve2d_table, curve_table, cwt_table, format_value, meta_sidecar, pairs_table, periodogram_table, read_pattern,
    read_window, rosenberg_table, window_from_json, window_sidecar, write_json, write_pattern, write_text, Table,
};
use aniso_core::iso_tests::{
    default_psi, ellipse_axis_test, even_lags, guan_test, replicate_test, wavelet_direction_test, wong_test,
    GuanOptions, ReplicateOptions, ReplicateStatistic, TestReport, WaveletTestOptions, WongOptions,
};
use aniso_core::manifest::{normalize_command_line, RunManifest, MANIFEST_FILE};
use aniso_core::nn::{angle_grid, directional_distribution, g_global, g_local, orientation_density};
use aniso_core::second_order::{
    fry, fry_within, k_measure, orientation_density_2nd, pcf_aniso, pcf_conical, pcf_cylindrical, pcf_isotropic,
    rose, AnisoPcfOptions, PcfOptions,
};
use aniso_core::simulate::{apply_transform, simulate, GeometricTransform, ModelSpec};
use aniso_core::spectral::{chi2_envelope, periodogram, r_spectrum, smooth, theta_spectrum, Smoothing};
use aniso_core::wavelet::{cwt_energy, default_rosenberg_scales, rosenberg_variance, CwtGrid, Morlet};
use aniso_core::{
    archetypes, CylinderSpec, Direction, DirectionalSet, Error, Kernel, PointPattern, RectWindow, SectorSpec,
    SummaryCurve,
};

use crate::args::*;

pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    let threads = match cli.threads {
        Some(0) => bail!(Error::InvalidParameter {
            name: "threads",
            reason: "must be at least 1".into()
        }),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let args: Vec<String> = argv.iter().filter(|a| a.as_str() != "--record-wall-clock").cloned().collect();
    let ctx = Ctx {
        command_line: normalize_command_line(&args, &NON_CONFIG_FLAGS),
        record_wall_clock: cli.record_wall_clock,
        start: Instant::now(),
    };
    pool.install(|| match &cli.command {
        Command::Simulate(a) => cmd_simulate(&ctx, &cli.command, a),
        Command::Nn(a) => cmd_nn(&ctx, &cli.command, a),
        Command::K2(a) => cmd_k2(&ctx, &cli.command, a),
        Command::FryEllipse(a) => cmd_fry(&ctx, &cli.command, a),
        Command::Spectral(a) => cmd_spectral(&ctx, &cli.command, a),
        Command::Wavelet(a) => cmd_wavelet(&ctx, &cli.command, a),
        Command::Test(a) => cmd_test(&ctx, &cli.command, a),
        Command::ReproduceFigures(a) => cmd_figures(&ctx, &cli.command, a),
    })
}

struct Ctx {
    command_line: Vec<String>,
    record_wall_clock: bool,
    start: Instant,
}

impl Ctx {
    fn manifest(&self, command: &Command, seeds: Vec<u64>) -> Result<RunManifest> {
        let v = serde_json::to_value(command)?;
        let (name, config) = match v {
            Value::Object(m) => m.into_iter().next().ok_or_else(|| anyhow!("empty command"))?,
            Value::String(s) => (s, Value::Null),
            other => ("command".into(), other),
        };
        Ok(RunManifest::new(&name, self.command_line.clone(), config, seeds))
    }

    fn finish(&self, m: &mut RunManifest, path: &Path) -> Result<()> {
        if self.record_wall_clock {
            m.wall_clock_seconds = Some(self.start.elapsed().as_secs_f64());
        }
        write_json(path, m)?;
        Ok(())
    }
}

/// `out.csv` → `out.manifest.json`.
fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Manifest for a command writing next to `out`; the returned comment line
/// goes at the top of every output.
fn start_manifest(ctx: &Ctx, cmd: &Command, out: &Path, seeds: Vec<u64>) -> Result<(RunManifest, PathBuf, String)> {
    let m = ctx.manifest(cmd, seeds)?;
    let mp = manifest_path(out);
    let reference = m.reference(&file_name(&mp));
    Ok((m, mp, reference))
}

fn parse_window(spec: &str) -> Result<RectWindow> {
    let t = spec.trim();
    if t.starts_with('{') {
        Ok(window_from_json(t)?)
    } else {
        Ok(read_window(Path::new(t)).with_context(|| format!("reading window file {t}"))?)
    }
}

fn load_pattern(path: &Path, window: Option<&str>, m: &mut RunManifest) -> Result<PointPattern> {
    let w = window.map(parse_window).transpose()?;
    if w.is_none() {
        let side = window_sidecar(path);
        if side.exists() {
            m.add_input(&side)?;
        }
    }
    let p = read_pattern(path, w).with_context(|| format!("reading pattern {}", path.display()))?;
    m.add_input(path)?;
    Ok(p)
}

fn kernel(k: KernelArg) -> Kernel {
    match k {
        KernelArg::Epanechnikov => Kernel::Epanechnikov,
        KernelArg::Box => Kernel::Box,
        KernelArg::Gaussian => Kernel::Gaussian,
    }
}

fn param_error(name: &'static str, reason: impl Into<String>) -> anyhow::Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
    .into()
}

/// A single value `r` becomes `steps` evenly spaced nodes on `(0, r]`.
fn range_grid(r: &[f64], steps: usize) -> Result<Vec<f64>> {
    match r {
        [] => Err(param_error("r", "a range or range grid is required")),
        [r] => {
            if !(*r > 0.0) || steps == 0 {
                return Err(param_error("r", "need r > 0 and steps > 0"));
            }
            Ok((1..=steps).map(|k| r * k as f64 / steps as f64).collect())
        }
        many => Ok(many.to_vec()),
    }
}

fn direction(dim: usize, phi: f64, polar: Option<f64>) -> Result<Direction> {
    match (dim, polar) {
        (2, None) => Ok(Direction::planar(phi)),
        (2, Some(_)) => Err(param_error("polar", "colatitude is only used in 3D")),
        (_, Some(t)) => Ok(Direction::spherical(phi, t)),
        (_, None) => Err(param_error("polar", "3D directions need --polar")),
    }
}

fn write_table(t: Table, path: &Path, reference: &str, m: &mut RunManifest) -> Result<()> {
    let mut t = t;
    t.comments.insert(0, reference.to_string());
    t.write(path)?;
    m.add_output(file_name(path));
    Ok(())
}

fn long_form(curves: &[(f64, SummaryCurve)]) -> Table {
    let mut t = Table::new(&["direction", "r", "value", "count"]);
    for (a, c) in curves {
        t.comments.push(format!(
            "{} {}",
            c.name,
            serde_json::to_string(&c.parameters).unwrap_or_default()
        ));
        for w in &c.warnings {
            t.comments.push(format!("warning: {w}"));
        }
        for k in 0..c.len() {
            t.push(vec![*a, c.grid[k], c.value(k), c.counts[k] as f64]);
        }
    }
    t
}

fn cmd_simulate(ctx: &Ctx, cmd: &Command, a: &SimulateArgs) -> Result<()> {
    let (mut m, mp, reference) = start_manifest(ctx, cmd, &a.out, vec![a.seed])?;
    let (pattern, spec, extra) = match a.model.as_str() {
        "regular" => (archetypes::regular(a.seed)?, Value::String("regular".into()), Value::Null),
        "clustered" => (archetypes::clustered(a.seed)?, Value::String("clustered".into()), Value::Null),
        name => {
            let mut params: Value =
                serde_json::from_str(&a.params).map_err(|e| param_error("params", format!("invalid JSON: {e}")))?;
            let obj = params
                .as_object_mut()
                .ok_or_else(|| param_error("params", "must be a JSON object"))?;
            obj.insert("model".into(), Value::String(name.into()));
            let spec: ModelSpec =
                serde_json::from_value(params).map_err(|e| param_error("params", format!("{name}: {e}")))?;
            let window = match &a.window {
                Some(w) => parse_window(w)?,
                None => archetypes::unit_square(),
            };
            let sim = simulate(&spec, &window, a.seed)?;
            let extra = json!({
                "mcmc_steps": sim.mcmc_steps,
                "acceptance_rate": sim.acceptance_rate,
                "warnings": sim.warnings,
            });
            (sim.pattern, serde_json::to_value(&spec)?, extra)
        }
    };
    let pattern = match &a.transform {
        None => pattern,
        Some(t) => apply_transform(&pattern, &parse_transform(t, pattern.dim())?)?,
    };
    write_pattern(&a.out, &pattern, &[reference])?;
    m.add_output(file_name(&a.out));
    m.add_output(file_name(&window_sidecar(&a.out)));
    let meta_path = meta_sidecar(&a.out);
    let meta = json!({
        "manifest": file_name(&mp),
        "model": spec,
        "seed": a.seed,
        "n": pattern.len(),
        "window": {"lo": pattern.window().lo(), "hi": pattern.window().hi()},
        "window_is_bounding_box": pattern.window_is_bounding_box(),
        "simulation": extra,
    });
    write_json(&meta_path, &meta)?;
    m.add_output(file_name(&meta_path));
    ctx.finish(&mut m, &mp)
}

fn parse_transform(text: &str, dim: usize) -> Result<GeometricTransform> {
    let v: Value = serde_json::from_str(text).map_err(|e| param_error("transform", format!("invalid JSON: {e}")))?;
    let angle = v.get("angle").and_then(Value::as_f64).unwrap_or(0.0);
    let scale: Vec<f64> = match v.get("scale") {
        Some(s) => serde_json::from_value(s.clone()).map_err(|e| param_error("transform", format!("scale: {e}")))?,
        None => vec![1.0; dim],
    };
    if scale.len() != dim {
        return Err(param_error("transform", format!("scale needs {dim} entries")));
    }
    if dim == 2 {
        Ok(GeometricTransform::planar(angle, [scale[0], scale[1]])?)
    } else {
        let axis: Vec<f64> = match v.get("axis") {
            Some(s) => serde_json::from_value(s.clone()).map_err(|e| param_error("transform", format!("axis: {e}")))?,
            None => vec![0.0, 0.0, 1.0],
        };
        if axis.len() != 3 {
            return Err(param_error("transform", "axis needs 3 entries"));
        }
        Ok(GeometricTransform::spatial(
            [axis[0], axis[1], axis[2]],
            angle,
            [scale[0], scale[1], scale[2]],
        )?)
    }
}

fn cmd_nn(ctx: &Ctx, cmd: &Command, a: &NnArgs) -> Result<()> {
    let (mut m, mp, reference) = start_manifest(ctx, cmd, &a.out, vec![])?;
    let p = load_pattern(&a.pattern.input, a.pattern.window.as_deref(), &mut m)?;
    let curve = match a.stat {
        NnStat::Orientation => orientation_density(&p, a.bandwidth, kernel(a.kernel), &angle_grid(a.angles, 2.0 * PI))?,
        NnStat::Dirdist => {
            let r = match a.r.as_slice() {
                [r] => *r,
                _ => return Err(param_error("r", "dirdist takes a single range")),
            };
            let grid: Vec<f64> = (0..=a.angles).map(|k| 2.0 * PI * k as f64 / a.angles as f64).collect();
            directional_distribution(&p, r, &grid)?
        }
        NnStat::Gglobal | NnStat::Glocal => {
            let s = SectorSpec::new(direction(p.dim(), a.angle, a.polar)?, a.eps, None)?;
            let grid = range_grid(&a.r, a.steps)?;
            if matches!(a.stat, NnStat::Gglobal) {
                g_global(&p, &s, &grid)?
            } else {
                g_local(&p, &s, &grid)?
            }
        }
    };
    write_table(curve_table(&curve), &a.out, &reference, &mut m)?;
    ctx.finish(&mut m, &mp)
}

fn cmd_k2(ctx: &Ctx, cmd: &Command, a: &K2Args) -> Result<()> {
    let (mut m, mp, reference) = start_manifest(ctx, cmd, &a.out, vec![])?;
    let p = load_pattern(&a.pattern.input, a.pattern.window.as_deref(), &mut m)?;
    let dim = p.dim();
    let polar = a.polar.first().copied();
    let opts = PcfOptions {
        h_r: a.bandwidth,
        kernel: kernel(a.kernel),
        ..PcfOptions::default()
    };
    let table = match a.stat {
        K2Stat::Fry => {
            let f = match a.radius {
                Some(r) => fry_within(&p, r)?,
                None => fry(&p)?,
            };
            let header: &[&str] = if dim == 2 { &["dx", "dy"] } else { &["dx", "dy", "dz"] };
            let mut t = Table::new(header);
            for v in &f.vectors {
                t.push(v[..dim].to_vec());
            }
            t
        }
        K2Stat::Kcone | K2Stat::Kcyl | K2Stat::Pcfcone | K2Stat::Pcfcyl => {
            let grid = range_grid(&a.r, a.steps)?;
            let mut curves = Vec::new();
            for &phi in &a.angle {
                let u = direction(dim, phi, polar)?;
                let c = match a.stat {
                    K2Stat::Kcone => {
                        let s = DirectionalSet::Sector(SectorSpec::new(u, a.eps, None)?);
                        k_measure(&p, &s, &grid, &Default::default())?
                    }
                    K2Stat::Kcyl => {
                        let s = DirectionalSet::Cylinder(CylinderSpec::new(u, grid[grid.len() - 1], a.half_width)?);
                        k_measure(&p, &s, &grid, &Default::default())?
                    }
                    K2Stat::Pcfcone => pcf_conical(&p, &SectorSpec::new(u, a.eps, None)?, &grid, &opts)?,
                    _ => pcf_cylindrical(&p, &u, a.half_width, &grid, &opts)?,
                };
                curves.push((phi, c));
            }
            long_form(&curves)
        }
        K2Stat::Orient2 => {
            let r2 = a.r2.ok_or_else(|| param_error("r2", "orient2 needs --r2"))?;
            let h = a.bandwidth.unwrap_or(3.0 / p.intensity().sqrt());
            let (d, _) = orientation_density_2nd(
                &p,
                a.r1,
                r2,
                h,
                kernel(a.kernel),
                &angle_grid(a.angles, PI),
                &Default::default(),
            )?;
            if let Some(path) = &a.rose {
                write_table(pairs_table(["angle", "density"], &rose(&d)), path, &reference, &mut m)?;
            }
            curve_table(&d)
        }
        K2Stat::Pcf => {
            let grid = range_grid(&a.r, a.steps)?;
            let o = AnisoPcfOptions {
                h_r: a.bandwidth,
                h_a: a.angular_bandwidth,
                kernel: kernel(a.kernel),
                ..AnisoPcfOptions::default()
            };
            curve2d_table(&pcf_aniso(&p, &a.angle, &a.polar, &grid, &o)?)
        }
        K2Stat::Pcfiso => curve_table(&pcf_isotropic(&p, &range_grid(&a.r, a.steps)?, &opts)?),
    };
    write_table(table, &a.out, &reference, &mut m)?;
    ctx.finish(&mut m, &mp)
}

fn fry_directions(dim: usize, m: usize) -> Result<Vec<Direction>> {
    if dim == 2 {
        if m < 5 {
            return Err(param_error("directions", "need at least 5 directions"));
        }
        Ok(planar_directions(m))
    } else {
        Ok(icosphere(2))
    }
}

fn cmd_fry(ctx: &Ctx, cmd: &Command, a: &FryArgs) -> Result<()> {
    let (mut m, mp, reference) = start_manifest(ctx, cmd, &a.out, vec![a.seed])?;
    let p = load_pattern(&a.pattern.input, a.pattern.window.as_deref(), &mut m)?;
    let dirs = fry_directions(p.dim(), a.directions)?;
    let eps = a.eps.unwrap_or_else(|| default_half_angle(p.dim(), dirs.len()));
    let fit = fry_ellipse(&p, &a.levels, &dirs, eps, a.seed)?;
    if let Some(path) = &a.contours {
        let dim = p.dim();
        let header: &[&str] = if dim == 2 {
            &["level", "semi_major", "semi_minor", "rotation"]
        } else {
            &["level", "a1", "a2", "a3", "rotation"]
        };
        let mut t = Table::new(header).comment("fitted semi-axes per level; level NaN is the consensus");
        for lf in &fit.levels {
            if let Some(f) = &lf.fit {
                let mut row = vec![lf.level as f64];
                row.extend_from_slice(&f.semi_axes);
                row.push(f.rotation);
                t.push(row);
            }
        }
        let mut row = vec![f64::NAN];
        row.extend_from_slice(&fit.consensus.semi_axes);
        row.push(fit.consensus.rotation);
        t.push(row);
        write_table(t, path, &reference, &mut m)?;
    }
    let out = json!({
        "manifest": file_name(&mp),
        "half_angle": eps,
        "directions": dirs.len(),
        "fit": fit,
    });
    write_json(&a.out, &out)?;
    m.add_output(file_name(&a.out));
    ctx.finish(&mut m, &mp)
}

fn parse_smoothing(s: &str) -> Result<Option<Smoothing>> {
    let s = s.trim().to_ascii_lowercase();
    if s == "none" {
        return Ok(None);
    }
    let (method, value) = s
        .split_once(':')
        .ok_or_else(|| param_error("smooth", "expected none, gaussian:<sigma> or ma:<repeats>"))?;
    match method {
        "gaussian" => Ok(Some(Smoothing::Gaussian {
            sigma: value.parse().map_err(|_| param_error("smooth", "sigma must be a number"))?,
        })),
        "ma" | "moving_average" => Ok(Some(Smoothing::MovingAverage {
            repeats: value.parse().map_err(|_| param_error("smooth", "repeats must be an integer"))?,
        })),
        _ => Err(param_error("smooth", format!("unknown method `{method}`"))),
    }
}

fn cmd_spectral(ctx: &Ctx, cmd: &Command, a: &SpectralArgs) -> Result<()> {
    let (mut m, mp, reference) = start_manifest(ctx, cmd, &a.out, vec![])?;
    let p = load_pattern(&a.pattern.input, a.pattern.window.as_deref(), &mut m)?;
    let smoothing = parse_smoothing(&a.smooth)?;
    let raw = periodogram(&p, a.pmax, a.standardize)?;
    let grid = match smoothing {
        Some(s) => smooth(&raw, s)?,
        None => raw.clone(),
    };
    write_table(periodogram_table(&grid), &a.out, &reference, &mut m)?;
    if let Some(path) = &a.raw {
        write_table(periodogram_table(&raw), path, &reference, &mut m)?;
    }
    if let Some(path) = &a.rtheta {
        let lambda = raw.intensity;
        let mut text = format!(
            "# {reference}\n# {:.0}% envelopes of averaged raw ordinates under complete spatial randomness; smoothed spectra share the raw counts\nspectrum,abscissa,value,count,lower,upper\n",
            100.0 * a.level
        );
        for (name, c) in [("r", r_spectrum(&grid)), ("theta", theta_spectrum(&grid))] {
            for k in 0..c.len() {
                let (lo, hi) = if c.counts[k] > 0 {
                    chi2_envelope(c.counts[k], a.level)?
                } else {
                    (f64::NAN, f64::NAN)
                };
                text.push_str(&format!(
                    "{name},{},{},{},{},{}\n",
                    format_value(c.grid[k]),
                    format_value(c.value(k)),
                    c.counts[k],
                    format_value(lambda * lo),
                    format_value(lambda * hi)
                ));
            }
        }
        write_text(path, &text)?;
        m.add_output(file_name(path));
    }
    ctx.finish(&mut m, &mp)
}

fn cwt_setup(p: &PointPattern, g: &CwtGridArgs) -> Result<(CwtGrid, Morlet)> {
    let mut grid = CwtGrid::default_for(p.window());
    if !g.cwt_scales.is_empty() {
        grid.scales = g.cwt_scales.clone();
    }
    if !(g.angle_step > 0.0 && g.angle_step <= 180.0) {
        return Err(param_error("angle_step", "must lie in (0, 180]"));
    }
    let n = (180.0 / g.angle_step).round() as usize;
    grid.angles = (0..n).map(|k| (g.angle_step * k as f64).to_radians()).collect();
    if g.translations == 0 {
        return Err(param_error("translations", "must be positive"));
    }
    let (t, area) = CwtGrid::translations(p.window(), g.translations);
    grid.translations = t;
    grid.cell_area = area;
    let wavelet = Morlet {
        d: g.d,
        k0: [g.k0[0], g.k0[1]],
        adjusted: !g.unadjusted,
    };
    Ok((grid, wavelet))
}

fn cmd_wavelet(ctx: &Ctx, cmd: &Command, a: &WaveletArgs) -> Result<()> {
    let (mut m, mp, reference) = start_manifest(ctx, cmd, &a.out, vec![])?;
    let p = load_pattern(&a.pattern.input, a.pattern.window.as_deref(), &mut m)?;
    let table = match a.method {
        WaveletMethod::Rosenberg => {
            let scales = if a.scales.is_empty() {
                default_rosenberg_scales()
            } else {
                a.scales.clone()
            };
            rosenberg_table(&rosenberg_variance(&p, &scales, a.margin)?)
        }
        WaveletMethod::Cwt => {
            let (grid, w) = cwt_setup(&p, &a.cwt)?;
            cwt_table(&cwt_energy(&p, &grid, &w)?)
        }
    };
    write_table(table, &a.out, &reference, &mut m)?;
    ctx.finish(&mut m, &mp)
}

fn null_model(a: &TestArgs, p: &PointPattern) -> Result<(ModelSpec, Option<String>)> {
    match &a.null {
        Some(s) => {
            let t = s.trim();
            let text = if t.starts_with('{') {
                t.to_string()
            } else {
                fs::read_to_string(t).with_context(|| format!("reading null model {t}"))?
            };
            let spec: ModelSpec = serde_json::from_str(&text).map_err(|e| param_error("null", e.to_string()))?;
            Ok((spec, None))
        }
        None => Ok((
            ModelSpec::Poisson {
                lambda: p.intensity(),
            },
            Some(format!("null model defaulted to Poisson at the observed intensity {:.6}", p.intensity())),
        )),
    }
}

fn run_test(a: &TestArgs, patterns: &[PointPattern]) -> Result<TestReport> {
    let p = &patterns[0];
    if !matches!(a.method, TestMethod::Replicate) && patterns.len() != 1 {
        return Err(param_error("input", "this test takes a single pattern"));
    }
    let report = match a.method {
        TestMethod::Guan => {
            let lags = match &a.lag_vectors {
                Some(s) => serde_json::from_str(s).map_err(|e| param_error("lag_vectors", e.to_string()))?,
                None => {
                    if p.dim() != 2 {
                        return Err(param_error("lag_vectors", "3D patterns need explicit lag vectors"));
                    }
                    let z = a.lag_length.ok_or_else(|| param_error("lag_length", "guan needs --lag-length"))?;
                    even_lags(a.lags, z)
                }
            };
            let mut o = GuanOptions::new(lags);
            o.contrast = a
                .contrast
                .as_deref()
                .map(serde_json::from_str)
                .transpose()
                .map_err(|e| param_error("contrast", e.to_string()))?;
            o.bandwidth = a.bandwidth;
            o.block_factor = a.block_factor;
            o.level = a.level;
            guan_test(p, &o)?
        }
        TestMethod::Wong => {
            let (null, note) = null_model(a, p)?;
            if !(a.psi_step > 0.0 && a.psi_step <= 180.0) {
                return Err(param_error("psi_step", "must lie in (0, 180]"));
            }
            let psi = if a.psi_step == 10.0 {
                default_psi()
            } else {
                let n = (180.0 / a.psi_step).round() as usize;
                (0..n).map(|k| (a.psi_step * k as f64).to_radians()).collect()
            };
            let o = WongOptions {
                r: a.r.ok_or_else(|| param_error("r", "wong needs --r"))?,
                psi,
                null,
                n_sims: a.sims,
                seed: a.seed,
                level: a.level,
            };
            let mut r = wong_test(p, &o)?;
            r.notes.extend(note);
            r
        }
        TestMethod::Replicate => {
            let statistic = match a.statistic {
                ReplicateStat::ConicalK => ReplicateStatistic::ConicalK,
                ReplicateStat::GLocal => ReplicateStatistic::GLocal,
                ReplicateStat::GGlobal => ReplicateStatistic::GGlobal,
            };
            let r2 = a.r2.ok_or_else(|| param_error("r2", "replicate needs --r2"))?;
            let mut o = ReplicateOptions::new(statistic, a.r1, r2, a.eps);
            o.grid_size = a.grid_size;
            o.level = a.level;
            if !a.test_axis.is_empty() {
                o.test_axis = Some(Direction::from_vector(&a.test_axis)?);
            }
            replicate_test(patterns, &o)?
        }
        TestMethod::Ellipse => {
            let dirs = default_directions(p.dim());
            let eps = default_half_angle(p.dim(), dirs.len());
            let fit = fry_ellipse(p, &a.levels, &dirs, eps, a.seed)?;
            let fits: Vec<_> = fit.levels.iter().filter_map(|l| l.fit.clone()).collect();
            let mut r = ellipse_axis_test(&fits, a.mc, a.level, a.seed)?;
            r.notes.extend(fit.warnings);
            r
        }
        TestMethod::Wavelet => {
            let (null, note) = null_model(a, p)?;
            let (grid, wavelet) = cwt_setup(p, &a.cwt)?;
            let o = WaveletTestOptions {
                null,
                grid,
                wavelet,
                n_sims: a.sims,
                seed: a.seed,
                level: a.level,
            };
            let mut r = wavelet_direction_test(p, &o)?;
            r.notes.extend(note);
            r
        }
    };
    Ok(report)
}

fn cmd_test(ctx: &Ctx, cmd: &Command, a: &TestArgs) -> Result<()> {
    let (mut m, mp, _) = start_manifest(ctx, cmd, &a.report, vec![a.seed])?;
    let patterns = a
        .input
        .iter()
        .map(|path| load_pattern(path, a.window.as_deref(), &mut m))
        .collect::<Result<Vec<_>>>()?;
    let report = run_test(a, &patterns)?;
    write_json(
        &a.report,
        &json!({
            "manifest": file_name(&mp),
            "report": report,
        }),
    )?;
    m.add_output(file_name(&a.report));
    ctx.finish(&mut m, &mp)
}

fn cmd_figures(ctx: &Ctx, cmd: &Command, a: &FiguresArgs) -> Result<()> {
    let mut m = ctx.manifest(cmd, vec![a.seed])?;
    m.add_output(MANIFEST_FILE);
    reproduce_figures(&a.out, a.seed, &mut m)?;
    if ctx.record_wall_clock {
        ctx.finish(&mut m, &a.out.join(MANIFEST_FILE))?;
    }
    Ok(())
}
