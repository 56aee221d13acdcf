//! File formats: point patterns as `x,y[,z]` CSV with a window sidecar,
//! numeric tables as CSV with `#` comment headers, reports as JSON.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curve::{SummaryCurve, SummaryCurve2D};
use crate::error::{Error, Result};
use crate::geometry::RectWindow;
use crate::pattern::PointPattern;
use crate::spectral::PeriodogramGrid;

const AXES: [&str; 3] = ["x", "y", "z"];

/// Coordinates are written with 17 significant digits so that reading them
/// back reproduces every bit.
pub fn format_coordinate(v: f64) -> String {
    format!("{v:.16e}")
}

/// Shortest round-trip representation, in plain decimal notation for
/// moderate magnitudes; `NaN` for undefined values.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        "NaN".into()
    } else if v == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WindowSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

pub fn window_from_json(text: &str) -> Result<RectWindow> {
    let spec: WindowSpec = serde_json::from_str(text)
        .map_err(|e| Error::param("window", format!("expected {{\"lo\":[...],\"hi\":[...]}}: {e}")))?;
    RectWindow::new(spec.lo, spec.hi)
}

pub fn window_to_json(w: &RectWindow) -> String {
    serde_json::to_string(&WindowSpec {
        lo: w.lo().to_vec(),
        hi: w.hi().to_vec(),
    })
    .expect("finite window bounds serialize")
}

pub fn read_window(path: &Path) -> Result<RectWindow> {
    window_from_json(&fs::read_to_string(path)?)
}

/// `pattern.csv` → `pattern.window.json`.
pub fn window_sidecar(path: &Path) -> PathBuf {
    path.with_extension("window.json")
}

/// `pattern.csv` → `pattern.meta.json`.
pub fn meta_sidecar(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn comment_block(comments: &[String]) -> String {
    comments
        .iter()
        .flat_map(|c| c.lines())
        .map(|l| format!("# {l}\n"))
        .collect()
}

pub fn pattern_csv(p: &PointPattern, comments: &[String]) -> String {
    let dim = p.dim();
    let mut out = comment_block(comments);
    out.push_str(&AXES[..dim].join(","));
    out.push('\n');
    for x in p.points() {
        let row: Vec<String> = x.iter().map(|&v| format_coordinate(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Write the pattern CSV and its window sidecar.
pub fn write_pattern(path: &Path, p: &PointPattern, comments: &[String]) -> Result<()> {
    write_text(path, &pattern_csv(p, comments))?;
    write_text(&window_sidecar(path), &(window_to_json(p.window()) + "\n"))
}

/// Parse pattern CSV text. Lines starting with `#` are ignored.
pub fn parse_pattern(text: &str, window: RectWindow) -> Result<PointPattern> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let dim = header.len();
    if !(dim == 2 || dim == 3) || header.iter().zip(AXES).any(|(h, a)| h != a) {
        return Err(Error::InvalidPattern(format!(
            "header must be `x,y` or `x,y,z`, found `{}`",
            header.join(",")
        )));
    }
    if dim != window.dim() {
        return Err(Error::InvalidPattern(format!(
            "window mismatch: pattern has {dim} coordinates, window has {}",
            window.dim()
        )));
    }
    let mut coords = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(k as u64 + 2);
        if rec.len() != dim {
            return Err(Error::InvalidPattern(format!(
                "line {line}: expected {dim} fields, found {}",
                rec.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidPattern(format!("line {line}, field `{}`: cannot parse `{field}`", AXES[j]))
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidPattern(format!(
                    "line {line}, field `{}`: non-finite value",
                    AXES[j]
                )));
            }
            coords.push(v);
        }
    }
    PointPattern::from_flat(dim, coords, window)
}

/// Read a pattern; without an explicit window the sidecar next to `path`
/// is used.
pub fn read_pattern(path: &Path, window: Option<RectWindow>) -> Result<PointPattern> {
    let text = fs::read_to_string(path)?;
    let window = match window {
        Some(w) => w,
        None => {
            let side = window_sidecar(path);
            if !side.exists() {
                return Err(Error::param(
                    "window",
                    format!("no window given and no sidecar {}", side.display()),
                ));
            }
            read_window(&side)?
        }
    };
    parse_pattern(&text, window)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

/// A numeric table; every cell is formatted with [`format_value`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            comments: Vec::new(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(mut self, c: impl Into<String>) -> Self {
        self.comments.push(c.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = comment_block(&self.comments);
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv())
    }
}

/// Read a table written by [`Table::write`]; `NaN` cells are kept.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .zip(&header)
            .map(|(f, h)| {
                f.parse::<f64>()
                    .map_err(|_| Error::InvalidPattern(format!("field `{h}`: cannot parse `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let comments = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    Ok(Table { comments, header, rows })
}

fn params_comment<T: Serialize>(name: &str, params: &T) -> String {
    format!("{name} {}", serde_json::to_string(params).expect("parameters serialize"))
}

/// `abscissa,value,count`, parameters echoed as a JSON comment.
pub fn curve_table(c: &SummaryCurve) -> Table {
    let mut t = Table::new(&["abscissa", "value", "count"]).comment(params_comment(&c.name, &c.parameters));
    for w in &c.warnings {
        t.comments.push(format!("warning: {w}"));
    }
    for k in 0..c.len() {
        t.push(vec![c.grid[k], c.value(k), c.counts[k] as f64]);
    }
    t
}

/// Long form `angle,r,value`, with a `polar` column in 3D.
pub fn curve2d_table(c: &SummaryCurve2D) -> Table {
    let three = !c.polar.is_empty();
    let header: &[&str] = if three {
        &["angle", "polar", "r", "value"]
    } else {
        &["angle", "r", "value"]
    };
    let mut t = Table::new(header).comment(params_comment(&c.name, &c.parameters));
    for w in &c.warnings {
        t.comments.push(format!("warning: {w}"));
    }
    let np = c.polar.len().max(1);
    for a in 0..c.angles.len() {
        for p in 0..np {
            for k in 0..c.r.len() {
                let v = c.get(a, p, k).unwrap_or(f64::NAN);
                if three {
                    t.push(vec![c.angles[a], c.polar[p], c.r[k], v]);
                } else {
                    t.push(vec![c.angles[a], c.r[k], v]);
                }
            }
        }
    }
    t
}

/// `p1,p2,omega1,omega2,value` in storage order.
pub fn periodogram_table(g: &PeriodogramGrid) -> Table {
    let params = serde_json::json!({
        "pmax": g.pmax,
        "lengths": g.lengths,
        "n": g.n,
        "intensity": g.intensity,
        "standardized": g.standardized,
        "smoothing": g.smoothing,
    });
    let mut t = Table::new(&["p1", "p2", "omega1", "omega2", "value"]).comment(params_comment("periodogram", &params));
    for (p1, p2) in g.indices() {
        let w = g.frequency(p1, p2);
        t.push(vec![p1 as f64, p2 as f64, w[0], w[1], g.get(p1, p2).unwrap_or(f64::NAN)]);
    }
    t
}

/// Rows of `(x, y)` pairs under a two-column header.
pub fn pairs_table(header: [&str; 2], rows: &[(f64, f64)]) -> Table {
    let mut t = Table::new(&header);
    for &(a, b) in rows {
        t.push(vec![a, b]);
    }
    t
}

/// Rosenberg `theta,pbar` with `theta` in radians.
pub fn rosenberg_table(c: &SummaryCurve) -> Table {
    let mut t = Table::new(&["theta", "pbar"]).comment(params_comment(&c.name, &c.parameters));
    for k in 0..c.len() {
        t.push(vec![c.grid[k], c.value(k)]);
    }
    t
}

/// CWT energy as `scale,angle,energy`.
pub fn cwt_table(e: &SummaryCurve2D) -> Table {
    let mut t = Table::new(&["scale", "angle", "energy"]).comment(params_comment(&e.name, &e.parameters));
    for (k, &s) in e.r.iter().enumerate() {
        for (a, &th) in e.angles.iter().enumerate() {
            t.push(vec![s, th, e.get(a, 0, k).unwrap_or(f64::NAN)]);
        }
    }
    t
}
