//! Run records, criterion checks and their CSV / JSON / SVG emission.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::DriverError;

pub const CSV_VERSION: &str = "# fembem-bench csv v1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub volume: f64,
    pub bem: f64,
    pub solve: f64,
    pub error: f64,
}

/// One (formulation, k, level, p) run. Fields that an experiment does not
/// measure are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub formulation: String,
    pub label: String,
    pub geometry: String,
    pub coefficients: String,
    pub k: f64,
    pub level: usize,
    pub p: usize,
    pub h_max: f64,
    pub kh_over_p: f64,
    pub n_volume: usize,
    pub n_w: usize,
    pub n_z: usize,
    pub penalty_a: f64,
    pub penalty_b: f64,
    pub penalty_d: f64,
    pub realization: String,
    pub mass_weight: String,
    pub solver: String,
    pub seed: u64,
    pub residual: Option<f64>,
    pub error: Option<f64>,
    pub best_error: Option<f64>,
    pub ratio: Option<f64>,
    pub eoc: Option<f64>,
    pub garding_eig: Option<f64>,
    pub garding_eps: Option<f64>,
    pub norm_t: Option<f64>,
    pub norm_t_theta: Option<f64>,
    pub inverse_constant: Option<f64>,
    pub jump_error: Option<f64>,
    pub calderon_residual: Option<f64>,
    pub adjoint_residual: Option<f64>,
    pub filter_identity: Option<f64>,
    pub filter_mean: Option<f64>,
    pub filter_constant: Option<f64>,
    pub filter_reference: Option<f64>,
    pub valid: bool,
    /// wall times; not part of the CSV so that it stays reproducible
    #[serde(skip)]
    pub timings: Timings,
}

impl RunRecord {
    pub fn blank(experiment: &str) -> RunRecord {
        RunRecord {
            experiment: experiment.into(),
            formulation: String::new(),
            label: String::new(),
            geometry: String::new(),
            coefficients: String::new(),
            k: 0.0,
            level: 0,
            p: 0,
            h_max: 0.0,
            kh_over_p: 0.0,
            n_volume: 0,
            n_w: 0,
            n_z: 0,
            penalty_a: 0.0,
            penalty_b: 0.0,
            penalty_d: 0.0,
            realization: String::new(),
            mass_weight: String::new(),
            solver: String::new(),
            seed: 0,
            residual: None,
            error: None,
            best_error: None,
            ratio: None,
            eoc: None,
            garding_eig: None,
            garding_eps: None,
            norm_t: None,
            norm_t_theta: None,
            inverse_constant: None,
            jump_error: None,
            calderon_residual: None,
            adjoint_residual: None,
            filter_identity: None,
            filter_mean: None,
            filter_constant: None,
            filter_reference: None,
            valid: true,
            timings: Timings::default(),
        }
    }
}

pub const COLUMNS: [&str; 38] = [
    "experiment",
    "formulation",
    "label",
    "geometry",
    "coefficients",
    "k",
    "level",
    "p",
    "h_max",
    "kh_over_p",
    "n_volume",
    "n_w",
    "n_z",
    "penalty_a",
    "penalty_b",
    "penalty_d",
    "realization",
    "mass_weight",
    "solver",
    "seed",
    "residual",
    "error",
    "best_error",
    "ratio",
    "eoc",
    "garding_eig",
    "garding_eps",
    "norm_t",
    "norm_t_theta",
    "inverse_constant",
    "jump_error",
    "calderon_residual",
    "adjoint_residual",
    "filter_identity",
    "filter_mean",
    "filter_constant",
    "filter_reference",
    "valid",
];

pub fn to_csv(records: &[RunRecord]) -> Result<String, DriverError> {
    if records.is_empty() {
        return Err(DriverError::Empty);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| DriverError::Csv(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| DriverError::Csv(e.to_string()))?;
    Ok(format!("{CSV_VERSION}\n{}", String::from_utf8(body).expect("utf-8")))
}

pub fn from_csv(text: &str) -> Result<Vec<RunRecord>, DriverError> {
    if text.lines().next() != Some(CSV_VERSION) {
        return Err(DriverError::Csv("missing or unknown version header".into()));
    }
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| DriverError::Csv(e.to_string()))?;
    if !header.iter().eq(COLUMNS) {
        return Err(DriverError::Csv("column mismatch".into()));
    }
    rd.deserialize().map(|r| r.map_err(|e| DriverError::Csv(e.to_string()))).collect()
}

/// One asserted criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// human-readable bound, e.g. "<= 1e-4" or "in [1.7, 2.3]"
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, max: f64) -> Check {
        Check { name: name.into(), value, bound: format!("<= {max:e}"), pass: value <= max }
    }

    pub fn at_least(name: impl Into<String>, value: f64, min: f64) -> Check {
        Check { name: name.into(), value, bound: format!(">= {min:e}"), pass: value >= min }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Check {
        Check { name: name.into(), value, bound: format!("in [{lo}, {hi}]"), pass: (lo..=hi).contains(&value) }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {:.6e} {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.value, self.bound)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub records: Vec<RunRecord>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// A log-log plot series.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// slopes of the reference triangles
    pub slopes: Vec<f64>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// SVG log-log plot with reference-slope triangles.
pub fn svg_plot(plot: &Plot) -> Result<String, DriverError> {
    let pts: Vec<(f64, f64)> =
        plot.series.iter().flat_map(|s| s.points.iter().copied()).filter(|&(x, y)| x > 0.0 && y > 0.0).collect();
    if pts.is_empty() {
        return Err(DriverError::Empty);
    }
    let (w, h, m) = (640.0, 480.0, 70.0);
    let lx: Vec<f64> = pts.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.08).max(0.1);
        ((lo - pad).floor(), (hi + pad).ceil())
    };
    let (x0, x1) = span(&lx);
    let (y0, y1) = span(&ly);
    let sx = |x: f64| m + (x.log10() - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y.log10() - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, esc(&plot.title));
    let _ = writeln!(s, r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * m, h - 2.0 * m);
    for d in (x0 as i32)..=(x1 as i32) {
        let x = sx(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{m}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, h - m);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#, h - m + 16.0);
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = sy(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{m}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, w - m);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, m - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 20.0, esc(&plot.x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        esc(&plot.y_label)
    );
    for (i, ser) in plot.series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let path: Vec<String> =
            ser.points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"{dash}/>"#, path.join(" "));
        for p in &path {
            let (x, y) = p.split_once(',').expect("pair");
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{c}"/>"#);
        }
        let ly = m + 16.0 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="1.5"{dash}/>"#, w - m - 150.0, w - m - 125.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - m - 120.0, ly + 4.0, esc(&ser.name));
    }
    // triangles anchored below the lowest point, one decade in x wide at most
    let (xa, xb) = (x0 + 0.15 * (x1 - x0), x0 + 0.15 * (x1 - x0) + ((x1 - x0) * 0.25).min(1.0));
    for (i, &slope) in plot.slopes.iter().enumerate() {
        let ya = y0 + 0.1 * (y1 - y0) + 0.12 * i as f64 * (y1 - y0);
        let yb = ya + slope * (xb - xa);
        let (a, b) = (10f64.powf(xa), 10f64.powf(xb));
        let (ca, cb) = (10f64.powf(ya), 10f64.powf(yb));
        let _ = writeln!(
            s,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="black"/>"#,
            sx(a),
            sy(ca),
            sx(b),
            sy(ca),
            sx(b),
            sy(cb)
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{slope}</text>"#, sx(b) + 4.0, 0.5 * (sy(ca) + sy(cb)) + 4.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Default plot of a report: error and best approximation against h for
/// convergence studies, the main measured quantity against k otherwise.
pub fn default_plot(report: &Report) -> Plot {
    let mut series = Vec::new();
    let mut slopes = Vec::new();
    let mut forms: Vec<&str> = report.records.iter().map(|r| r.formulation.as_str()).collect();
    forms.dedup();
    forms.sort();
    forms.dedup();
    let pick = |r: &RunRecord| -> Option<(String, f64)> {
        [
            ("ratio", r.ratio),
            ("lambda_min", r.garding_eig),
            ("||T + Theta||", r.norm_t_theta),
            ("inverse constant", r.inverse_constant),
            ("jump error", r.jump_error),
            ("calderon residual", r.calderon_residual),
            ("adjoint residual", r.adjoint_residual),
            ("filter constant", r.filter_constant),
        ]
        .into_iter()
        .find_map(|(n, v)| v.map(|v| (n.to_string(), v)))
    };
    let (title, x_label, y_label) = if report.experiment == "converge" {
        for f in &forms {
            let rs: Vec<&RunRecord> = report.records.iter().filter(|r| r.formulation == *f).collect();
            series.push(Series { name: format!("{f} error"), points: rs.iter().filter_map(|r| Some((r.h_max, r.error?))).collect(), dashed: false });
            series.push(Series {
                name: format!("{f} best"),
                points: rs.iter().filter_map(|r| Some((r.h_max, r.best_error?))).collect(),
                dashed: true,
            });
            if let Some(r) = rs.first() {
                if !slopes.contains(&(r.p as f64)) {
                    slopes.push(r.p as f64);
                }
            }
        }
        ("h-convergence".to_string(), "h".to_string(), "error".to_string())
    } else {
        let by_level = matches!(report.experiment.as_str(), "jumps" | "calderon" | "inverse");
        let mut name = String::from("value");
        for f in &forms {
            let mut by_label: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
            for r in report.records.iter().filter(|r| r.formulation == *f) {
                if let Some((n, v)) = pick(r) {
                    name = n;
                    let x = if by_level { r.h_max } else { r.k };
                    match by_label.iter_mut().find(|(l, _)| *l == r.label) {
                        Some((_, pts)) => pts.push((x, v)),
                        None => by_label.push((r.label.clone(), vec![(x, v)])),
                    }
                }
            }
            for (l, points) in by_label {
                let n = if l.is_empty() { f.to_string() } else { format!("{f} {l}") };
                series.push(Series { name: n, points, dashed: !l.is_empty() });
            }
        }
        if by_level && report.experiment != "inverse" {
            slopes.push(4.0);
        }
        (report.experiment.clone(), if by_level { "h" } else { "k" }.to_string(), name)
    };
    Plot { title, x_label, y_label, series, slopes }
}

/// Writes `<dir>/<experiment>.{csv,json,svg}` and the wall times to
/// `<dir>/<experiment>_timings.json`. Returns the written paths.
pub fn emit_results(report: &Report, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, DriverError> {
    if report.records.is_empty() {
        return Err(DriverError::Empty);
    }
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    let stem = &report.experiment;
    for f in formats {
        let (path, body) = match f {
            Format::Csv => (dir.join(format!("{stem}.csv")), to_csv(&report.records)?),
            Format::Json => (dir.join(format!("{stem}.json")), serde_json::to_string_pretty(report).expect("serializable") + "\n"),
            Format::Svg => (dir.join(format!("{stem}.svg")), svg_plot(&default_plot(report))?),
        };
        std::fs::write(&path, body)?;
        out.push(path);
    }
    let timings: Vec<&Timings> = report.records.iter().map(|r| &r.timings).collect();
    let path = dir.join(format!("{stem}_timings.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&timings).expect("serializable") + "\n")?;
    out.push(path);
    Ok(out)
}
