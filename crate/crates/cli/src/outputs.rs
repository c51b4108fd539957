//! Output-directory handling, manifests, CSV writers, and best-effort SVG
//! plots.
//!
//! Every command resolves one output directory, refuses to overwrite
//! existing files unless `--force` is given, and writes a manifest naming
//! every file it is about to produce before any work starts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CmdError;

pub const OUT_DIR_ENV: &str = "PSURR_OUT_DIR";

/// Resolves the output directory: `--out` wins, then `$PSURR_OUT_DIR/<cmd>`,
/// then `./psurr_out/<cmd>`.
pub fn resolve_out_dir(explicit: Option<&Path>, command: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("psurr_out"));
            root.join(command)
        }
    }
}

/// Creates the directory and enforces the overwrite rule for the files the
/// command plans to write.
pub fn prepare_out_dir(dir: &Path, planned: &[&str], force: bool) -> Result<(), CmdError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CmdError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    if !force {
        for name in planned {
            let path = dir.join(name);
            if path.exists() {
                return Err(CmdError::usage(format!(
                    "{} already exists; pass --force to overwrite",
                    path.display()
                )));
            }
        }
    }
    Ok(())
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CmdError> {
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CmdError::runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Run manifest: config snapshot, seeds, version stamp, planned outputs.
/// Written before any work starts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub git_hash: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: Option<RunConfig>, seeds: Vec<u64>, outputs: &[&str]) -> Self {
        Self {
            format: "psurr-manifest".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            git_hash: option_env!("PSURR_GIT_HASH").unwrap_or("unknown").into(),
            command: command.into(),
            config,
            seeds,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CmdError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CmdError::runtime(format!("manifest: {e}")))?;
        write_file(dir, "manifest.json", &json)?;
        Ok(())
    }
}

/// Builds a CSV document: header row plus one row per record, `,` separator,
/// `.` decimal point, LF line endings.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self { buf, columns: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "csv row width mismatch");
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Shortest-round-trip decimal form of an `f64` (what `Display` produces).
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Minimal line-plot SVG: one polyline per series over a shared axis box.
/// Best-effort output; not part of any acceptance surface.
pub fn line_svg(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 48.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

    let points: Vec<(f64, f64)> =
        series.iter().flat_map(|(_, pts)| pts.iter().copied()).collect();
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &points {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if !x_lo.is_finite() || x_lo == x_hi {
        x_hi = x_lo + 1.0;
    }
    if !y_lo.is_finite() || y_lo == y_hi {
        y_hi = y_lo + 1.0;
    }
    let sx = |x: f64| M + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * M);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>",
        W / 2.0
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        W - 2.0 * M,
        H - 2.0 * M
    );
    for (label, x, y, anchor) in [
        (fmt_f64(x_lo), M, H - M + 16.0, "middle"),
        (fmt_f64(x_hi), W - M, H - M + 16.0, "middle"),
        (fmt_f64(y_lo), M - 6.0, H - M, "end"),
        (fmt_f64(y_hi), M - 6.0, M + 4.0, "end"),
    ] {
        let _ = writeln!(
            svg,
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"{anchor}\" font-size=\"11\">{label}</text>"
        );
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> =
            pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.join(" ")
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{name}</text>",
            W - M - 120.0,
            M + 16.0 + 14.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
