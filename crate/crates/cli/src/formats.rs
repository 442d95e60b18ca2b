//! File formats: delimited score text, JSON records, binary model
//! files, and standalone SVG charts.
//!
//! Score files are tab-separated text with `#`-prefixed header
//! comments (the first of which always carries the source config
//! hashes), so every number in a report is diff-able and traceable.
//! Multi-sample cells join their samples with `;`.

use std::fs;
use std::io;
use std::path::Path;

use coinop_core::codec::CodecError;
use coinop_core::features::{BackgroundModel, ClassModel, LshModel};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed table {path}: {detail}")]
    Table { path: String, detail: String },
    #[error("model file {path}: {source}")]
    Model {
        path: String,
        #[source]
        source: CodecError,
    },
    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path, source: io::Error) -> FormatError {
    FormatError::Io { path: path.display().to_string(), source }
}

// ---------------------------------------------------------------------------
// Delimited text tables.
// ---------------------------------------------------------------------------

/// Writes a tab-separated table: `#` comment lines, one header row,
/// then data rows.
pub fn write_tsv(
    path: &Path,
    comments: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), FormatError> {
    let mut text = String::new();
    for comment in comments {
        text.push_str("# ");
        text.push_str(comment);
        text.push('\n');
    }
    text.push_str(&header.join("\t"));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join("\t"));
        text.push('\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Parsed tab-separated table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_tsv(path: &Path) -> Result<Table, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut comments = Vec::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(comment) = line.strip_prefix("# ") {
            comments.push(comment.to_string());
            continue;
        }
        let cells: Vec<String> = line.split('\t').map(str::to_string).collect();
        match &header {
            None => header = Some(cells),
            Some(h) => {
                if cells.len() != h.len() {
                    return Err(FormatError::Table {
                        path: path.display().to_string(),
                        detail: format!(
                            "row has {} cells, header has {}",
                            cells.len(),
                            h.len()
                        ),
                    });
                }
                rows.push(cells);
            }
        }
    }
    let header = header.ok_or_else(|| FormatError::Table {
        path: path.display().to_string(),
        detail: "missing header row".to_string(),
    })?;
    Ok(Table { comments, header, rows })
}

/// Joins score samples into one diff-able cell. Floats print in
/// shortest round-trip form, so parsing the cell back recovers the
/// exact values.
pub fn join_samples(samples: &[f64]) -> String {
    let mut out = String::new();
    for (i, s) in samples.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        out.push_str(&format!("{s}"));
    }
    out
}

pub fn split_samples(cell: &str) -> Result<Vec<f64>, String> {
    cell.split(';')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad sample `{s}`: {e}")))
        .collect()
}

// ---------------------------------------------------------------------------
// JSON records.
// ---------------------------------------------------------------------------

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| FormatError::Json { path: path.display().to_string(), source: e })?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| FormatError::Json { path: path.display().to_string(), source: e })
}

// ---------------------------------------------------------------------------
// Binary model files.
// ---------------------------------------------------------------------------

fn model_err(path: &Path, source: CodecError) -> FormatError {
    FormatError::Model { path: path.display().to_string(), source }
}

pub fn write_background(path: &Path, model: &BackgroundModel) -> Result<(), FormatError> {
    let mut bytes = Vec::new();
    model.encode(&mut bytes);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn read_background(path: &Path) -> Result<BackgroundModel, FormatError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    BackgroundModel::decode(&bytes).map_err(|e| model_err(path, e))
}

pub fn write_classes(path: &Path, model: &ClassModel) -> Result<(), FormatError> {
    let mut bytes = Vec::new();
    model.encode(&mut bytes);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn read_classes(path: &Path) -> Result<ClassModel, FormatError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    ClassModel::decode(&bytes).map_err(|e| model_err(path, e))
}

pub fn write_lsh(path: &Path, model: &LshModel) -> Result<(), FormatError> {
    let mut bytes = Vec::new();
    model.encode(&mut bytes);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn read_lsh(path: &Path) -> Result<LshModel, FormatError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    LshModel::decode(&bytes).map_err(|e| model_err(path, e))
}

// ---------------------------------------------------------------------------
// SVG charts.
// ---------------------------------------------------------------------------

const CHART_W: f64 = 640.0;
const CHART_H: f64 = 400.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] =
    ["#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#7f8c8d", "#2c3e50"];

fn svg_head(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" ",
            "text-anchor=\"middle\">{title}</text>\n"
        ),
        w = CHART_W,
        h = CHART_H,
        tx = CHART_W / 2.0,
        title = title,
    )
}

fn axes() -> String {
    let x0 = MARGIN;
    let y0 = CHART_H - MARGIN;
    let x1 = CHART_W - MARGIN;
    let y1 = MARGIN;
    format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    )
}

fn plot_x(unit: f64) -> f64 {
    MARGIN + unit * (CHART_W - 2.0 * MARGIN)
}

fn plot_y(unit: f64) -> f64 {
    (CHART_H - MARGIN) - unit * (CHART_H - 2.0 * MARGIN)
}

/// Step chart of score-distribution curves: each series is `(label,
/// breakpoints)` with breakpoints `(x, f(x))` ascending in `x` over
/// [0, 1]. Curves start at `f(0) = value before the first breakpoint`
/// and drop after each breakpoint.
pub fn svg_step_chart(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut svg = svg_head(title);
    svg.push_str(&axes());
    for (i, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        let mut level = 1.0; // every curve starts at f(0) = 1 on its own scores
        d.push_str(&format!("M {:.2} {:.2}", plot_x(0.0), plot_y(level)));
        for &(x, fx) in points {
            let cx = x.clamp(0.0, 1.0);
            d.push_str(&format!(" L {:.2} {:.2}", plot_x(cx), plot_y(level)));
            d.push_str(&format!(" L {:.2} {:.2}", plot_x(cx), plot_y(fx)));
            level = fx;
        }
        d.push_str(&format!(" L {:.2} {:.2}", plot_x(1.0), plot_y(level)));
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));
        let ly = MARGIN + 16.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{x}\" y=\"{y}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>\n",
            x = CHART_W - MARGIN - 120.0,
            y = ly,
            tx = CHART_W - MARGIN - 106.0,
            ty = ly + 9.0,
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Bar chart of labeled values in [0, max]; bars are scaled to the
/// largest value.
pub fn svg_bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let mut svg = svg_head(title);
    svg.push_str(&axes());
    let top = bars.iter().map(|(_, v)| *v).fold(0.0f64, f64::max).max(1e-12);
    let slot = (CHART_W - 2.0 * MARGIN) / bars.len().max(1) as f64;
    for (i, (label, value)) in bars.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let h = (value / top).clamp(0.0, 1.0);
        let x = MARGIN + slot * i as f64 + slot * 0.15;
        let y = plot_y(h);
        svg.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{color}\"/>\n",
            w = slot * 0.7,
            h = plot_y(0.0) - y,
        ));
        svg.push_str(&format!(
            "<text x=\"{tx:.2}\" y=\"{ty:.2}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"middle\">{label}</text>\n",
            tx = MARGIN + slot * (i as f64 + 0.5),
            ty = CHART_H - MARGIN + 14.0,
        ));
        svg.push_str(&format!(
            "<text x=\"{tx:.2}\" y=\"{ty:.2}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"middle\">{value:.3}</text>\n",
            tx = MARGIN + slot * (i as f64 + 0.5),
            ty = y - 4.0,
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}
