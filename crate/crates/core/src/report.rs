//! Polarity histograms and model comparison tables, as CSV and SVG.
//!
//! SVG output is written by hand with fixed-precision coordinates so the
//! same data always renders to the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::Algorithm;
use crate::corpus::Dataset;
use crate::evaluation::EvaluationReport;

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot build a histogram of an empty dataset")]
    EmptyDataset,
    #[error("record {0} has no polarity")]
    Unlabeled(String),
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("comparison table has no rows")]
    EmptyTable,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    fs::write(path, contents).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Equal-width bins over `[-1, 1]`; each bin is `[low, high)` except the
/// last, which also holds `1.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<Bin>,
}

fn edge(i: usize, bins: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / bins as f64
}

/// Bin index for `p`, decided against the same edges the CSV reports.
fn bin_index(p: f64, bins: usize) -> usize {
    let mut i = (((p + 1.0) / 2.0 * bins as f64).floor().max(0.0) as usize).min(bins - 1);
    while i + 1 < bins && p >= edge(i + 1, bins) {
        i += 1;
    }
    while i > 0 && p < edge(i, bins) {
        i -= 1;
    }
    i
}

pub fn histogram(polarities: &[f64], bins: usize) -> Result<Histogram, ReportError> {
    if bins < 2 {
        return Err(ReportError::TooFewBins(bins));
    }
    if polarities.is_empty() {
        return Err(ReportError::EmptyDataset);
    }
    let mut out: Vec<Bin> = (0..bins)
        .map(|i| Bin {
            low: edge(i, bins),
            high: edge(i + 1, bins),
            count: 0,
        })
        .collect();
    for &p in polarities {
        out[bin_index(p.clamp(-1.0, 1.0), bins)].count += 1;
    }
    Ok(Histogram { bins: out })
}

/// Histogram of a labeled dataset's polarity scores.
pub fn polarity_histogram(dataset: &Dataset, bins: usize) -> Result<Histogram, ReportError> {
    let polarities = dataset
        .records()
        .iter()
        .map(|r| r.polarity().ok_or_else(|| ReportError::Unlabeled(r.comment.id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    histogram(&polarities, bins)
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count\n");
        for b in &self.bins {
            let _ = writeln!(out, "{},{},{}", b.low, b.high, b.count);
        }
        out
    }

    pub fn to_svg(&self, title: &str) -> String {
        let (width, height) = (640.0, 400.0);
        let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
        let plot_w = width - left - right;
        let plot_h = height - top - bottom;
        let max = self.bins.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
        let bar_w = plot_w / self.bins.len() as f64;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
            width / 2.0,
            escape_xml(title)
        );
        for (i, b) in self.bins.iter().enumerate() {
            let h = b.count as f64 / max * plot_h;
            let _ = writeln!(
                s,
                r##"<rect class="bin" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0" stroke="white"><title>[{}, {}{}: {}</title></rect>"##,
                left + i as f64 * bar_w,
                top + plot_h - h,
                bar_w,
                h,
                b.low,
                b.high,
                if i + 1 == self.bins.len() { "]" } else { ")" },
                b.count
            );
        }
        axes(&mut s, left, top, plot_w, plot_h);
        for (x, label) in [(0.0, "-1"), (0.5, "0"), (1.0, "1")] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{label}</text>"#,
                left + x * plot_w,
                top + plot_h + 18.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">polarity</text>"#,
            left + plot_w / 2.0,
            height - 10.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{left}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="12" dx="-6">{}</text>"#,
            top + 4.0,
            max as usize
        );
        s.push_str("</svg>\n");
        s
    }
}

fn axes(s: &mut String, left: f64, top: f64, plot_w: f64, plot_h: f64) {
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.2}" stroke="black"/>"#,
        top + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
}

pub fn emit_polarity_histogram(
    dataset: &Dataset,
    bins: usize,
    title: &str,
    out_csv: &Path,
    out_svg: &Path,
) -> Result<Histogram, ReportError> {
    let h = polarity_histogram(dataset, bins)?;
    write_file(out_csv, &h.to_csv())?;
    write_file(out_svg, &h.to_svg(title))?;
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: Algorithm,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

/// One row per algorithm, in canonical order (NB, LR, SVM).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub dataset: String,
    /// Records in the dataset before splitting.
    pub size: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn from_reports(dataset: &str, size: usize, reports: &[EvaluationReport]) -> Self {
        let mut rows: Vec<ComparisonRow> = reports
            .iter()
            .map(|r| ComparisonRow {
                algorithm: r.algorithm,
                accuracy: r.accuracy,
                macro_precision: r.macro_avg.precision,
                macro_recall: r.macro_avg.recall,
                macro_f1: r.macro_avg.f1,
            })
            .collect();
        rows.sort_by_key(|r| r.algorithm);
        ComparisonTable {
            dataset: dataset.to_string(),
            size,
            rows,
        }
    }

    pub fn row(&self, algorithm: Algorithm) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,size,model,accuracy,macro_precision,macro_recall,macro_f1\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(&self.dataset),
                self.size,
                r.algorithm.short_name(),
                r.accuracy,
                r.macro_precision,
                r.macro_recall,
                r.macro_f1
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes") + "\n"
    }

    /// Accuracy bars on the left, grouped macro precision/recall/F1 bars on
    /// the right, both on a `[0, 1]` axis with 3-decimal value labels.
    pub fn to_svg(&self) -> Result<String, ReportError> {
        if self.rows.is_empty() {
            return Err(ReportError::EmptyTable);
        }
        const COLORS: [&str; 3] = ["#4c72b0", "#dd8452", "#55a868"];
        let (width, height) = (900.0, 420.0);
        let (top, plot_h) = (60.0, 300.0);
        let panels = [(60.0, 260.0), (380.0, 500.0)];
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
        );
        let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{} (n = {})</text>"#,
            width / 2.0,
            escape_xml(&self.dataset),
            self.size
        );
        let bar = |s: &mut String, class: &str, x: f64, w: f64, v: f64, color: &str| {
            let h = v.clamp(0.0, 1.0) * plot_h;
            let y = top + plot_h - h;
            let _ = writeln!(
                s,
                r#"<rect class="{class}" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{color}"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="10">{v:.3}</text>"#,
                x + w / 2.0,
                y - 4.0
            );
        };
        let label = |s: &mut String, x: f64, y: f64, text: &str| {
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{text}</text>"#
            );
        };
        for (left, plot_w) in panels {
            axes(&mut s, left, top, plot_w, plot_h);
            for tick in [0.0, 0.5, 1.0] {
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="10">{tick:.1}</text>"#,
                    left - 6.0,
                    top + plot_h - tick * plot_h + 3.0
                );
            }
        }
        let n = self.rows.len() as f64;
        let (left, plot_w) = panels[0];
        label(&mut s, left + plot_w / 2.0, top - 16.0, "Accuracy");
        let slot = plot_w / n;
        for (i, r) in self.rows.iter().enumerate() {
            let x = left + i as f64 * slot;
            bar(&mut s, "acc-bar", x + slot * 0.2, slot * 0.6, r.accuracy, COLORS[i % 3]);
            label(&mut s, x + slot / 2.0, top + plot_h + 18.0, r.algorithm.short_name());
        }
        let (left, plot_w) = panels[1];
        label(&mut s, left + plot_w / 2.0, top - 16.0, "Macro precision / recall / F1");
        let slot = plot_w / n;
        for (i, r) in self.rows.iter().enumerate() {
            let x = left + i as f64 * slot;
            let group_w = slot * 0.8;
            let w = group_w / 3.0;
            for (j, v) in [r.macro_precision, r.macro_recall, r.macro_f1].into_iter().enumerate() {
                bar(&mut s, "metric-bar", x + slot * 0.1 + j as f64 * w, w, v, COLORS[j]);
            }
            label(&mut s, x + slot / 2.0, top + plot_h + 18.0, r.algorithm.short_name());
        }
        for (j, name) in ["precision", "recall", "F1"].into_iter().enumerate() {
            let x = left + j as f64 * 110.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{}"/>"#,
                height - 30.0,
                COLORS[j]
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{name}</text>"#,
                x + 18.0,
                height - 20.0
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

pub fn emit_comparison_chart(table: &ComparisonTable, out_svg: &Path) -> Result<(), ReportError> {
    write_file(out_svg, &table.to_svg()?)
}
