//! CSV and JSON serialisation of a [`Report`].
//!
//! Floats are written with 17 significant digits, undefined values as
//! `NaN`, and rows end in LF. Nothing time- or host-dependent is written, so
//! repeated runs produce identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;
use crate::run::Report;
use crate::scenario::Format;

pub const SPECTRUM_HEADER: [&str; 7] = [
    "detuning",
    "T",
    "R",
    "T_ind",
    "delta_T",
    "rel_superness",
    "saturation_flag",
];

/// `{:.16e}` with `NaN` for undefined values.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    float(x.unwrap_or(f64::NAN))
}

/// An in-memory table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: ToString>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        // Writing to a Vec cannot fail.
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Every CSV table of the report, keyed by file name, in a fixed order.
pub fn tables(report: &Report) -> Vec<(String, Table)> {
    let mut out = Vec::new();
    let single = report.series.len() == 1;
    for (i, s) in report.series.iter().enumerate() {
        let mut t = Table::new(SPECTRUM_HEADER);
        for p in &s.points {
            t.rows.push(vec![
                float(p.detuning),
                float(p.transmission),
                float(p.reflection),
                float(p.independent),
                float(p.delta_t),
                opt(p.relative),
                u8::from(p.saturated).to_string(),
            ]);
        }
        let name = if single {
            "spectrum.csv".to_string()
        } else {
            format!("spectrum_{i}.csv")
        };
        out.push((name, t));
    }
    if !report.peaks.is_empty() {
        let mut t = Table::new([
            "series",
            "lengths",
            "peak_detuning",
            "T",
            "T_ind",
            "delta_T",
            "rel_superness",
            "max_B_over_A",
        ]);
        for p in &report.peaks {
            t.rows.push(vec![
                p.series.to_string(),
                lengths(&p.lengths),
                float(p.point.detuning),
                float(p.point.transmission),
                float(p.point.independent),
                float(p.point.delta_t),
                opt(p.point.relative),
                float(p.max_b_over_a()),
            ]);
        }
        out.push(("superness_peaks.csv".into(), t));
    }
    if let Some(rows) = &report.length_scan {
        let mut t = Table::new([
            "N",
            "peak_detuning",
            "T",
            "peak_delta_T",
            "peak_rel_superness",
            "max_rel_superness",
        ]);
        for r in rows {
            t.rows.push(vec![
                r.n.to_string(),
                float(r.peak.detuning),
                float(r.peak.point.transmission),
                float(r.peak_delta_t()),
                opt(r.peak_relative()),
                opt(r.max_relative),
            ]);
        }
        out.push(("length_scan.csv".into(), t));
    }
    if let Some(r) = &report.reflection {
        let mut t = Table::new(
            std::iter::once("detuning".to_string()).chain(r.signatures.iter().map(|s| format!("R[{}]", s.label))),
        );
        for (i, x) in report.scenario.scan.values().into_iter().enumerate() {
            t.rows.push(
                std::iter::once(float(x))
                    .chain(r.spectra.iter().map(|v| float(v[i])))
                    .collect(),
            );
        }
        out.push(("reflection.csv".into(), t));

        let mut c = Table::new(["configuration", "recovered", "distance", "margin", "ambiguous"]);
        for (s, k) in r.signatures.iter().zip(&r.self_classification) {
            c.rows.push(vec![
                s.label.clone(),
                k.label.clone(),
                float(k.distance),
                float(k.margin),
                u8::from(k.ambiguous).to_string(),
            ]);
        }
        out.push(("classification.csv".into(), c));
    }
    if let Some(p) = &report.pathways {
        let mut t = Table::new(["bounces", "pathway", "amplitude_re", "amplitude_im"]);
        for w in &p.pathways {
            t.rows.push(vec![
                w.bounces.to_string(),
                w.descriptor(),
                float(w.amplitude.re),
                float(w.amplitude.im),
            ]);
        }
        out.push(("pathways.csv".into(), t));
        let mut c = Table::new(["max_bounces", "partial_re", "partial_im", "abs_error"]);
        for row in &p.convergence {
            c.rows.push(vec![
                row.max_bounces.to_string(),
                float(row.partial.re),
                float(row.partial.im),
                float(row.abs_error),
            ]);
        }
        out.push(("pathway_convergence.csv".into(), c));
    }
    out
}

fn lengths(ls: &[f64]) -> String {
    ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a crate::scenario::Scenario,
    files: Vec<String>,
    spectrum_columns: [&'static str; 7],
    saturated_points: usize,
    peaks: &'a [crate::run::PeakSummary],
    #[serde(skip_serializing_if = "Option::is_none")]
    length_scan: Option<&'a [supermode_core::analysis::LengthScanRow]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reflection: Option<ReflectionMeta<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pathways: Option<PathwayMeta<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<crate::run::OracleSummary>,
}

#[derive(Serialize)]
struct ReflectionMeta<'a> {
    signatures: &'a [crate::run::SignatureSummary],
    self_classification: &'a [supermode_core::analysis::Classification],
}

#[derive(Serialize)]
struct PathwayMeta<'a> {
    detuning: f64,
    lengths: &'a [f64],
    exact: supermode_core::Complex64,
    pathway_count: usize,
    constructive_phase: Option<f64>,
}

fn metadata(report: &Report, files: Vec<String>) -> Metadata<'_> {
    Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: &report.scenario,
        files,
        spectrum_columns: SPECTRUM_HEADER,
        saturated_points: report.saturated_points(),
        peaks: &report.peaks,
        length_scan: report.length_scan.as_deref(),
        reflection: report.reflection.as_ref().map(|r| ReflectionMeta {
            signatures: &r.signatures,
            self_classification: &r.self_classification,
        }),
        pathways: report.pathways.as_ref().map(|p| PathwayMeta {
            detuning: p.detuning,
            lengths: &p.lengths,
            exact: p.exact,
            pathway_count: p.pathways.len(),
            constructive_phase: p.constructive_phase,
        }),
        oracle: report.oracle,
    }
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Writes the report into `dir` and returns the files written.
pub fn write_report(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            let tables = tables(report);
            let mut names: Vec<String> = tables.iter().map(|(n, _)| n.clone()).collect();
            for (name, table) in &tables {
                written.push(write(dir.join(name), &table.to_csv())?);
            }
            names.push("metadata.json".into());
            let meta = metadata(report, names);
            written.push(write(dir.join("metadata.json"), &to_json(&meta))?);
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Full<'a> {
                metadata: Metadata<'a>,
                results: &'a Report,
            }
            let full = Full {
                metadata: metadata(report, vec!["results.json".into()]),
                results: report,
            };
            written.push(write(dir.join("results.json"), &to_json(&full))?);
        }
    }
    Ok(written)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(-2.5), "-2.5000000000000000e0");
        assert_eq!(float(f64::NAN), "NaN");
        let back: f64 = float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_uses_lf() {
        let mut t = Table::new(["a", "b"]);
        t.rows.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.to_csv(), "a,b\n1,2\n");
    }
}
