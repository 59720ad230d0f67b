//! CSV, JSON and gnuplot output for density reports and histograms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{DensityReport, Histogram, JointHistogram};

/// Schema tag on the first line of every output file.
pub const SCHEMA: &str = "shimura-report v1";

pub const CSV_HEADER: &str = "x,count,pi,ratio,reference";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub x: String,
    pub count: u64,
    pub pi: u64,
    pub ratio: f64,
    pub reference: Option<f64>,
}

/// One output file: a named series of rows plus header metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub schema: &'static str,
    pub command: String,
    pub series: String,
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    #[serde(skip)]
    pub stem: String,
}

impl Table {
    pub fn new(command: &str, stem: &str, series: &str) -> Self {
        Table {
            schema: SCHEMA,
            command: command.into(),
            series: series.into(),
            meta: BTreeMap::new(),
            rows: Vec::new(),
            stem: stem.into(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.into(), value.to_string());
        self
    }

    pub fn from_density(command: &str, stem: &str, r: &DensityReport) -> Self {
        let mut t = Table::new(command, stem, &r.name);
        if !r.excluded_primes.is_empty() {
            let list: Vec<String> = r.excluded_primes.iter().map(u64::to_string).collect();
            t = t.with_meta("excluded", list.join(";"));
        }
        t.rows = (0..r.checkpoints.len())
            .map(|i| Row {
                x: r.checkpoints[i].to_string(),
                count: r.counts[i],
                pi: r.pi_values[i],
                ratio: r.ratios[i],
                reference: r.reference,
            })
            .collect();
        t
    }

    /// One row per bin `[lo, hi)`; `pi` is the in-domain sample count.
    pub fn from_histogram(command: &str, stem: &str, h: &Histogram) -> Self {
        let inside: u64 = h.counts.iter().sum();
        let mut t = Table::new(command, stem, &h.name)
            .with_meta("bins", h.counts.len())
            .with_meta("out_of_domain", h.out_of_domain);
        t.rows = (0..h.counts.len())
            .map(|i| Row {
                x: format!("{}:{}", h.bin_edges[i], h.bin_edges[i + 1]),
                count: h.counts[i],
                pi: inside,
                ratio: h.empirical_mass[i],
                reference: Some(h.reference_mass[i]),
            })
            .collect();
        t
    }

    /// One row per cell, `x` as `i:j` bin indices (row from the first form).
    pub fn from_joint(command: &str, stem: &str, h: &JointHistogram) -> Self {
        let inside: u64 = h.counts.iter().flatten().sum();
        let bins = h.counts.len();
        let mut t = Table::new(command, stem, &h.name)
            .with_meta("bins", bins)
            .with_meta("out_of_domain", h.out_of_domain);
        for i in 0..bins {
            for j in 0..bins {
                t.rows.push(Row {
                    x: format!("{i}:{j}"),
                    count: h.counts[i][j],
                    pi: inside,
                    ratio: h.empirical_mass[i][j],
                    reference: Some(h.reference_mass[i][j]),
                });
            }
        }
        t
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# {SCHEMA} command={} series={:?}", self.command, self.series);
        for (k, v) in &self.meta {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let reference = r.reference.map(|v| format!("{v:.12}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{:.12},{}", r.x, r.count, r.pi, r.ratio, reference);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tables serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Two-column `center mass` lines for a marginal histogram.
pub fn gnuplot_marginal(h: &Histogram) -> String {
    let mut out = format!("# {SCHEMA} {}\n# center empirical_mass\n", h.name);
    for (i, m) in h.empirical_mass.iter().enumerate() {
        let c = 0.5 * (h.bin_edges[i] + h.bin_edges[i + 1]);
        let _ = writeln!(out, "{c:.6} {m:.12}");
    }
    out
}

/// Three-column `center1 center2 mass` blocks for a joint histogram.
pub fn gnuplot_joint(h: &JointHistogram) -> String {
    let mut out = format!("# {SCHEMA} {}\n# center1 center2 empirical_mass\n", h.name);
    let center = |i: usize| 0.5 * (h.bin_edges[i] + h.bin_edges[i + 1]);
    for (i, row) in h.empirical_mass.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            let _ = writeln!(out, "{:.6} {:.6} {m:.12}", center(i), center(j));
        }
        out.push('\n');
    }
    out
}

/// Writes each table as `<stem>.<ext>` into `dir`, creating it if needed.
pub fn write_tables(dir: &Path, tables: &[Table], format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(format!("{}.{}", t.stem, format.extension()));
            fs::write(&path, t.render(format))?;
            Ok(path)
        })
        .collect()
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> DensityReport {
        DensityReport::from_events("demo", &[3, 5, 7, 11], &[true, false, true, false], &[5, 11], Some(0.5), vec![2])
    }

    #[test]
    fn csv_layout() {
        let csv = Table::from_density("stats thm4", "demo", &report()).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# shimura-report v1 command=stats thm4"));
        assert!(lines[0].contains("excluded=2"));
        assert_eq!(lines[1], CSV_HEADER);
        assert_eq!(lines[2], "5,1,2,0.500000000000,0.500000000000");
        assert_eq!(lines[3], "11,2,4,0.500000000000,0.500000000000");
    }

    #[test]
    fn json_mirror() {
        let json = Table::from_density("stats thm4", "demo", &report()).to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["rows"][1]["count"], 2);
        assert_eq!(v["rows"][0]["x"], "5");
        assert_eq!(v["meta"]["excluded"], "2");
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table::from_density("c", "demo", &report());
        let paths = write_tables(dir.path(), &[t], Format::Json).unwrap();
        assert!(paths[0].ends_with("demo.json"));
        assert!(fs::read_to_string(&paths[0]).unwrap().contains("shimura-report v1"));
    }
}
