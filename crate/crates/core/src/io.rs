//! CSV files with `# key: value` metadata lines on top.
//!
//! Numbers are written with Rust's shortest round-trip formatting, `.` as
//! the decimal point and `inf` for infinities, so re-reading a file gives
//! back the exact values.

use crate::error::Result;
use crate::ext::{fmt_ext, parse_ext};
use crate::moments::{FiniteMomentGrid, MomentTable};
use crate::montecarlo::EcdfEstimate;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Read, Write};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered header metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn new() -> Self {
        Metadata(vec![(
            "version".to_string(),
            format!("sustain-core {VERSION}"),
        )])
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }

    /// Reads leading `# key: value` lines; stops at the first other line.
    pub fn read_from(text: &str) -> Metadata {
        let entries = text
            .lines()
            .map_while(|l| l.strip_prefix("# "))
            .filter_map(|l| l.split_once(": "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Metadata(entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub r: u32,
    #[serde(with = "crate::ext")]
    pub gamma_r: f64,
    #[serde(with = "crate::ext")]
    pub beta_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteMomentRow {
    pub r: u32,
    pub n: u32,
    #[serde(with = "crate::ext")]
    pub beta_r_n: f64,
}

pub fn moment_rows(table: &MomentTable) -> Vec<MomentRow> {
    (1..=table.rmax())
        .map(|r| MomentRow {
            r,
            gamma_r: table.gamma(r),
            beta_r: table.beta(r),
        })
        .collect()
}

pub fn finite_moment_rows(grid: &FiniteMomentGrid) -> Vec<FiniteMomentRow> {
    let mut rows = Vec::new();
    for r in 1..=grid.rmax() {
        for n in 1..=grid.nmax() {
            rows.push(FiniteMomentRow {
                r,
                n,
                beta_r_n: grid.beta(r, n),
            });
        }
    }
    rows
}

/// Writes metadata followed by serde rows.
pub fn write_rows<W: Write, T: Serialize>(w: &mut W, meta: &Metadata, rows: &[T]) -> Result<()> {
    meta.write_to(w)?;
    let mut csv = csv::Writer::from_writer(w);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>> {
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let mut out = Vec::new();
    for row in csv.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// A free-form table: a header row and string cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn write_csv<W: Write>(&self, w: &mut W, meta: &Metadata) -> Result<()> {
        meta.write_to(w)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.header)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<TextTable> {
        let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let header = csv.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in csv.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(TextTable { header, rows })
    }

    /// Numeric view of a cell; blank cells are `None`.
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.rows
            .get(row)
            .and_then(|r| r.get(col))
            .and_then(|s| parse_ext(s))
    }
}

/// Formats an optional number for a CSV cell.
pub fn cell(v: Option<f64>) -> String {
    v.map(fmt_ext).unwrap_or_default()
}

/// Sample file: metadata, a `z` header, then one value per line.
pub fn write_samples<W: Write>(w: &mut W, est: &EcdfEstimate) -> Result<()> {
    let truncation = serde_json::to_string(&est.config.truncation)?;
    let meta = Metadata::new()
        .with("spec", est.spec)
        .with("seed", est.config.seed)
        .with("replicates", est.replicates())
        .with("truncation", truncation)
        .with("max_terms_used", est.max_terms_used)
        .with("generator", &est.generator);
    meta.write_to(w)?;
    writeln!(w, "z")?;
    for z in &est.samples {
        writeln!(w, "{}", fmt_ext(*z))?;
    }
    Ok(())
}

pub fn read_samples<R: BufRead>(r: R) -> Result<(Metadata, Vec<f64>)> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text)?;
    let meta = Metadata::read_from(&text);
    let mut samples = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v = parse_ext(line)
            .ok_or_else(|| crate::Error::Parse(format!("bad sample line {line:?}")))?;
        samples.push(v);
    }
    Ok((meta, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{finite_moments, infinite_moments};
    use crate::montecarlo::{sample_z, SimConfig};
    use crate::shock::ShockSpec;

    #[test]
    fn moment_csv_round_trip() {
        let t = infinite_moments(&ShockSpec::lognormal(3.17, 1.75).unwrap(), 6).unwrap();
        let rows = moment_rows(&t);
        let mut buf = Vec::new();
        write_rows(&mut buf, &Metadata::new().with("spec", t.spec), &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains(",inf\n"));
        assert!(text.starts_with("# version: "));
        let back: Vec<MomentRow> = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        assert_eq!(
            Metadata::read_from(&text).get("spec"),
            Some(t.spec.to_string().as_str())
        );
    }

    #[test]
    fn finite_csv_round_trip() {
        let g = finite_moments(&ShockSpec::gamma(3.0, 4.0).unwrap(), 4, 3).unwrap();
        let rows = finite_moment_rows(&g);
        assert_eq!(rows.len(), 12);
        let mut buf = Vec::new();
        write_rows(&mut buf, &Metadata::new(), &rows).unwrap();
        let back: Vec<FiniteMomentRow> = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn samples_round_trip() {
        let est = sample_z(
            &ShockSpec::pareto(3.0, 0.9).unwrap(),
            &SimConfig::fixed(5, 100, 2),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_samples(&mut buf, &est).unwrap();
        let (meta, samples) = read_samples(buf.as_slice()).unwrap();
        assert_eq!(samples, est.samples);
        assert_eq!(meta.get("seed"), Some("2"));
        assert_eq!(meta.get("replicates"), Some("100"));
    }

    #[test]
    fn text_table_round_trip() {
        let t = TextTable {
            header: vec!["x".into(), "a".into()],
            rows: vec![
                vec!["1.5".into(), cell(Some(f64::INFINITY))],
                vec!["2".into(), cell(None)],
            ],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf, &Metadata::new()).unwrap();
        let back = TextTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.value(0, 1), Some(f64::INFINITY));
        assert_eq!(back.value(1, 1), None);
    }
}
