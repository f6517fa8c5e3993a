//! Report schema and CSV tables.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// Bumped on any incompatible change to the JSON layout.
pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identity or estimate a check record refers to. Every tag has an entry in
/// `docs/lemma-index.md`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaTag {
    CauchyBinet,
    TransitionJacobian,
    DensityTransformation,
    UnitaryInvariance,
    DisjointChartIdentity,
    MetricAtOrigin,
    MetricDeterminant,
    Einstein,
    TotalVolume,
    PullbackDecomposition,
    GramInequalities,
    TailIntegral,
    ExtremalFamily,
    AlphaLowerBound,
    AlphaUpperBound,
    ThresholdNormalization,
    SingularDivergence,
}

impl LemmaTag {
    pub const ALL: [LemmaTag; 17] = [
        LemmaTag::CauchyBinet,
        LemmaTag::TransitionJacobian,
        LemmaTag::DensityTransformation,
        LemmaTag::UnitaryInvariance,
        LemmaTag::DisjointChartIdentity,
        LemmaTag::MetricAtOrigin,
        LemmaTag::MetricDeterminant,
        LemmaTag::Einstein,
        LemmaTag::TotalVolume,
        LemmaTag::PullbackDecomposition,
        LemmaTag::GramInequalities,
        LemmaTag::TailIntegral,
        LemmaTag::ExtremalFamily,
        LemmaTag::AlphaLowerBound,
        LemmaTag::AlphaUpperBound,
        LemmaTag::ThresholdNormalization,
        LemmaTag::SingularDivergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaTag::CauchyBinet => "cauchy-binet",
            LemmaTag::TransitionJacobian => "transition-jacobian",
            LemmaTag::DensityTransformation => "density-transformation",
            LemmaTag::UnitaryInvariance => "unitary-invariance",
            LemmaTag::DisjointChartIdentity => "disjoint-chart-identity",
            LemmaTag::MetricAtOrigin => "metric-at-origin",
            LemmaTag::MetricDeterminant => "metric-determinant",
            LemmaTag::Einstein => "einstein",
            LemmaTag::TotalVolume => "total-volume",
            LemmaTag::PullbackDecomposition => "pullback-decomposition",
            LemmaTag::GramInequalities => "gram-inequalities",
            LemmaTag::TailIntegral => "tail-integral",
            LemmaTag::ExtremalFamily => "extremal-family",
            LemmaTag::AlphaLowerBound => "alpha-lower-bound",
            LemmaTag::AlphaUpperBound => "alpha-upper-bound",
            LemmaTag::ThresholdNormalization => "threshold-normalization",
            LemmaTag::SingularDivergence => "singular-divergence",
        }
    }
}

/// How `value` is compared with `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `value <= tolerance`.
    AtMost,
    /// `value >= tolerance`.
    AtLeast,
    /// Boolean outcome; `value` is 1 or 0 and `tolerance` is 1.
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub tag: LemmaTag,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn at_most(name: impl Into<String>, tag: LemmaTag, value: f64, tolerance: f64) -> Self {
        // NaN never passes
        let passed = value <= tolerance;
        Self { name: name.into(), tag, value, tolerance, relation: Relation::AtMost, passed, note: None }
    }

    pub fn at_least(name: impl Into<String>, tag: LemmaTag, value: f64, tolerance: f64) -> Self {
        let passed = value >= tolerance;
        Self { name: name.into(), tag, value, tolerance, relation: Relation::AtLeast, passed, note: None }
    }

    pub fn holds(name: impl Into<String>, tag: LemmaTag, ok: bool) -> Self {
        Self {
            name: name.into(),
            tag,
            value: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            relation: Relation::Holds,
            passed: ok,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    pub config: RunConfig,
    pub records: Vec<CheckRecord>,
    pub passed: bool,
    /// Excluded from comparisons.
    pub timing: Timing,
}

impl Report {
    pub fn new(config: &RunConfig, records: Vec<CheckRecord>, wall_clock_seconds: f64) -> Self {
        let passed = !records.is_empty() && records.iter().all(|r| r.passed);
        Self {
            schema_version: SCHEMA_VERSION,
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: config.command.name().to_string(),
            config: config.clone(),
            records,
            passed,
            timing: Timing { wall_clock_seconds },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without its timing field, for comparisons.
    pub fn canonical_json(&self) -> String {
        // through the text form, exactly as a report read back from disk
        let value = serde_json::from_str(&self.to_json()).expect("report parses");
        canonical(&value)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.passed)
    }
}

fn canonical(value: &serde_json::Value) -> String {
    let mut v = value.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timing");
    }
    serde_json::to_string_pretty(&v).expect("value serializes")
}

/// Canonical form of a report file on disk, accepting any schema version.
pub fn canonical_json_of_file(path: &Path) -> std::io::Result<String> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    Ok(canonical(&value))
}

/// Raw per-sample or per-cell values written next to the report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn canonical_form_ignores_timing() {
        let c = RunConfig::defaults(Command::Volume);
        let rec = vec![CheckRecord::at_most("x", LemmaTag::TotalVolume, 0.1, 0.2)];
        let a = Report::new(&c, rec.clone(), 1.0);
        let b = Report::new(&c, rec, 2.0);
        assert_ne!(a.to_json(), b.to_json());
        assert_eq!(a.canonical_json(), b.canonical_json());
        assert!(a.passed);
    }

    #[test]
    fn canonical_form_survives_a_round_trip_through_disk() {
        let c = RunConfig::defaults(Command::Volume);
        let values = [0.1 + 0.2, 1.0 / 3.0, 2.5562038697747675e-8, 5e-324, 1.7976931348623157e308];
        let rec = values.iter().map(|v| CheckRecord::at_most("x", LemmaTag::TotalVolume, *v, 1.0)).collect();
        let report = Report::new(&c, rec, 0.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        std::fs::write(&path, report.to_json()).unwrap();
        assert_eq!(canonical_json_of_file(&path).unwrap(), report.canonical_json());
    }

    #[test]
    fn records_compare_correctly() {
        assert!(!CheckRecord::at_most("n", LemmaTag::Einstein, f64::NAN, 1.0).passed);
        assert!(CheckRecord::at_least("g", LemmaTag::AlphaUpperBound, 10.0, 10.0).passed);
        assert!(!CheckRecord::holds("h", LemmaTag::ExtremalFamily, false).passed);
    }

    #[test]
    fn every_tag_is_indexed() {
        let index = include_str!("../../../docs/lemma-index.md");
        let headings: Vec<&str> = index.lines().filter_map(|l| l.strip_prefix("## ")).map(str::trim).collect();
        for tag in LemmaTag::ALL {
            assert!(headings.contains(&tag.as_str()), "{} missing from the lemma index", tag.as_str());
            let json = serde_json::to_string(&tag).unwrap();
            assert_eq!(json, format!("\"{}\"", tag.as_str()));
        }
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(std::f64::consts::PI), "x".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "a,b\n3.1415926535897931e0,x\n");
        assert_eq!(text.lines().nth(1).unwrap().split(',').next().unwrap().parse::<f64>().unwrap(), std::f64::consts::PI);
    }
}
