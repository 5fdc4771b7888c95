use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: &str = "bblab-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Passes when `|measured - expected| <= tolerance`.
    Equality,
    /// Passes when `measured <= expected + tolerance`.
    Inequality,
    /// An empirical lower bound on a constant; passes when positive and finite.
    LowerBound,
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub check_id: String,
    pub anchor: String,
    pub kind: Kind,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn equality(check_id: impl Into<String>, anchor: &str, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            check_id: check_id.into(),
            anchor: anchor.into(),
            kind: Kind::Equality,
            measured,
            expected,
            tolerance,
            pass: (measured - expected).abs() <= tolerance,
        }
    }

    pub fn inequality(check_id: impl Into<String>, anchor: &str, measured: f64, bound: f64, slack: f64) -> Self {
        Self {
            check_id: check_id.into(),
            anchor: anchor.into(),
            kind: Kind::Inequality,
            measured,
            expected: bound,
            tolerance: slack,
            pass: measured <= bound + slack,
        }
    }

    pub fn lower_bound(check_id: impl Into<String>, anchor: &str, value: f64) -> Self {
        Self {
            check_id: check_id.into(),
            anchor: anchor.into(),
            kind: Kind::LowerBound,
            measured: value,
            expected: 0.0,
            tolerance: 0.0,
            pass: value > 0.0 && value.is_finite(),
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(check_id: impl Into<String>, anchor: &str) -> Self {
        Self {
            check_id: check_id.into(),
            anchor: anchor.into(),
            kind: Kind::Equality,
            measured: f64::NAN,
            expected: 0.0,
            tolerance: 0.0,
            pass: false,
        }
    }

    fn sort_key(&self) -> (&str, &str, u64, u64, u64) {
        (
            &self.anchor,
            &self.check_id,
            self.measured.to_bits(),
            self.expected.to_bits(),
            self.tolerance.to_bits(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorSummary {
    pub anchor: String,
    pub checks: usize,
    pub passed: usize,
    /// Largest lower bound among the anchor's estimates.
    pub best_constant: Option<f64>,
    /// Largest `|measured - expected|` among its equality rows.
    pub max_residual: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub command: String,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
    pub anchors: Vec<AnchorSummary>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub command: String,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn summary(&self) -> Summary {
        let mut by_anchor: BTreeMap<&str, Vec<&ReportRow>> = BTreeMap::new();
        for r in &self.rows {
            by_anchor.entry(&r.anchor).or_default().push(r);
        }
        let anchors = by_anchor
            .into_iter()
            .map(|(anchor, rows)| {
                let max_of = |kind: Kind, f: fn(&ReportRow) -> f64| {
                    rows.iter()
                        .filter(|r| r.kind == kind)
                        .map(|r| f(r))
                        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
                };
                AnchorSummary {
                    anchor: anchor.to_string(),
                    checks: rows.len(),
                    passed: rows.iter().filter(|r| r.pass).count(),
                    best_constant: max_of(Kind::LowerBound, |r| r.measured),
                    max_residual: max_of(Kind::Equality, |r| (r.measured - r.expected).abs()),
                    pass: rows.iter().all(|r| r.pass),
                }
            })
            .collect();
        let passed = self.rows.iter().filter(|r| r.pass).count();
        Summary {
            schema: SCHEMA.to_string(),
            command: self.command.clone(),
            checks: self.rows.len(),
            passed,
            failed: self.rows.len() - passed,
            pass: passed == self.rows.len(),
            anchors,
        }
    }

    /// Writes `report.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        write_csv(&dir.join("report.csv"), &self.rows)?;
        let json = serde_json::to_string_pretty(&self.summary()).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(dir.join("summary.json"), json + "\n")?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>, CliError> {
        let mut reader =
            csv::Reader::from_path(path).map_err(|e| CliError::Shard(format!("{}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::Shard(format!("{}: {e}", path.display())))?
            .clone();
        let expected = [
            "check_id",
            "anchor",
            "kind",
            "measured",
            "expected",
            "tolerance",
            "pass",
        ];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(CliError::Shard(format!("{}: unexpected header", path.display())));
        }
        reader
            .deserialize()
            .map(|r| r.map_err(|e| CliError::Shard(format!("{}: {e}", path.display()))))
            .collect()
    }

    /// Merges shard reports. Rows are sorted, so the result does not depend
    /// on the order of `paths`.
    pub fn merge(paths: &[impl AsRef<Path>]) -> Result<Report, CliError> {
        let mut rows = Vec::new();
        for p in paths {
            rows.extend(Self::read_csv(p.as_ref())?);
        }
        rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()).then(a.pass.cmp(&b.pass)));
        Ok(Report {
            command: "report".into(),
            rows,
        })
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("verify-identities");
        r.push(ReportRow::equality("a/1", "coarea-identity", 1e-9, 0.0, 1e-4));
        r.push(ReportRow::inequality("b/1", "hardy-inequality", 2.5, 2.0, 1e-6));
        r.push(ReportRow::lower_bound("c/1", "euclidean-main", 0.3));
        r
    }

    #[test]
    fn pass_flags() {
        let r = sample();
        assert_eq!(
            r.rows.iter().map(|x| x.pass).collect::<Vec<_>>(),
            vec![true, false, true]
        );
        let s = r.summary();
        assert_eq!((s.checks, s.passed, s.failed, s.pass), (3, 2, 1, false));
        assert_eq!(s.anchors[0].anchor, "coarea-identity");
        assert_eq!(s.anchors[0].max_residual, Some(1e-9));
        assert_eq!(s.anchors[1].best_constant, Some(0.3));
        assert!(!s.anchors[2].pass);
    }

    #[test]
    fn empty_summary() {
        let s = Report::new("report").summary();
        assert_eq!(s.checks, 0);
        assert!(s.pass && s.anchors.is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        sample().write(dir.path()).unwrap();
        let rows = Report::read_csv(&dir.path().join("report.csv")).unwrap();
        assert_eq!(rows, sample().rows);
    }
}
