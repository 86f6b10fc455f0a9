//! Check records and the JSON verdict report.

use serde::{Deserialize, Serialize};

use crate::linrel::{ResidualRecord, TheoremReport};
use crate::matrixkit::DEFAULT_RANK_TOL;
use crate::ttr::{RankBlock, RankRecord, DEFAULT_RES_TOL};

/// Rank and residual tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank: f64,
    pub res: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: DEFAULT_RANK_TOL,
            res: DEFAULT_RES_TOL,
        }
    }
}

/// One named check: a residual against a tolerance, a rank against its
/// expected value, or a bare flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub direction: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol: Option<f64>,
    /// `(observed, expected)`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rank: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
    pub pass: bool,
}

impl CheckRecord {
    pub fn residual(name: impl Into<String>, value: f64, tol: f64) -> Self {
        CheckRecord {
            name: name.into(),
            degree: None,
            direction: None,
            residual: Some(value),
            tol: Some(tol),
            rank: None,
            note: None,
            // NaN fails
            pass: value <= tol,
        }
    }

    pub fn rank(name: impl Into<String>, rank: usize, expected: usize) -> Self {
        CheckRecord {
            name: name.into(),
            degree: None,
            direction: None,
            residual: None,
            tol: None,
            rank: Some((rank, expected)),
            note: None,
            pass: rank == expected,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool, note: impl Into<String>) -> Self {
        CheckRecord {
            name: name.into(),
            degree: None,
            direction: None,
            residual: None,
            tol: None,
            rank: None,
            note: Some(note.into()),
            pass,
        }
    }

    pub fn at(mut self, degree: usize) -> Self {
        self.degree = Some(degree);
        self
    }

    pub fn dir(mut self, direction: usize) -> Self {
        self.direction = Some(direction);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn from_residual(name: &str, r: &ResidualRecord, tol: f64) -> Self {
        let mut rec = CheckRecord::residual(name, r.residual, tol)
            .at(r.degree)
            .dir(r.direction);
        rec.pass = r.pass;
        rec
    }

    pub fn from_rank(prefix: &str, r: &RankRecord) -> Self {
        let block = match r.block {
            RankBlock::A => "A",
            RankBlock::C => "C",
            RankBlock::AJoint => "A-joint",
            RankBlock::CJoint => "C-joint",
        };
        let mut rec = CheckRecord::rank(format!("{prefix}rank {block}"), r.rank, r.expected).at(r.degree);
        rec.direction = r.direction;
        rec.pass = r.pass;
        rec
    }

    /// One-line plain-text form.
    pub fn line(&self) -> String {
        let mut s = format!("[{}] {}", if self.pass { "PASS" } else { "FAIL" }, self.name);
        if let Some(n) = self.degree {
            s += &format!(" n={n}");
        }
        if let Some(i) = self.direction {
            s += &format!(" i={}", i + 1);
        }
        if let (Some(r), Some(t)) = (self.residual, self.tol) {
            s += &format!(" residual {r:.3e} (tol {t:.1e})");
        } else if let Some(r) = self.residual {
            s += &format!(" value {r:.6e}");
        }
        if let Some((r, e)) = self.rank {
            s += &format!(" rank {r}, expected {e}");
        }
        if let Some(note) = &self.note {
            s += &format!(": {note}");
        }
        s
    }
}

/// Records of a Theorem-3/4 report: compatibility residuals, then ranks.
pub fn theorem_records(report: &TheoremReport, include_ranks: bool) -> Vec<CheckRecord> {
    let tag = format!("theorem {}", report.theorem);
    let mut out: Vec<CheckRecord> = report
        .compatibility
        .iter()
        .map(|r| CheckRecord::from_residual(&format!("{tag} compatibility"), r, report.tol_res))
        .collect();
    if include_ranks {
        out.extend(
            report
                .ranks
                .records
                .iter()
                .map(|r| CheckRecord::from_rank(&format!("{tag} "), r)),
        );
    }
    out
}

/// The common report of every CLI command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub command: Vec<String>,
    pub tolerances: Tolerances,
    pub records: Vec<CheckRecord>,
    /// Free-form findings that are not pass/fail checks.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    pub pass: bool,
    /// Wall time; left out unless asked for, so reports stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub elapsed_ms: Option<f64>,
}

impl VerdictReport {
    pub fn new(command: Vec<String>, tolerances: Tolerances, records: Vec<CheckRecord>) -> Self {
        let pass = records.iter().all(|r| r.pass);
        VerdictReport {
            command,
            tolerances,
            records,
            notes: Vec::new(),
            pass,
            elapsed_ms: None,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s += &format!("$ {}\n", self.command.join(" "));
        s += &format!(
            "tolerances: rank {:.1e}, residual {:.1e}\n",
            self.tolerances.rank, self.tolerances.res
        );
        for r in &self.records {
            s += &r.line();
            s.push('\n');
        }
        for n in &self.notes {
            s += &format!("note: {n}\n");
        }
        s += &format!(
            "overall: {} ({} checks, {} failed",
            if self.pass { "PASS" } else { "FAIL" },
            self.records.len(),
            self.records.iter().filter(|r| !r.pass).count(),
        );
        if let Some(ms) = self.elapsed_ms {
            s += &format!(", {ms:.1} ms");
        }
        s += ")\n";
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_is_conjunction() {
        let ok = CheckRecord::residual("a", 1e-12, 1e-8);
        let bad = CheckRecord::rank("b", 1, 2).at(3);
        assert!(VerdictReport::new(vec![], Tolerances::default(), vec![ok.clone()]).pass);
        let r = VerdictReport::new(vec!["x".into()], Tolerances::default(), vec![ok, bad]);
        assert!(!r.pass);
        let json = serde_json::to_string(&r).unwrap();
        let back: VerdictReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(r.to_text().contains("[FAIL] b n=3 rank 1, expected 2"));
    }

    #[test]
    fn nan_residual_fails() {
        assert!(!CheckRecord::residual("x", f64::NAN, 1.0).pass);
    }
}
