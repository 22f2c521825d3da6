//! Report records and their CSV and text renderings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cone::{LatticePoint, Triple};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The check could not run inside the grid.
    Guard,
    /// Informational value, no threshold.
    Info,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Guard => "GUARD",
            Verdict::Info => "INFO",
        }
    }

    pub fn from_check(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRecord {
    pub suite: String,
    pub model: String,
    pub cocycle: String,
    pub check: String,
    /// Witnessing triple or pair, empty for global checks.
    pub input: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub verdict: Verdict,
    pub note: String,
}

pub fn fmt_point(a: &LatticePoint) -> String {
    let parts: Vec<String> = a.0.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(" "))
}

pub fn fmt_pair(a: &LatticePoint, b: &LatticePoint) -> String {
    format!("{};{}", fmt_point(a), fmt_point(b))
}

pub fn fmt_triple(t: &Triple) -> String {
    format!("{};{};{}", fmt_point(&t.0), fmt_point(&t.1), fmt_point(&t.2))
}

/// Scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug)]
pub struct Report {
    pub suite: String,
    pub model: String,
    pub seed: u64,
    pub tol: f64,
    pub records: Vec<ReportRecord>,
    /// Free-form lines appended to the summary.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(suite: &str, model: &str, seed: u64, tol: f64) -> Self {
        Report { suite: suite.into(), model: model.into(), seed, tol, records: Vec::new(), notes: Vec::new() }
    }

    pub fn push(
        &mut self,
        cocycle: &str,
        check: &str,
        input: String,
        value: f64,
        threshold: Option<f64>,
        verdict: Verdict,
        note: impl Into<String>,
    ) {
        self.records.push(ReportRecord {
            suite: self.suite.clone(),
            model: self.model.clone(),
            cocycle: cocycle.into(),
            check: check.into(),
            input,
            value,
            threshold,
            verdict,
            note: note.into(),
        });
    }

    /// `value ≤ threshold` check.
    pub fn check_le(&mut self, cocycle: &str, check: &str, input: String, value: f64, threshold: f64) -> bool {
        let ok = value <= threshold;
        self.push(cocycle, check, input, value, Some(threshold), Verdict::from_check(ok), "");
        ok
    }

    /// `value ≥ threshold` check.
    pub fn check_ge(&mut self, cocycle: &str, check: &str, input: String, value: f64, threshold: f64) -> bool {
        let ok = value >= threshold;
        self.push(cocycle, check, input, value, Some(threshold), Verdict::from_check(ok), "at least");
        ok
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.records.iter().filter(|r| r.verdict == v).count()
    }

    /// 0 when everything passed, 1 on a failed check, 2 on a guard record.
    pub fn exit_code(&self) -> i32 {
        if self.count(Verdict::Guard) > 0 {
            2
        } else if self.count(Verdict::Fail) > 0 {
            1
        } else {
            0
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "suite",
            "model",
            "cocycle",
            "check",
            "input",
            "value",
            "threshold",
            "verdict",
            "seed",
            "note",
        ])
        .map_err(io)?;
        let seed = self.seed.to_string();
        for r in &self.records {
            let threshold = r.threshold.map(fmt_float).unwrap_or_default();
            w.write_record([
                r.suite.as_str(),
                r.model.as_str(),
                r.cocycle.as_str(),
                r.check.as_str(),
                r.input.as_str(),
                fmt_float(r.value).as_str(),
                threshold.as_str(),
                r.verdict.name(),
                seed.as_str(),
                r.note.as_str(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "suite: {}", self.suite);
        let _ = writeln!(s, "model: {}", self.model);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "tolerance: {}", fmt_float(self.tol));
        let _ = writeln!(
            s,
            "records: {} (pass {}, fail {}, guard {}, info {})",
            self.records.len(),
            self.count(Verdict::Pass),
            self.count(Verdict::Fail),
            self.count(Verdict::Guard),
            self.count(Verdict::Info)
        );
        let _ = writeln!(s);
        for r in &self.records {
            let bound = match (r.threshold, r.note.as_str()) {
                (Some(t), "at least") => format!(" (need ≥ {t:.3e})"),
                (Some(t), _) => format!(" (need ≤ {t:.3e})"),
                (None, _) => String::new(),
            };
            let _ = write!(s, "[{}] {} / {}: {:.6e}{bound}", r.verdict.name(), r.cocycle, r.check, r.value);
            if !r.input.is_empty() {
                let _ = write!(s, " at {}", r.input);
            }
            if !r.note.is_empty() && r.note != "at least" {
                let _ = write!(s, " ({})", r.note);
            }
            let _ = writeln!(s);
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s);
            for n in &self.notes {
                let _ = writeln!(s, "{n}");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "exit status: {}", self.exit_code());
        s
    }

    /// Writes `<suite>_records.csv` and `<suite>_summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}_records.csv", self.suite));
        let txt_path = dir.join(format!("{}_summary.txt", self.suite));
        std::fs::write(&csv_path, self.to_csv()?)?;
        std::fs::write(&txt_path, self.summary())?;
        Ok((csv_path, txt_path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = Report::new("verify", "C1", 7, 1e-10);
        r.check_le(
            "u",
            "cocycle_identity",
            fmt_triple(&(LatticePoint(vec![1, 0]), LatticePoint(vec![0, 1]), LatticePoint(vec![1, 1]))),
            0.1,
            1e-10,
        );
        r.push("u", "info", String::new(), 1.0 / 3.0, None, Verdict::Info, "a, b");
        let csv = r.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "suite,model,cocycle,check,input,value,threshold,verdict,seed,note");
        assert_eq!(
            lines[1],
            "verify,C1,u,cocycle_identity,(1 0);(0 1);(1 1),1.0000000000000001e-1,1.0000000000000000e-10,FAIL,7,"
        );
        assert_eq!(lines[2], "verify,C1,u,info,,3.3333333333333331e-1,,INFO,7,\"a, b\"");
        assert_eq!(r.exit_code(), 1);
        r.push("u", "guard", String::new(), 0.0, None, Verdict::Guard, "");
        assert_eq!(r.exit_code(), 2);
    }
}
