//! Checks, suite reports and their CSV / text output.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// A negative control failing as designed.
    ExpectedFail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::ExpectedFail => "EXPECTED-FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    pub status: Status,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound, threshold: f64) -> Self {
        let ok = match bound {
            Bound::AtMost => value <= threshold,
            Bound::AtLeast => value >= threshold,
        };
        Self {
            name: name.into(),
            value,
            bound,
            threshold,
            status: if ok { Status::Pass } else { Status::Fail },
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Bound::AtMost, threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Bound::AtLeast, threshold)
    }

    /// Relabels a failure of a negative control.
    pub fn expect_failure(mut self) -> Self {
        if self.status == Status::Fail {
            self.status = Status::ExpectedFail;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        write!(f, "{} {} = {:.3e} ({op} {:.1e})", self.status, self.name, self.value, self.threshold)
    }
}

/// Tabular payload of a suite, written as its own CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Free-form lines for the summary (measured values with no bound).
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, seed: u64) -> Self {
        Self {
            suite: suite.into(),
            seed,
            checks: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    /// 0 if every check passed, 1 otherwise (expected failures included).
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!("# {} (seed {})\n", self.suite, self.seed);
        for c in &self.checks {
            s.push_str(&format!("{c}\n"));
        }
        for n in &self.notes {
            s.push_str(&format!("  {n}\n"));
        }
        let verdict = if self.passed() {
            Status::Pass
        } else if self.checks.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else {
            Status::ExpectedFail
        };
        s.push_str(&format!("{verdict} {}\n", self.suite));
        s
    }

    /// Writes `<suite>.csv` with the checks, one CSV per table and
    /// `<suite>.txt` with the summary. Returns the written paths.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = self.suite.replace(' ', "_");
        let mut out = Vec::new();
        let checks = Table {
            name: stem.clone(),
            header: ["check", "value", "bound", "threshold", "status"].map(String::from).to_vec(),
            rows: self
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        format!("{:e}", c.value),
                        match c.bound {
                            Bound::AtMost => "at_most".into(),
                            Bound::AtLeast => "at_least".into(),
                        },
                        format!("{:e}", c.threshold),
                        c.status.to_string(),
                    ]
                })
                .collect(),
        };
        for t in std::iter::once(&checks).chain(&self.tables) {
            let path = dir.join(format!("{}.csv", t.name));
            write_csv(&path, &self.suite, self.seed, t)?;
            out.push(path);
        }
        let path = dir.join(format!("{stem}.txt"));
        std::fs::write(&path, self.summary())?;
        out.push(path);
        Ok(out)
    }
}

/// CSV with a `# command seed=<seed>` comment line above the header.
pub fn write_csv(path: &Path, command: &str, seed: u64, table: &Table) -> io::Result<()> {
    let mut file = File::create(path)?;
    writeln!(file, "# bondvol {command} seed={seed}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses() {
        assert!(Check::at_most("a", 1e-13, 1e-12).passed());
        assert!(!Check::at_least("b", 1e-4, 1e-3).passed());
        let c = Check::at_most("c", 1.0, 1e-12).expect_failure();
        assert_eq!(c.status, Status::ExpectedFail);
        assert_eq!(Check::at_most("d", 0.0, 1.0).expect_failure().status, Status::Pass);
        assert!(Check::at_most("nan", f64::NAN, 1.0).status == Status::Fail);
        let mut r = SuiteReport::new("x", 1);
        r.push(c);
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn csv_has_seed_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = SuiteReport::new("verify demo", 42);
        r.push(Check::at_most("zero", 0.0, 1e-12));
        let paths = r.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# bondvol verify demo seed=42"));
        assert_eq!(lines.next(), Some("check,value,bound,threshold,status"));
        assert_eq!(lines.next(), Some("zero,0e0,at_most,1e-12,PASS"));
    }
}
