//! Result formatting for the acceptance suite in `tests/acceptance.rs`.

use std::fmt;
use std::time::Duration;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }

    /// Fold a wall-clock limit into the verdict.
    pub fn within(self, elapsed: Duration, limit: Option<Duration>) -> Self {
        match limit {
            Some(l) if elapsed > l => Verdict {
                pass: false,
                detail: format!("{}; took {:.2}s, limit {:.0}s", self.detail, elapsed.as_secs_f64(), l.as_secs_f64()),
            },
            _ => self,
        }
    }
}

/// One printable line: `criterion 3 (name): PASS [1.23s] detail`.
pub struct Line<'a> {
    pub label: &'a str,
    pub name: &'a str,
    pub verdict: &'a Verdict,
    pub elapsed: Duration,
}

impl fmt::Display for Line<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({}): {} [{:.2}s] {}",
            self.label,
            self.name,
            if self.verdict.pass { "PASS" } else { "FAIL" },
            self.elapsed.as_secs_f64(),
            self.verdict.detail
        )
    }
}
