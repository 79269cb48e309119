//! Feasibility report building blocks shared by every evaluator.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

/// One requirement compared against what the scenario achieves.
///
/// `margin_db` is positive when the requirement is met with room to spare.
/// Boolean checks carry no margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub required: Option<f64>,
    pub achieved: Option<f64>,
    pub unit: String,
    pub margin_db: Option<f64>,
    pub verdict: Verdict,
    /// Requirement table row or KPI this check audits.
    pub requirement_row: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(name: &str, row: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            required: None,
            achieved: None,
            unit: unit.into(),
            margin_db: None,
            verdict: Verdict::Pass,
            requirement_row: row.into(),
            note: None,
        }
    }

    /// Achieved value must not exceed `required` (errors, resolutions, latencies).
    pub fn at_most(name: &str, row: &str, unit: &str, required: f64, achieved: f64) -> Self {
        let margin = ratio_db(required, achieved);
        Self::with_margin(name, row, unit, required, achieved, margin)
    }

    /// Achieved value must reach `required` (rates, counts, bandwidths).
    pub fn at_least(name: &str, row: &str, unit: &str, required: f64, achieved: f64) -> Self {
        let margin = ratio_db(achieved, required);
        Self::with_margin(name, row, unit, required, achieved, margin)
    }

    /// Both values already in dB; margin is their difference.
    pub fn at_least_db(name: &str, row: &str, required_db: f64, achieved_db: f64) -> Self {
        let margin = achieved_db - required_db;
        Self::with_margin(name, row, "dB", required_db, achieved_db, margin)
    }

    /// A check the scenario cannot be scored on numerically.
    pub fn flag(name: &str, row: &str, verdict: Verdict, note: impl Into<String>) -> Self {
        Self {
            verdict,
            note: Some(note.into()),
            ..Self::new(name, row, "")
        }
    }

    fn with_margin(name: &str, row: &str, unit: &str, required: f64, achieved: f64, margin: f64) -> Self {
        let verdict = if margin >= -MARGIN_TOLERANCE_DB { Verdict::Pass } else { Verdict::Fail };
        Self {
            required: Some(required),
            achieved: finite_or_none(achieved),
            margin_db: finite_or_none(margin).or(Some(if margin > 0.0 { f64::MAX } else { f64::MIN })),
            verdict,
            ..Self::new(name, row, unit)
        }
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Demote a failure to a warning (advisory rows).
    pub fn advisory(mut self) -> Self {
        if self.verdict == Verdict::Fail {
            self.verdict = Verdict::Warn;
        }
        self
    }

    /// Sort key for the limiting constraint: failing flags rank lowest.
    pub fn score(&self) -> f64 {
        match (self.margin_db, self.verdict) {
            (Some(m), _) => m,
            (None, Verdict::Fail) => f64::NEG_INFINITY,
            (None, _) => f64::INFINITY,
        }
    }
}

/// Rounding slack so that a requirement met exactly is not reported as a failure.
pub const MARGIN_TOLERANCE_DB: f64 = 1e-9;

fn ratio_db(num: f64, den: f64) -> f64 {
    if num == den {
        return 0.0;
    }
    10.0 * (num / den).log10()
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
