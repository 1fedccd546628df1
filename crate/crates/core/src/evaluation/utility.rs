use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::MetricReport;
use crate::error::{PrroError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Synthetic rows stand in for the training set.
    Replacement,
    /// Synthetic rows are appended to the training set.
    Appendant,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Replacement => "replacement",
            Scenario::Appendant => "appendant",
        })
    }
}

/// Target minus baseline, per metric. For `cross_entropy` lower is better,
/// so a negative difference is an improvement; for the rest higher is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDiff {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub accuracy: f64,
    pub cross_entropy: f64,
}

impl MetricDiff {
    pub const NAMES: [&'static str; 6] = ["precision", "recall", "f1", "auc", "accuracy", "cross_entropy"];

    pub fn values(&self) -> [f64; 6] {
        [
            self.precision,
            self.recall,
            self.f1,
            self.auc,
            self.accuracy,
            self.cross_entropy,
        ]
    }
}

pub(crate) fn metric_values(m: &MetricReport) -> [f64; 6] {
    [m.precision, m.recall, m.f1, m.auc, m.accuracy, m.cross_entropy]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub scenario: Scenario,
    pub baseline: MetricReport,
    pub target: MetricReport,
    pub difference: MetricDiff,
}

/// Utility of `target` against `baseline`; both must be measured on the same
/// validation set.
pub fn utility(target: &MetricReport, baseline: &MetricReport, scenario: Scenario) -> Result<UtilityReport> {
    if target.n_validation != baseline.n_validation {
        return Err(PrroError::Metrics(format!(
            "reports cover different validation sets ({} vs {} rows)",
            target.n_validation, baseline.n_validation
        )));
    }
    Ok(UtilityReport {
        scenario,
        baseline: baseline.clone(),
        target: target.clone(),
        difference: MetricDiff {
            precision: target.precision - baseline.precision,
            recall: target.recall - baseline.recall,
            f1: target.f1 - baseline.f1,
            auc: target.auc - baseline.auc,
            accuracy: target.accuracy - baseline.accuracy,
            cross_entropy: target.cross_entropy - baseline.cross_entropy,
        },
    })
}
