//! Classifiers, validation metrics, supervised-learning utility and the
//! replacement/appendant scenario harness.

mod classifier;
mod imbalance;
mod metrics;
mod scenario;
mod utility;

pub use classifier::{
    binary_targets, logistic_objective, train_classifier, Classifier, ClassifierConfig, ClassifierKind,
    FeatureBinding, LogisticConfig, Matrix, NaiveBayesConfig, Predictor, TreeConfig,
};
pub use imbalance::{degenerate_positive_fix, discount_rate, DiscountComparison};
pub use metrics::{
    auc_mann_whitney, cross_entropy, metrics, metrics_from_scores, MetricReport, DEFAULT_THRESHOLD, PROBA_CLIP,
};
pub use scenario::{evaluate_scenarios, EvalConfig, ScenarioEntry, ScenarioReport};
pub use utility::{utility, MetricDiff, Scenario, UtilityReport};
