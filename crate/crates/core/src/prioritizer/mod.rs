//! Failure-likelihood prioritization of a new product's test suite.
//!
//! Each execution of a test on a product version becomes a training row
//! with five factors: scenario variability (V) and size (S), failures on
//! earlier products (FP) and versions (FV), and the retestable flag (R).
//! A logistic model over the significant factors then ranks the suite.

mod history;
mod logistic;
pub mod normal;
mod rank;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use history::{build_training_set, suite_rows, Execution, FeatureTable, History, TestFeatures, TrainingRow};
pub use logistic::{
    fit_logistic, select_significant_factors, FactorSelection, RegressionModel, Term, COEFFICIENT_BOUND,
    DEFAULT_ALPHA, DEVIANCE_TOLERANCE, MAX_ITERATIONS,
};
pub use rank::{
    evaluate_ranking, rank_test_cases, ranking_from_csv, ranking_to_csv, NewScenarioTest, RankedTest, RankingMetrics,
};

#[derive(Debug, Error)]
pub enum PrioritizeError {
    #[error("history line {line}: {msg}")]
    HistorySchema { line: usize, msg: String },
    #[error("features line {line}: {msg}")]
    FeatureSchema { line: usize, msg: String },
    #[error("no features for test {test} on {product}")]
    UnknownTest { product: String, test: String },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("every training row {}", if *.fails { "fails" } else { "passes" })]
    ConstantOutcome { fails: bool },
    #[error("fit did not converge or a coefficient exceeds the bound; coefficients were clipped")]
    Separation(Box<RegressionModel>),
    #[error("ranking is not a permutation of the suite: {0}")]
    NotAPermutation(String),
    #[error("no failing test; ranking metrics do not apply")]
    NoFailures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Factor {
    V,
    S,
    FP,
    FV,
    R,
}

impl Factor {
    pub const ALL: [Factor; 5] = [Factor::V, Factor::S, Factor::FP, Factor::FV, Factor::R];

    pub fn value(self, r: &TrainingRow) -> f64 {
        match self {
            Factor::V => r.variability as f64,
            Factor::S => r.size as f64,
            Factor::FP => r.failing_products as f64,
            Factor::FV => r.failing_versions as f64,
            Factor::R => r.retestable as u8 as f64,
        }
    }
}

/// Outcome of the whole prioritization step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prioritization {
    /// Absent when every training row had the same outcome.
    pub selection: Option<FactorSelection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub ranking: Vec<RankedTest>,
}

/// Fits the model on `training`, keeps the factors significant at `alpha`
/// and ranks `suite`. A separated fit is used as clipped, with a warning.
/// A constant outcome falls back to the heuristic order.
pub fn prioritize(
    training: &[TrainingRow],
    suite: &[TrainingRow],
    new_tests: &[NewScenarioTest],
    alpha: f64,
) -> Result<Prioritization, PrioritizeError> {
    let mut warnings = Vec::new();
    let mut fit = |factors: &[Factor], which: &str| match fit_logistic(training, factors) {
        Err(PrioritizeError::Separation(m)) => {
            warnings.push(format!("{which} model separated; coefficients clipped"));
            Ok(*m)
        }
        other => other,
    };
    let selection = match fit(&Factor::ALL, "full") {
        Ok(full) => {
            let retained: Vec<Factor> =
                full.terms.iter().filter(|t| t.p_value < alpha).filter_map(|t| t.factor).collect();
            let model = fit(&retained, "retained")?;
            Some(FactorSelection {
                alpha,
                full,
                retained,
                model,
            })
        }
        Err(PrioritizeError::ConstantOutcome { fails }) => {
            warnings.push(format!(
                "every training row {}; using the heuristic order",
                if fails { "fails" } else { "passes" }
            ));
            None
        }
        Err(e) => return Err(e),
    };
    let ranking = rank_test_cases(selection.as_ref().map(|s| &s.model), suite, new_tests);
    Ok(Prioritization {
        selection,
        warnings,
        ranking,
    })
}

/// Training data and ranking for one new product, from the recorded history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPrioritization {
    pub product: String,
    pub previous: Vec<String>,
    pub training_rows: usize,
    #[serde(flatten)]
    pub result: Prioritization,
}

/// Ranks the tests `features` lists for `product`, training on the history
/// of `previous` (every other product in the history when empty). Tests
/// with no history at all are treated as new-scenario tests.
pub fn prioritize_product(
    history: &History,
    features: &FeatureTable,
    product: &str,
    previous: &[&str],
    alpha: f64,
) -> Result<ProductPrioritization, PrioritizeError> {
    let previous: Vec<&str> = if previous.is_empty() {
        history.products().into_iter().filter(|p| *p != product).collect()
    } else {
        previous.to_vec()
    };
    let history = history.restricted_to(&previous);
    let suite_ids: BTreeSet<String> = features.of_product(product).map(|f| f.test_id.clone()).collect();
    let training = build_training_set(&history, features, Some(&suite_ids))?;
    let suite = suite_rows(&history, product, features);
    let executed: BTreeSet<&str> = history.executions.iter().map(|e| e.test_id.as_str()).collect();
    let fresh: Vec<NewScenarioTest> = suite
        .iter()
        .filter(|r| !executed.contains(r.test_id.as_str()))
        .map(|r| NewScenarioTest {
            scenario: r.test_id.clone(),
            test_id: r.test_id.clone(),
        })
        .collect();
    let result = prioritize(&training, &suite, &fresh, alpha)?;
    Ok(ProductPrioritization {
        product: product.to_string(),
        previous: previous.iter().map(|p| p.to_string()).collect(),
        training_rows: training.len(),
        result,
    })
}
