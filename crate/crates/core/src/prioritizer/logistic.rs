//! Logistic regression fitted by iteratively reweighted least squares, with
//! Wald tests on each coefficient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::normal::two_sided_p;
use super::{Factor, PrioritizeError, TrainingRow};

pub const MAX_ITERATIONS: usize = 25;
pub const DEVIANCE_TOLERANCE: f64 = 1e-8;
/// Coefficients beyond this magnitude are taken as a sign of separation.
pub const COEFFICIENT_BOUND: f64 = 10.0;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// `None` for the intercept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<Factor>,
    pub coefficient: f64,
    pub std_error: f64,
    pub wald_z: f64,
    pub p_value: f64,
    pub odds_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub intercept: Term,
    pub terms: Vec<Term>,
    /// Requested factors left out because their column is a linear
    /// combination of the intercept and earlier factors.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliased: Vec<Factor>,
    pub converged: bool,
    pub iterations: usize,
    pub deviance: f64,
    pub rows: usize,
}

impl RegressionModel {
    pub fn factors(&self) -> Vec<Factor> {
        self.terms.iter().filter_map(|t| t.factor).collect()
    }

    pub fn term(&self, f: Factor) -> Option<&Term> {
        self.terms.iter().find(|t| t.factor == Some(f))
    }

    pub fn log_odds(&self, row: &TrainingRow) -> f64 {
        self.intercept.coefficient
            + self
                .terms
                .iter()
                .map(|t| t.coefficient * t.factor.expect("factor term").value(row))
                .sum::<f64>()
    }

    /// Predicted failure probability.
    pub fn probability(&self, row: &TrainingRow) -> f64 {
        logistic(self.log_odds(row))
    }
}

pub(crate) fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn deviance(y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    // -2 log-likelihood, written to stay finite for large |eta|
    let ll: f64 = y
        .iter()
        .zip(eta.iter())
        .map(|(&y, &e)| y * e - if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() })
        .sum();
    -2.0 * ll
}

/// Drops factors whose column lies in the span of the intercept and the
/// factors kept before it (modified Gram-Schmidt).
fn independent_factors(rows: &[TrainingRow], factors: &[Factor]) -> (Vec<Factor>, Vec<Factor>) {
    let n = rows.len();
    let mut basis: Vec<DVector<f64>> = vec![DVector::from_element(n, 1.0 / (n as f64).sqrt())];
    let (mut kept, mut aliased) = (Vec::new(), Vec::new());
    for &f in factors {
        let col = DVector::from_iterator(n, rows.iter().map(|r| f.value(r)));
        let mut v = col.clone();
        for q in &basis {
            let d = q.dot(&v);
            v -= q * d;
        }
        let norm = v.norm();
        if norm <= 1e-9 * col.norm().max(1.0) {
            aliased.push(f);
        } else {
            basis.push(v / norm);
            kept.push(f);
        }
    }
    (kept, aliased)
}

/// Fits `ln(p/(1-p)) = b0 + sum bk * factor_k` to the rows.
///
/// Newton steps on the log-likelihood until the deviance changes by less
/// than `DEVIANCE_TOLERANCE` or `MAX_ITERATIONS` is reached. Standard errors
/// come from the inverse information matrix at the final estimate. A fit
/// that does not converge or leaves a coefficient beyond
/// `COEFFICIENT_BOUND` is returned inside `PrioritizeError::Separation`,
/// clipped and marked as not converged.
pub fn fit_logistic(rows: &[TrainingRow], factors: &[Factor]) -> Result<RegressionModel, PrioritizeError> {
    if rows.is_empty() {
        return Err(PrioritizeError::EmptyTrainingSet);
    }
    if rows.iter().all(|r| r.fails == rows[0].fails) {
        return Err(PrioritizeError::ConstantOutcome { fails: rows[0].fails });
    }
    let (kept, aliased) = independent_factors(rows, factors);
    let n = rows.len();
    let k = kept.len() + 1;
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { kept[j - 1].value(&rows[i]) });
    let y = DVector::from_iterator(n, rows.iter().map(|r| if r.fails { 1.0 } else { 0.0 }));

    let mut beta = DVector::zeros(k);
    let mut eta = &x * &beta;
    let mut dev = deviance(&y, &eta);
    let mut converged = false;
    let mut iterations = 0;
    let mut singular = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let p = eta.map(logistic);
        let w = p.map(|p| p * (1.0 - p));
        let info = x.tr_mul(&DMatrix::from_fn(n, k, |i, j| x[(i, j)] * w[i]));
        let score = x.tr_mul(&(&y - &p));
        let Some(chol) = info.cholesky() else {
            singular = true;
            break;
        };
        beta += chol.solve(&score);
        eta = &x * &beta;
        let next = deviance(&y, &eta);
        let change = (next - dev).abs();
        dev = next;
        if !beta.iter().all(|b| b.is_finite()) {
            singular = true;
            break;
        }
        if change < DEVIANCE_TOLERANCE {
            converged = true;
            break;
        }
    }

    let separated = singular || !converged || beta.iter().any(|b| b.abs() > COEFFICIENT_BOUND);
    if separated {
        beta = beta.map(|b| if b.is_finite() { b.clamp(-COEFFICIENT_BOUND, COEFFICIENT_BOUND) } else { 0.0 });
        eta = &x * &beta;
        dev = deviance(&y, &eta);
    }

    let p = eta.map(logistic);
    let info = x.tr_mul(&DMatrix::from_fn(n, k, |i, j| x[(i, j)] * p[i] * (1.0 - p[i])));
    let cov = info.clone().cholesky().map(|c| c.inverse()).or_else(|| info.pseudo_inverse(1e-12).ok());
    let term = |j: usize, factor: Option<Factor>| {
        let b = beta[j];
        let se = cov.as_ref().map_or(f64::INFINITY, |c| c[(j, j)].max(0.0).sqrt());
        let z = if se > 0.0 && se.is_finite() { b / se } else { 0.0 };
        Term {
            factor,
            coefficient: b,
            std_error: se,
            wald_z: z,
            p_value: two_sided_p(z),
            odds_ratio: b.exp(),
        }
    };
    let model = RegressionModel {
        intercept: term(0, None),
        terms: kept.iter().enumerate().map(|(j, &f)| term(j + 1, Some(f))).collect(),
        aliased,
        converged: !separated,
        iterations,
        deviance: dev,
        rows: n,
    };
    if separated {
        Err(PrioritizeError::Separation(Box::new(model)))
    } else {
        Ok(model)
    }
}

/// Full model on `factors`, the factors whose Wald p-value is below
/// `alpha`, and the model refitted on those alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSelection {
    pub alpha: f64,
    pub full: RegressionModel,
    pub retained: Vec<Factor>,
    pub model: RegressionModel,
}

pub fn select_significant_factors(
    rows: &[TrainingRow],
    factors: &[Factor],
    alpha: f64,
) -> Result<FactorSelection, PrioritizeError> {
    let full = fit_logistic(rows, factors)?;
    let retained: Vec<Factor> = full
        .terms
        .iter()
        .filter(|t| t.p_value < alpha)
        .filter_map(|t| t.factor)
        .collect();
    let model = fit_logistic(rows, &retained)?;
    Ok(FactorSelection {
        alpha,
        full,
        retained,
        model,
    })
}
