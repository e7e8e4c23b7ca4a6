//! Ordering of a new product's test suite and ranking metrics.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{PrioritizeError, RegressionModel, TrainingRow};

/// A test written for a scenario no previous product exercised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewScenarioTest {
    pub scenario: String,
    pub test_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTest {
    pub rank: usize,
    pub test_id: String,
    /// Predicted failure probability; none for new-scenario tests and for
    /// the heuristic order.
    pub probability: Option<f64>,
    pub is_new_scenario: bool,
}

/// Tests for new scenarios come first, by scenario id. The rest follow by
/// descending failure probability, then more failing versions, retestable
/// before reusable, and test id. Without a model the rest are ordered
/// retestable first, then by descending variability and size, then id.
pub fn rank_test_cases(
    model: Option<&RegressionModel>,
    suite: &[TrainingRow],
    new_tests: &[NewScenarioTest],
) -> Vec<RankedTest> {
    let mut fresh: Vec<&NewScenarioTest> = new_tests.iter().collect();
    fresh.sort_by(|a, b| (&a.scenario, &a.test_id).cmp(&(&b.scenario, &b.test_id)));
    let fresh_ids: BTreeSet<&str> = fresh.iter().map(|t| t.test_id.as_str()).collect();

    let mut rest: Vec<(Option<f64>, &TrainingRow)> = suite
        .iter()
        .filter(|r| !fresh_ids.contains(r.test_id.as_str()))
        .map(|r| (model.map(|m| m.probability(r)), r))
        .collect();
    rest.sort_by(|(pa, a), (pb, b)| match (pa, pb) {
        (Some(pa), Some(pb)) => pb
            .partial_cmp(pa)
            .unwrap_or(Ordering::Equal)
            .then(b.failing_versions.cmp(&a.failing_versions))
            .then(b.retestable.cmp(&a.retestable))
            .then(a.test_id.cmp(&b.test_id)),
        _ => b
            .retestable
            .cmp(&a.retestable)
            .then(b.variability.cmp(&a.variability))
            .then(b.size.cmp(&a.size))
            .then(a.test_id.cmp(&b.test_id)),
    });

    fresh
        .into_iter()
        .map(|t| (t.test_id.clone(), None, true))
        .chain(rest.into_iter().map(|(p, r)| (r.test_id.clone(), p, false)))
        .enumerate()
        .map(|(i, (test_id, probability, is_new_scenario))| RankedTest {
            rank: i + 1,
            test_id,
            probability,
            is_new_scenario,
        })
        .collect()
}

pub fn ranking_to_csv(ranking: &[RankedTest]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "test_id", "probability", "is_new_scenario"])
        .expect("in-memory write");
    for r in ranking {
        w.write_record([
            r.rank.to_string(),
            r.test_id.clone(),
            r.probability.map_or(String::new(), |p| format!("{p:.6}")),
            r.is_new_scenario.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Test ids of a `ranking.csv`, in rank order.
pub fn ranking_from_csv(text: &str) -> Result<Vec<String>, PrioritizeError> {
    #[derive(Deserialize)]
    struct Row {
        rank: usize,
        test_id: String,
    }
    let mut rows = Vec::new();
    for (i, r) in csv::Reader::from_reader(text.as_bytes()).deserialize::<Row>().enumerate() {
        rows.push(r.map_err(|e| PrioritizeError::HistorySchema { line: i + 2, msg: e.to_string() })?);
    }
    rows.sort_by_key(|r| r.rank);
    Ok(rows.into_iter().map(|r| r.test_id).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub tests: usize,
    pub failing: usize,
    /// Area under the cumulative failing-tests curve over the ideal area.
    pub auc_ratio: f64,
    pub auc_observed: f64,
    pub auc_ideal: f64,
    pub pct_to_cover_all_failing: f64,
    pub pct_to_cover_80pct_failing: f64,
    /// Share of failing tests found within the first `floor(n/2)` tests.
    pub pct_failing_in_first_half: f64,
}

/// Trapezoidal area under `k -> covered(k)/failing` for k = 0..n.
fn auc(hits: &[bool], failing: usize) -> f64 {
    let mut covered = 0usize;
    let mut area = 0.0;
    for &h in hits {
        let before = covered as f64 / failing as f64;
        covered += h as usize;
        area += (before + covered as f64 / failing as f64) / 2.0;
    }
    area
}

pub fn evaluate_ranking(ranking: &[String], failing: &BTreeSet<String>) -> Result<RankingMetrics, PrioritizeError> {
    let ids: BTreeSet<&str> = ranking.iter().map(String::as_str).collect();
    if ids.len() != ranking.len() {
        return Err(PrioritizeError::NotAPermutation("a test appears twice in the ranking".into()));
    }
    if let Some(t) = failing.iter().find(|t| !ids.contains(t.as_str())) {
        return Err(PrioritizeError::NotAPermutation(format!("failing test {t} is not ranked")));
    }
    let f = failing.len();
    if f == 0 {
        return Err(PrioritizeError::NoFailures);
    }
    let n = ranking.len();
    let hits: Vec<bool> = ranking.iter().map(|t| failing.contains(t)).collect();
    let ideal: Vec<bool> = (0..n).map(|i| i < f).collect();
    let (observed, best) = (auc(&hits, f), auc(&ideal, f));

    let mut covered = 0;
    let mut all = n;
    let mut eighty = n;
    for (k, &h) in hits.iter().enumerate() {
        covered += h as usize;
        if h && covered * 5 >= 4 * f && eighty == n {
            eighty = k + 1;
        }
        if h && covered == f {
            all = k + 1;
            break;
        }
    }
    let half = hits[..n / 2].iter().filter(|&&h| h).count();
    let pct = |k: usize| 100.0 * k as f64 / n as f64;
    Ok(RankingMetrics {
        tests: n,
        failing: f,
        auc_ratio: observed / best,
        auc_observed: observed,
        auc_ideal: best,
        pct_to_cover_all_failing: pct(all),
        pct_to_cover_80pct_failing: pct(eighty),
        pct_failing_in_first_half: 100.0 * half as f64 / f as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prioritizer::{fit_logistic, Factor};

    fn row(id: &str, fv: u32, r: bool, v: u32, s: u32) -> TrainingRow {
        TrainingRow {
            product_id: "P".into(),
            version_id: String::new(),
            test_id: id.into(),
            fails: false,
            retestable: r,
            size: s,
            variability: v,
            failing_products: 0,
            failing_versions: fv,
        }
    }

    fn ids(r: &[RankedTest]) -> Vec<&str> {
        r.iter().map(|t| t.test_id.as_str()).collect()
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn new_scenarios_first_then_probability() {
        let mut train = vec![];
        for i in 0..40 {
            let mut r = row("x", i % 4, false, 0, 3);
            r.fails = i % 4 >= 2 && i % 3 != 0;
            train.push(r);
        }
        let m = fit_logistic(&train, &[Factor::FV]).unwrap();
        let suite = [row("low", 0, false, 0, 3), row("high", 3, false, 0, 3)];
        let fresh = [NewScenarioTest { scenario: "U#2".into(), test_id: "n".into() }];
        let r = rank_test_cases(Some(&m), &suite, &fresh);
        assert_eq!(ids(&r), ["n", "high", "low"]);
        assert!(r[1].probability.unwrap() > r[2].probability.unwrap());
        assert_eq!(r.iter().map(|t| t.rank).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn identical_features_keep_id_order() {
        let suite = [row("c", 1, true, 1, 1), row("a", 1, true, 1, 1), row("b", 1, true, 1, 1)];
        let mut train = vec![row("t", 0, false, 0, 1), row("t", 1, false, 0, 1), row("t", 1, false, 0, 1)];
        train.extend([row("t", 0, false, 0, 1), row("t", 0, false, 0, 1)]);
        train[1].fails = true;
        train[3].fails = true;
        let m = fit_logistic(&train, &[Factor::FV]).unwrap();
        assert_eq!(ids(&rank_test_cases(Some(&m), &suite, &[])), ["a", "b", "c"]);
        assert_eq!(ids(&rank_test_cases(None, &suite, &[])), ["a", "b", "c"]);
    }

    #[test]
    fn heuristic_order() {
        let suite = [row("a", 0, false, 9, 9), row("b", 0, true, 1, 2), row("c", 0, true, 1, 5), row("d", 0, true, 2, 1)];
        assert_eq!(ids(&rank_test_cases(None, &suite, &[])), ["d", "c", "b", "a"]);
    }

    #[test]
    fn ideal_order_scores_one() {
        let failing: BTreeSet<String> = strings(&["a", "b"]).into_iter().collect();
        let m = evaluate_ranking(&strings(&["a", "b", "c", "d", "e"]), &failing).unwrap();
        assert_eq!(m.auc_ratio, 1.0);
        assert_eq!(m.pct_to_cover_all_failing, 40.0);
        assert_eq!(m.pct_failing_in_first_half, 100.0);
    }

    #[test]
    fn reversed_order_by_hand() {
        // curve 0, 0, 0, 1/2, 1 against ideal 0, 1/2, 1, 1, 1
        let failing: BTreeSet<String> = strings(&["a", "b"]).into_iter().collect();
        let m = evaluate_ranking(&strings(&["c", "d", "a", "b"]), &failing).unwrap();
        assert_eq!(m.auc_observed, 0.25 + 0.75);
        assert_eq!(m.auc_ideal, 0.25 + 0.75 + 1.0 + 1.0);
        assert_eq!(m.auc_ratio, 1.0 / 3.0);
        assert_eq!(m.pct_to_cover_all_failing, 100.0);
        assert_eq!(m.pct_to_cover_80pct_failing, 100.0);
        assert_eq!(m.pct_failing_in_first_half, 0.0);
    }

    #[test]
    fn no_failures_is_not_applicable() {
        assert!(matches!(
            evaluate_ranking(&strings(&["a"]), &BTreeSet::new()),
            Err(PrioritizeError::NoFailures)
        ));
    }

    #[test]
    fn ranking_csv_round_trips() {
        let r = rank_test_cases(None, &[row("b", 0, false, 1, 1), row("a", 0, true, 1, 1)], &[]);
        assert_eq!(ranking_from_csv(&ranking_to_csv(&r)).unwrap(), ["a", "b"]);
    }
}
