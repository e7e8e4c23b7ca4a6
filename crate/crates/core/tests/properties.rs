use std::collections::BTreeSet;

use proptest::prelude::*;

use plucase::classifier::{scenario_changes, verdict, TestClass};
use plucase::decision::diff;
use plucase::prioritizer::normal::{phi, two_sided_p};
use plucase::prioritizer::{
    evaluate_ranking, rank_test_cases, Execution, FeatureTable, History, NewScenarioTest, TestFeatures, TrainingRow,
};
use plucase::rucm::{parse_specification, serialize_specification};
use plucase::synthetic::{generate, SyntheticConfig};

fn row(i: usize, fv: u32, r: bool, v: u32, s: u32) -> TrainingRow {
    TrainingRow {
        product_id: "P".into(),
        version_id: "V1".into(),
        test_id: format!("T{i:03}"),
        fails: false,
        retestable: r,
        size: s,
        variability: v,
        failing_products: 0,
        failing_versions: fv,
    }
}

proptest! {
    #[test]
    fn phi_is_symmetric_and_monotone(a in -8.0f64..8.0, b in -8.0f64..8.0) {
        prop_assert!((phi(a) + phi(-a) - 1.0).abs() < 1e-15);
        if a < b {
            prop_assert!(phi(a) <= phi(b));
        }
        let p = two_sided_p(a);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn ranking_is_a_permutation_with_new_tests_first(
        feats in proptest::collection::vec((0u32..4, any::<bool>(), 0u32..5, 1u32..20), 1..40),
        fresh in proptest::collection::btree_set(0usize..40, 0..5),
    ) {
        let suite: Vec<TrainingRow> =
            feats.iter().enumerate().map(|(i, &(fv, r, v, s))| row(i, fv, r, v, s)).collect();
        let new: Vec<NewScenarioTest> = fresh
            .iter()
            .filter(|&&i| i < suite.len())
            .map(|&i| NewScenarioTest { scenario: format!("S{i}"), test_id: suite[i].test_id.clone() })
            .collect();
        let ranking = rank_test_cases(None, &suite, &new);
        let ids: BTreeSet<&str> = ranking.iter().map(|r| r.test_id.as_str()).collect();
        prop_assert_eq!(ids.len(), suite.len());
        prop_assert!(ranking.iter().take(new.len()).all(|r| r.is_new_scenario));
        prop_assert!(ranking.iter().enumerate().all(|(i, r)| r.rank == i + 1));
    }

    #[test]
    fn auc_ratio_is_at_most_one(order in Just((0..30).collect::<Vec<usize>>()).prop_shuffle(), failing in proptest::collection::btree_set(0usize..30, 1..10)) {
        let ranking: Vec<String> = order.iter().map(|i| i.to_string()).collect();
        let failing: BTreeSet<String> = failing.iter().map(|i| i.to_string()).collect();
        let m = evaluate_ranking(&ranking, &failing).unwrap();
        prop_assert!(m.auc_ratio > 0.0 && m.auc_ratio <= 1.0 + 1e-12);
        prop_assert!(m.pct_to_cover_80pct_failing <= m.pct_to_cover_all_failing);
        let mut ideal: Vec<String> = failing.iter().cloned().collect();
        ideal.extend(ranking.iter().filter(|t| !failing.contains(*t)).cloned());
        prop_assert_eq!(evaluate_ranking(&ideal, &failing).unwrap().auc_ratio, 1.0);
    }

    #[test]
    fn history_and_features_round_trip(
        runs in proptest::collection::vec((0usize..3, 0usize..3, 0usize..6, any::<bool>()), 0..40),
    ) {
        let mut seen = BTreeSet::new();
        let mut h = History::default();
        let mut f = FeatureTable::default();
        let mut sorted = runs.clone();
        sorted.sort_by_key(|r| (r.0, r.1));
        for (p, v, t, fails) in sorted {
            if seen.insert((p, v, t)) {
                h.executions.push(Execution {
                    product_id: format!("P{p}"),
                    version_id: format!("V{v}"),
                    test_id: format!("T{t}"),
                    fails,
                });
                f.insert(TestFeatures {
                    product_id: format!("P{p}"),
                    test_id: format!("T{t}"),
                    retestable: fails,
                    size: t as u32 + 1,
                    variability: v as u32,
                });
            }
        }
        prop_assert_eq!(History::from_csv(&h.to_csv()).unwrap(), h);
        prop_assert_eq!(FeatureTable::from_csv(&f.to_csv()).unwrap(), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn synthetic_products_survive_round_trips(seed in 0u64..1000) {
        let line = generate(&SyntheticConfig { seed, ..Default::default() });
        let doc = parse_specification(&line.pl_text).unwrap();
        prop_assert_eq!(&parse_specification(&serialize_specification(&doc)).unwrap().use_cases, &doc.use_cases);
        for p in &line.products {
            prop_assert!(diff(&p.decisions, &p.decisions).unwrap().is_empty());
        }
        for c in &line.classifications {
            prop_assert!(c.untraced.is_empty());
        }
    }

    #[test]
    fn identical_scenarios_are_reusable(seed in 0u64..1000) {
        let line = generate(&SyntheticConfig { seed, products: 1, ..Default::default() });
        let model = plucase::scenario::ScenarioModel::build(&line.products[0].spec).unwrap();
        for uc in model.graphs.keys() {
            for s in model.enumerate(uc).unwrap() {
                prop_assert_eq!(verdict(&scenario_changes(&s, &s, &[])).0, TestClass::Reusable);
            }
        }
    }
}
