//! Acceptance criteria. Each test prints one PASS or FAIL line and fails
//! when its criterion does not hold.
//!
//!     cargo test --test acceptance -- --nocapture --test-threads 1

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plucase::classifier::{
    apply_guidance, classify_test_cases, scenario_changes, verdict, Classification, Product, Rule, TestClass,
};
use plucase::decision::{diff, DecisionModel};
use plucase::diagram::parse_diagram;
use plucase::model::{load_decisions, PLModel};
use plucase::prioritizer::normal::phi;
use plucase::prioritizer::{
    build_training_set, evaluate_ranking, fit_logistic, prioritize_product, select_significant_factors, Factor,
    FeatureTable, History, TrainingRow, DEFAULT_ALPHA,
};
use plucase::report::{aggregate, ImpactReport};
use plucase::rucm::{classify_step, parse_ps_specification, parse_specification, serialize_specification, FlowKind};
use plucase::scenario::{CoveredFlow, NodeKind, Scenario, ScenarioGraph, ScenarioModel, ScenarioNode};
use plucase::synthetic::{generate, SyntheticConfig, SyntheticLine};
use plucase::traceability::load_traces;

const STO_RUNTIME: Duration = Duration::from_secs(1);
const IRLS_RUNTIME: Duration = Duration::from_secs(5);
const LINE_RUNTIME: Duration = Duration::from_secs(5);
const COEFFICIENT_TOLERANCE: f64 = 0.15;
const SCORE_TOLERANCE: f64 = 1e-6;
const ORACLE_AGREEMENT: f64 = 1e-4;
const PHI_TOLERANCE: f64 = 1e-7;
const TYPE_I_BAND: (f64, f64) = (0.01, 0.10);
const ENUMERATION_CASES: usize = 200;
const CLASSIFICATION_CASES: usize = 500;
const PRIORITIZATION_SEEDS: u64 = 20;
const FIRST_HALF_MARGIN: f64 = 20.0;
const MIN_MEAN_AUC_RATIO: f64 = 0.85;

fn verdict_line(criterion: &str, ok: bool, detail: &str) {
    println!("{} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}

fn sto(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sto_mini").join(name)
}

#[test]
fn criterion_01_sto_mini_replay() {
    let start = Instant::now();
    let model = PLModel::load(&sto("pl.rucm"), &sto("diagram.json")).unwrap();
    let m1 = load_decisions(&sto("decisions.P1.json")).unwrap();
    let m2 = load_decisions(&sto("decisions.P2.json")).unwrap();
    let dc = diff(&m1, &m2).unwrap();
    let p1 = model.configure(&m1).unwrap().spec.document;
    let p2 = model.configure(&m2).unwrap().spec.document;
    let suite = load_traces(&std::fs::read_to_string(sto("traces.P1.csv")).unwrap(), "P1").unwrap();
    let c = classify_test_cases(
        Product { id: "P1", doc: &p1 },
        &suite,
        &BTreeMap::new(),
        Product { id: "P2", doc: &p2 },
        &dc,
    )
    .unwrap();
    let elapsed = start.elapsed();

    let mut problems = Vec::new();
    let counts = (dc.updated.len(), dc.added.len(), dc.deleted.len());
    if counts != (6, 0, 0) {
        problems.push(format!("diff {counts:?}"));
    }
    let class = |t: &str| c.verdict(t).map(|v| v.class);
    let classes = [class("t1"), class("t2"), class("t3")];
    let expected = [Some(TestClass::Retestable), Some(TestClass::Retestable), Some(TestClass::Obsolete)];
    if classes != expected {
        problems.push(format!("classes {classes:?}"));
    }
    let shapes: BTreeMap<&str, (Vec<NodeKind>, usize)> = c
        .new_scenarios
        .iter()
        .map(|f| {
            (
                f.scenario.root.as_str(),
                (f.scenario.nodes.iter().map(|n| n.kind).collect(), f.sources.len()),
            )
        })
        .collect();
    match shapes.get("Recognize Gesture") {
        Some((kinds, 2)) if kinds == &[NodeKind::UseCaseStart, NodeKind::Condition, NodeKind::Abort] => {}
        other => problems.push(format!("Recognize Gesture new scenario {other:?}")),
    }
    match shapes.get("Provide System User Data") {
        Some((kinds, 1)) if kinds.first() == Some(&NodeKind::UseCaseStart) => {}
        other => problems.push(format!("Provide System User Data new scenario {other:?}")),
    }
    if c.new_scenarios.len() != 2 {
        problems.push(format!("{} new scenarios", c.new_scenarios.len()));
    }
    let tied = c
        .new_scenarios
        .iter()
        .find(|f| f.scenario.root == "Recognize Gesture")
        .map(|f| f.sources.iter().all(|s| !s.guidance.is_empty()))
        .unwrap_or(false);
    if !tied {
        problems.push("missing guidance for a tied source".into());
    }
    if elapsed >= STO_RUNTIME {
        problems.push(format!("took {elapsed:?}"));
    }
    verdict_line(
        "1 replay",
        problems.is_empty(),
        &format!(
            "diff {}/{}/{} updated/added/deleted; t1 t2 t3 = {:?}; {} new scenarios; {elapsed:?} {}",
            counts.0,
            counts.1,
            counts.2,
            classes.map(|c| c.map(|c| c.as_str())),
            c.new_scenarios.len(),
            problems.join("; ")
        ),
    );
}

/// product, version, test, fails, R, S, V, FP, FV
const TRAINING_ROWS: &str = "\
P1 V1 TC1 1 0 8 2 0 0
P1 V1 TC2 0 0 4 1 0 0
P1 V2 TC1 1 0 8 2 0 1
P1 V2 TC2 0 0 4 1 0 0
P1 V3 TC1 0 0 8 2 0 2
P1 V3 TC2 0 0 4 1 0 0
P1 V4 TC1 0 0 8 2 0 2
P1 V4 TC2 0 0 4 1 0 0
P2 V1 TC1 1 1 9 3 1 2
P2 V1 TC2 0 0 4 1 0 0
P2 V1 TC3 0 0 4 1 0 0
P2 V2 TC1 0 1 9 3 1 3
P2 V2 TC2 1 0 4 1 0 0
P2 V2 TC3 0 0 4 1 0 0
P2 V3 TC1 0 1 9 3 1 3
P2 V3 TC2 0 0 4 1 0 1
P2 V3 TC3 0 0 4 1 0 0
P3 V1 TC1 1 1 9 3 2 3
P3 V1 TC2 1 1 5 2 1 1
P3 V1 TC3 0 0 4 1 0 0
P3 V2 TC1 1 1 9 3 2 4
P3 V2 TC2 0 1 5 2 1 2
P3 V2 TC3 0 0 4 1 0 0
";

#[test]
fn criterion_02_training_set_rows() {
    let expected: Vec<Vec<&str>> = TRAINING_ROWS.lines().map(|l| l.split_whitespace().collect()).collect();
    let mut history = String::from("product_id,version_id,test_id,verdict\n");
    let mut features = String::from("product_id,test_id,retestable,size,variability\n");
    let mut seen = BTreeSet::new();
    for r in &expected {
        let verdict = if r[3] == "1" { "fail" } else { "pass" };
        history.push_str(&format!("{},{},{},{verdict}\n", r[0], r[1], r[2]));
        if seen.insert((r[0], r[2])) {
            features.push_str(&format!("{},{},{},{},{}\n", r[0], r[2], r[4], r[5], r[6]));
        }
    }
    let h = History::from_csv(&history).unwrap();
    let f = FeatureTable::from_csv(&features).unwrap();
    let rows = build_training_set(&h, &f, None).unwrap();
    let got: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.product_id.clone(),
                r.version_id.clone(),
                r.test_id.clone(),
                (r.fails as u8).to_string(),
                (r.retestable as u8).to_string(),
                r.size.to_string(),
                r.variability.to_string(),
                r.failing_products.to_string(),
                r.failing_versions.to_string(),
            ]
        })
        .collect();
    let mismatches: Vec<String> = expected
        .iter()
        .zip(&got)
        .filter(|(e, g)| e.iter().zip(g.iter()).any(|(a, b)| a != b))
        .map(|(e, g)| format!("expected {} got {}", e.join(" "), g.join(" ")))
        .collect();
    let ok = got.len() == expected.len() && mismatches.is_empty();
    verdict_line(
        "2 training set",
        ok,
        &format!("{}/{} rows match on all 9 columns {}", got.len() - mismatches.len(), expected.len(), mismatches.join("; ")),
    );
}

/// Two-point covariates keep every standard error near or below 0.1 at n = 2000.
fn synthetic_rows(rng: &mut ChaCha8Rng, n: usize, beta: &[f64; 6]) -> Vec<TrainingRow> {
    (0..n)
        .map(|i| {
            // mostly zero, otherwise 3
            let mut sparse = || if rng.gen_bool(0.3) { 3u32 } else { 0 };
            let (v, s, fp, fv) = (sparse(), sparse(), sparse(), sparse());
            let r = rng.gen_bool(0.3);
            let eta = beta[0]
                + beta[1] * v as f64
                + beta[2] * s as f64
                + beta[3] * fp as f64
                + beta[4] * fv as f64
                + beta[5] * r as u8 as f64;
            let p = 1.0 / (1.0 + (-eta).exp());
            TrainingRow {
                product_id: "P".into(),
                version_id: "V1".into(),
                test_id: format!("T{i}"),
                fails: rng.gen_bool(p),
                retestable: r,
                size: s,
                variability: v,
                failing_products: fp,
                failing_versions: fv,
            }
        })
        .collect()
}

fn design(rows: &[TrainingRow]) -> (Vec<[f64; 6]>, Vec<f64>) {
    let x = rows
        .iter()
        .map(|r| {
            [
                1.0,
                r.variability as f64,
                r.size as f64,
                r.failing_products as f64,
                r.failing_versions as f64,
                r.retestable as u8 as f64,
            ]
        })
        .collect();
    let y = rows.iter().map(|r| r.fails as u8 as f64).collect();
    (x, y)
}

/// Maximum likelihood by gradient descent with Barzilai-Borwein steps on
/// standardized columns.
fn gradient_descent_oracle(rows: &[TrainingRow]) -> [f64; 6] {
    let (x, y) = design(rows);
    let n = x.len() as f64;
    let mut mean = [0.0; 6];
    let mut sd = [1.0; 6];
    for j in 1..6 {
        mean[j] = x.iter().map(|r| r[j]).sum::<f64>() / n;
        sd[j] = (x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
    }
    let z: Vec<[f64; 6]> = x
        .iter()
        .map(|r| {
            let mut o = [1.0; 6];
            for j in 1..6 {
                o[j] = (r[j] - mean[j]) / sd[j];
            }
            o
        })
        .collect();
    let grad = |g: &[f64; 6]| {
        let mut out = [0.0; 6];
        for (r, yi) in z.iter().zip(&y) {
            let eta: f64 = r.iter().zip(g).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            for j in 0..6 {
                out[j] += (p - yi) * r[j] / n;
            }
        }
        out
    };
    let mut g = [0.0; 6];
    let mut d = grad(&g);
    let mut step = 1.0;
    for _ in 0..100_000 {
        let next: [f64; 6] = std::array::from_fn(|j| g[j] - step * d[j]);
        let dn = grad(&next);
        let s: [f64; 6] = std::array::from_fn(|j| next[j] - g[j]);
        let t: [f64; 6] = std::array::from_fn(|j| dn[j] - d[j]);
        let st: f64 = s.iter().zip(&t).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        g = next;
        d = dn;
        if d.iter().map(|a| a * a).sum::<f64>().sqrt() < 1e-13 {
            break;
        }
        if st > 0.0 {
            step = ss / st;
        }
    }
    let mut beta = [0.0; 6];
    beta[0] = g[0];
    for j in 1..6 {
        beta[j] = g[j] / sd[j];
        beta[0] -= g[j] * mean[j] / sd[j];
    }
    beta
}

#[test]
fn criterion_03_regression_recovery() {
    let truth = [-0.8, 0.3, -0.2, 0.5, 0.4, 0.6];
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let rows = synthetic_rows(&mut rng, 2000, &truth);
    let start = Instant::now();
    let m = fit_logistic(&rows, &Factor::ALL).unwrap();
    let elapsed = start.elapsed();
    let fitted: Vec<f64> = std::iter::once(m.intercept.coefficient)
        .chain(Factor::ALL.iter().map(|f| m.term(*f).unwrap().coefficient))
        .collect();

    let (x, y) = design(&rows);
    let mut score = [0.0f64; 6];
    for (r, yi) in x.iter().zip(&y) {
        let eta: f64 = r.iter().zip(&fitted).map(|(a, b)| a * b).sum();
        let p = 1.0 / (1.0 + (-eta).exp());
        for j in 0..6 {
            score[j] += (yi - p) * r[j];
        }
    }
    let oracle = gradient_descent_oracle(&rows);

    let recovery = fitted.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let residual = score.iter().map(|s| s.abs()).fold(0.0, f64::max);
    let agreement = fitted.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ok = m.converged
        && recovery <= COEFFICIENT_TOLERANCE
        && residual < SCORE_TOLERANCE
        && agreement < ORACLE_AGREEMENT
        && elapsed < IRLS_RUNTIME;
    verdict_line(
        "3 regression",
        ok,
        &format!(
            "max |beta - truth| {recovery:.4}; max score {residual:.2e}; max |beta - descent| {agreement:.2e}; {} iterations, {elapsed:?}",
            m.iterations
        ),
    );
}

/// Composite Simpson integral of the standard normal density.
fn phi_oracle(z: f64) -> f64 {
    let n = 20_000;
    let h = z.abs() / n as f64;
    let f = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(0.0) + f(z.abs());
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let half = s * h / 3.0;
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

#[test]
fn criterion_04_wald_accuracy() {
    let worst = (-600..=600)
        .map(|i| i as f64 / 100.0)
        .map(|z| (phi(z) - phi_oracle(z)).abs())
        .fold(0.0, f64::max);

    // V and S carry no effect
    let truth = [-1.0, 0.0, 0.0, 0.7, 0.5, 0.6];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut trials, mut retained) = (0, 0);
    for _ in 0..100 {
        let rows = synthetic_rows(&mut rng, 400, &truth);
        let s = select_significant_factors(&rows, &Factor::ALL, DEFAULT_ALPHA).unwrap();
        for f in [Factor::V, Factor::S] {
            trials += 1;
            retained += s.retained.contains(&f) as usize;
        }
    }
    let rate = retained as f64 / trials as f64;
    let ok = worst < PHI_TOLERANCE && rate >= TYPE_I_BAND.0 && rate < TYPE_I_BAND.1;
    verdict_line(
        "4 wald",
        ok,
        &format!("max |phi - quadrature| {worst:.2e} on |z| <= 6; null factors retained in {retained}/{trials} = {:.1}%", rate * 100.0),
    );
}

/// Random single use case with at most four conditions and two returning flows.
fn random_use_case(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=6);
    let mut text = String::from("USE CASE G\n1.1 Basic Flow (BF)\n");
    let mut conditions = Vec::new();
    for i in 1..=n {
        let step = match rng.gen_range(0..4) {
            0 => format!("The operator SENDS the request {i} TO the system"),
            1 => format!("The system SENDS the reply {i} TO the operator"),
            2 => format!("The system updates the counter {i}"),
            _ => {
                conditions.push(i);
                format!("The system VALIDATES THAT the state {i} is valid")
            }
        };
        text.push_str(&format!("{i}. {step}.\n"));
    }
    let mut flows = 1;
    let mut returning = 0;
    let mut budget = 4usize.saturating_sub(conditions.len());
    for &c in &conditions {
        flows += 1;
        text.push_str(&format!("1.{flows} Specific Alternative Flow (SAF{})\nRFS {c}\n", flows - 1));
        let mut k = 1;
        for _ in 0..rng.gen_range(0..=2) {
            text.push_str(&format!("{k}. The system resets the counter {c}{k}.\n"));
            k += 1;
        }
        if budget > 0 && rng.gen_bool(0.3) {
            budget -= 1;
            text.push_str(&format!("{k}. The system VALIDATES THAT the retry {c} is allowed.\n"));
            k += 1;
        }
        if returning < 2 && rng.gen_bool(0.5) {
            returning += 1;
            text.push_str(&format!("{k}. RESUME STEP {}.\n", rng.gen_range(1..=n)));
        } else {
            text.push_str(&format!("{k}. ABORT.\n"));
        }
    }
    if budget > 0 && rng.gen_bool(0.4) {
        flows += 1;
        let a = rng.gen_range(1..=n);
        let b = rng.gen_range(a..=n);
        text.push_str(&format!(
            "1.{flows} Bounded Alternative Flow (BAF1)\nRFS {a}-{b}\n1. IF the power is low THEN\n2. ABORT.\n3. ENDIF\n"
        ));
    }
    text
}

type Path_ = Vec<(String, Option<bool>)>;

/// Follows one vector of branch decisions through the graph. `Some` when
/// the walk ends exactly as the decisions run out and never re-enters a
/// flow at the same condition.
fn follow(g: &ScenarioGraph, bits: &[bool]) -> Result<Option<Path_>, ()> {
    let mut at = g.start;
    let mut used = 0;
    let mut entered = BTreeSet::new();
    let mut path = Vec::new();
    for _ in 0..10_000 {
        let node = &g.nodes[at];
        match node.kind {
            NodeKind::Abort => {
                path.push((node.key.clone(), None));
                return Ok((used == bits.len()).then_some(path));
            }
            NodeKind::Exit if node.next.is_none() => {
                path.push((node.key.clone(), None));
                return Ok((used == bits.len()).then_some(path));
            }
            NodeKind::Condition => {
                let Some(&b) = bits.get(used) else {
                    // decisions ran out mid-walk
                    return Err(());
                };
                used += 1;
                if b == node.enter_on && !entered.insert(node.key.clone()) {
                    return Ok(None);
                }
                let Some(edge) = node.branch(b) else {
                    return Ok(None);
                };
                path.push((node.key.clone(), Some(b)));
                at = edge.target;
            }
            _ => {
                path.push((node.key.clone(), None));
                at = node.next.expect("successor");
            }
        }
    }
    Ok(None)
}

/// Every path, from every decision vector up to `max_bits` long. `None`
/// when some vector of the maximum length is still walking.
fn brute_force_paths(g: &ScenarioGraph, max_bits: usize) -> Option<BTreeSet<Path_>> {
    let mut out = BTreeSet::new();
    for len in 0..=max_bits {
        let mut open = false;
        for mask in 0u32..(1 << len) {
            let bits: Vec<bool> = (0..len).map(|i| mask >> i & 1 == 1).collect();
            match follow(g, &bits) {
                Ok(Some(p)) => {
                    out.insert(p);
                }
                Ok(None) => {}
                Err(()) => open = true,
            }
        }
        if !open {
            return Some(out);
        }
    }
    None
}

#[test]
fn criterion_05_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut cases, mut agree, mut attempts) = (0, 0, 0);
    let mut failures = Vec::new();
    while cases < ENUMERATION_CASES && attempts < 10 * ENUMERATION_CASES {
        attempts += 1;
        let text = random_use_case(&mut rng);
        let Ok(doc) = parse_ps_specification(&text) else { continue };
        let Ok(model) = ScenarioModel::build(&doc) else { continue };
        let g = model.graph("G").unwrap();
        if g.conditions().count() > 4 {
            continue;
        }
        let Some(expected) = brute_force_paths(g, 16) else { continue };
        cases += 1;
        let got: Vec<Path_> = model
            .enumerate("G")
            .unwrap()
            .into_iter()
            .map(|s| s.nodes.into_iter().map(|n| (n.key, n.branch)).collect())
            .collect();
        let got_set: BTreeSet<Path_> = got.iter().cloned().collect();
        if got_set == expected && got_set.len() == got.len() {
            agree += 1;
        } else if failures.len() < 3 {
            failures.push(format!("{text}\nenumerated {} brute force {}", got.len(), expected.len()));
        }
    }
    verdict_line(
        "5 enumeration",
        cases >= ENUMERATION_CASES && agree == cases,
        &format!("{agree}/{cases} random graphs agree with brute-force paths {}", failures.join("\n")),
    );
}

#[derive(Debug, Clone)]
enum Step {
    Input(usize),
    Output(usize),
    Internal(usize),
    /// Condition on a state variable.
    State(usize),
    /// Condition on the entity of input `n`.
    OnInput(usize, usize),
}

impl Step {
    fn key(&self) -> String {
        match self {
            Step::Input(i) => format!("in{i}"),
            Step::Output(i) => format!("out{i}"),
            Step::Internal(i) => format!("int{i}"),
            Step::State(i) => format!("st{i}"),
            Step::OnInput(i, _) => format!("on{i}"),
        }
    }

    fn text(&self) -> String {
        match self {
            Step::Input(i) => format!("The operator SENDS the request{i} TO the system"),
            Step::Output(i) => format!("The system SENDS the reply{i} TO the operator"),
            Step::Internal(i) => format!("The system updates the counter{i}"),
            Step::State(i) => format!("The system VALIDATES THAT the level{i} is high"),
            Step::OnInput(_, n) => format!("The system VALIDATES THAT the request{n} is valid"),
        }
    }

    fn is_interaction(&self) -> bool {
        matches!(self, Step::Input(_) | Step::Output(_))
    }

    fn node(&self) -> ScenarioNode {
        let kind = match self {
            Step::Input(_) => NodeKind::Input,
            Step::Output(_) => NodeKind::Output,
            Step::Internal(_) => NodeKind::Internal,
            _ => NodeKind::Condition,
        };
        ScenarioNode {
            key: self.key(),
            kind,
            text: self.text(),
            use_case: "U".into(),
            flow: "BF".into(),
            flow_origin: "U|BF".into(),
            step: None,
            step_kind: Some(classify_step(&self.text())),
            decision: None,
            branch: None,
        }
    }
}

fn random_step(rng: &mut ChaCha8Rng, id: usize) -> Step {
    match rng.gen_range(0..5) {
        0 => Step::Input(id),
        1 => Step::Output(id),
        2 => Step::Internal(id),
        3 => Step::State(id),
        _ => Step::OnInput(id, rng.gen_range(0..12)),
    }
}

fn scenario(steps: &[Step]) -> Scenario {
    Scenario {
        id: "U#1".into(),
        root: "U".into(),
        nodes: steps.iter().map(Step::node).collect(),
        covered_flows: vec![],
        size: steps.len(),
        variability: 0,
    }
}

/// Rules read directly off the change table for an old and new step list.
fn table_rules(old: &[Step], new: &[Step], removed_flows: usize) -> (TestClass, Vec<Rule>) {
    let inputs: BTreeSet<usize> = old
        .iter()
        .chain(new)
        .filter_map(|s| match s {
            Step::Input(i) => Some(*i),
            _ => None,
        })
        .collect();
    let add_remove = |s: &Step| match s {
        Step::Internal(_) => Rule::R1,
        Step::State(_) => Rule::R3,
        Step::OnInput(_, n) if inputs.contains(n) => Rule::R4,
        Step::OnInput(..) => Rule::R3,
        _ => Rule::R6,
    };
    let mut changes: Vec<Rule> = vec![Rule::R8; removed_flows];
    let keys = |v: &[Step]| -> Vec<String> { v.iter().map(Step::key).collect() };
    let (ok, nk) = (keys(old), keys(new));
    for s in old.iter().filter(|s| !nk.contains(&s.key())) {
        changes.push(add_remove(s));
    }
    for s in new.iter().filter(|s| !ok.contains(&s.key())) {
        changes.push(add_remove(s));
    }
    let shared: Vec<&Step> = old.iter().filter(|s| nk.contains(&s.key())).collect();
    let pos = |v: &[String], k: &str| v.iter().position(|x| x == k).unwrap();
    for s in &shared {
        let moved = shared.iter().any(|t| {
            t.key() != s.key()
                && (!s.is_interaction() || t.is_interaction())
                && (pos(&ok, &s.key()) < pos(&ok, &t.key())) != (pos(&nk, &s.key()) < pos(&nk, &t.key()))
        });
        if moved {
            changes.push(match s {
                Step::Internal(_) => Rule::R2,
                Step::State(_) | Step::OnInput(..) => Rule::R5,
                _ => Rule::R7,
            });
        }
    }
    let obsolete = [Rule::R4, Rule::R5, Rule::R6, Rule::R7, Rule::R8];
    let class = if changes.is_empty() {
        TestClass::Reusable
    } else if changes.iter().any(|r| obsolete.contains(r)) {
        TestClass::Obsolete
    } else {
        TestClass::Retestable
    };
    let multiple = changes.len() > 1;
    let mut rules: Vec<Rule> = changes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    if multiple {
        rules.push(Rule::R9);
    }
    (class, rules)
}

#[test]
fn criterion_06_classification_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut agree = 0;
    let mut by_class: BTreeMap<&str, usize> = BTreeMap::new();
    let mut failures = Vec::new();
    for case in 0..CLASSIFICATION_CASES {
        let len = rng.gen_range(1..=10);
        let old: Vec<Step> = (0..len).map(|i| random_step(&mut rng, i)).collect();
        let mut new = old.clone();
        let mut next_id = len;
        let mut removed_flows = 0;
        // one in ten cases keeps the scenario as is
        let edits = if case % 10 == 0 { 0 } else { rng.gen_range(1..=3) };
        for _ in 0..edits {
            match rng.gen_range(0..4) {
                0 if new.len() < 10 => {
                    let at = rng.gen_range(0..=new.len());
                    new.insert(at, random_step(&mut rng, next_id));
                    next_id += 1;
                }
                1 if !new.is_empty() => {
                    new.remove(rng.gen_range(0..new.len()));
                }
                2 if new.len() > 1 => {
                    let s = new.remove(rng.gen_range(0..new.len()));
                    new.insert(rng.gen_range(0..=new.len()), s);
                }
                _ => removed_flows += 1,
            }
        }
        let flows: Vec<CoveredFlow> = (0..removed_flows)
            .map(|i| CoveredFlow {
                use_case: "U".into(),
                flow: format!("SAF{}", i + 1),
                flow_origin: format!("U|SAF{}", i + 1),
                kind: FlowKind::SpecificAlt,
                entry: Some("1".into()),
            })
            .collect();
        let got = verdict(&scenario_changes(&scenario(&old), &scenario(&new), &flows));
        let expected = table_rules(&old, &new, removed_flows);
        *by_class.entry(expected.0.as_str()).or_default() += 1;
        if got == expected {
            agree += 1;
        } else if failures.len() < 3 {
            failures.push(format!("{old:?} -> {new:?}: got {got:?}, table {expected:?}"));
        }
    }
    verdict_line(
        "6 classification",
        agree == CLASSIFICATION_CASES,
        &format!("{agree}/{CLASSIFICATION_CASES} agree with the rule table ({by_class:?}) {}", failures.join("; ")),
    );
}

fn whole_line(line: &SyntheticLine) -> (Vec<Classification>, ImpactReport) {
    let (last, earlier) = line.products.split_last().unwrap();
    let classifications: Vec<Classification> = earlier
        .iter()
        .map(|p| {
            classify_test_cases(
                Product { id: &p.decisions.product_id, doc: &p.spec },
                &p.suite,
                &BTreeMap::new(),
                Product { id: &last.decisions.product_id, doc: &last.spec },
                &diff(&p.decisions, &last.decisions).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let dates = line
        .products
        .iter()
        .map(|p| (p.decisions.product_id.clone(), p.decisions.created_on))
        .collect();
    let report = aggregate(classifications.clone(), &dates).unwrap();
    (classifications, report)
}

#[test]
fn criterion_07_whole_line_properties() {
    let line = generate(&SyntheticConfig::default());
    let (classifications, report) = whole_line(&line);

    let whole: BTreeSet<&str> = report.new_scenarios.iter().map(|f| f.scenario.id.as_str()).collect();
    let subset = classifications.iter().all(|c| {
        let own: BTreeSet<&str> = c.new_scenarios.iter().map(|f| f.scenario.id.as_str()).collect();
        whole.is_subset(&own)
    });

    let mut reused = (0, 0);
    for p in &line.products {
        let c = classify_test_cases(
            Product { id: &p.decisions.product_id, doc: &p.spec },
            &p.suite,
            &BTreeMap::new(),
            Product { id: "same", doc: &p.spec },
            &diff(&p.decisions, &p.decisions).unwrap(),
        )
        .unwrap();
        reused.0 += c.count(TestClass::Reusable);
        reused.1 += c.verdicts.len();
    }

    let specs: BTreeMap<&str, ScenarioModel> = line
        .products
        .iter()
        .map(|p| (p.decisions.product_id.as_str(), ScenarioModel::build(&p.spec).unwrap()))
        .collect();
    let (mut replayed, mut findings) = (0, 0);
    for c in classifications.iter().chain(&line.classifications) {
        for f in &c.new_scenarios {
            for s in &f.sources {
                findings += 1;
                let old = specs[s.product_id.as_str()].enumerate(&f.scenario.root).unwrap();
                let Some(old) = old.iter().find(|o| o.id == s.old_scenario) else { continue };
                let keys = |v: &[ScenarioNode]| v.iter().map(|n| n.key.clone()).collect::<Vec<_>>();
                if apply_guidance(&old.nodes, &s.guidance).map(|n| keys(&n)) == Some(keys(&f.scenario.nodes)) {
                    replayed += 1;
                }
            }
        }
    }
    let ok = subset && reused.0 == reused.1 && reused.1 > 0 && findings > 0 && replayed == findings;
    verdict_line(
        "7 whole line",
        ok,
        &format!(
            "{} whole-line new scenarios within each of {} products: {subset}; unchanged products reuse {}/{} tests; guidance replays {replayed}/{findings}",
            whole.len(),
            classifications.len(),
            reused.0,
            reused.1
        ),
    );
}

#[test]
fn criterion_08_prioritization_effectiveness() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut first_half, mut random_half, mut auc) = (Vec::new(), Vec::new(), Vec::new());
    let mut ideal_exact = true;
    let mut skipped = 0;
    for seed in 1..=PRIORITIZATION_SEEDS {
        let line = generate(&SyntheticConfig { seed, ..Default::default() });
        let id = line.products.last().unwrap().decisions.product_id.clone();
        let failing = line.history.failing_tests(&id);
        if failing.is_empty() {
            skipped += 1;
            continue;
        }
        let p = prioritize_product(&line.history, &line.features, &id, &[], DEFAULT_ALPHA).unwrap();
        let ranking: Vec<String> = p.result.ranking.iter().map(|r| r.test_id.clone()).collect();
        let m = evaluate_ranking(&ranking, &failing).unwrap();
        first_half.push(m.pct_failing_in_first_half);
        auc.push(m.auc_ratio);

        let mut shuffled = ranking.clone();
        let mut total = 0.0;
        for _ in 0..1000 {
            shuffled.shuffle(&mut rng);
            total += evaluate_ranking(&shuffled, &failing).unwrap().pct_failing_in_first_half;
        }
        random_half.push(total / 1000.0);

        let mut ideal: Vec<String> = failing.iter().cloned().collect();
        ideal.extend(ranking.iter().filter(|t| !failing.contains(*t)).cloned());
        ideal_exact &= evaluate_ranking(&ideal, &failing).unwrap().auc_ratio == 1.0;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (fh, rh, a) = (mean(&first_half), mean(&random_half), mean(&auc));
    let ok = skipped == 0 && fh >= rh + FIRST_HALF_MARGIN && a > MIN_MEAN_AUC_RATIO && ideal_exact;
    verdict_line(
        "8 prioritization",
        ok,
        &format!(
            "{} seeds: {fh:.1}% of failing tests in the first half vs {rh:.1}% at random; mean auc ratio {a:.3}; ideal order exact: {ideal_exact}",
            first_half.len()
        ),
    );
}

fn run_cli(args: &[&str]) -> i32 {
    std::process::Command::new(env!("CARGO_BIN_EXE_plucase"))
        .args(args)
        .output()
        .expect("run plucase")
        .status
        .code()
        .unwrap_or(-1)
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn criterion_09_determinism_and_round_trips() {
    let mut problems = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    let a = generate(&SyntheticConfig { seed: 9, ..Default::default() });
    let b = generate(&SyntheticConfig { seed: 9, ..Default::default() });
    a.write_to(&dir.path().join("line-a")).unwrap();
    b.write_to(&dir.path().join("line-b")).unwrap();
    if files(&dir.path().join("line-a")) != files(&dir.path().join("line-b")) {
        problems.push("generator output differs".to_string());
    }

    let line = dir.path().join("line-a");
    let l = |f: &str| line.join(f).display().to_string();
    for run in ["run-1", "run-2"] {
        let out = dir.path().join(run).display().to_string();
        let mut args = vec!["report".to_string(), "--pl-spec".into(), l("pl.rucm"), "--pl-diagram".into(), l("diagram.json")];
        for p in ["P1", "P2", "P3", "P4", "P5"] {
            args.extend(["--decisions".into(), l(&format!("decisions.{p}.json"))]);
        }
        for p in ["P1", "P2", "P3", "P4"] {
            args.extend(["--previous".into(), p.into(), "--traces".into(), l(&format!("traces.{p}.csv"))]);
        }
        args.extend(["--new".into(), "P5".into(), "--out".into(), out.clone()]);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        for format in ["json", "csv", "html"] {
            let mut with_format = refs.clone();
            with_format.extend(["--format", format]);
            if run_cli(&with_format) != 0 {
                problems.push(format!("report --format {format} failed"));
            }
        }
        let code = run_cli(&[
            "prioritize", "--history", &l("history.csv"), "--features", &l("features.csv"), "--new", "P5", "--out", &out,
        ]);
        if code != 0 {
            problems.push("prioritize failed".into());
        }
    }
    let (r1, r2) = (files(&dir.path().join("run-1")), files(&dir.path().join("run-2")));
    if r1.len() != 5 || r1 != r2 {
        problems.push(format!("outputs differ between runs ({} files)", r1.len()));
    }

    let mut round_trips = 0;
    for (name, text) in [
        ("fixture", std::fs::read_to_string(sto("pl.rucm")).unwrap()),
        ("synthetic", a.pl_text.clone()),
    ] {
        let doc = parse_specification(&text).unwrap();
        let again = parse_specification(&serialize_specification(&doc)).unwrap();
        if serialize_specification(&again) == serialize_specification(&doc) && again.use_cases == doc.use_cases {
            round_trips += 1;
        } else {
            problems.push(format!("{name} specification round trip"));
        }
    }
    for d in [parse_diagram(&std::fs::read_to_string(sto("diagram.json")).unwrap()).unwrap(), a.diagram.clone()] {
        if parse_diagram(&d.to_json()).unwrap() == d {
            round_trips += 1;
        } else {
            problems.push("diagram round trip".into());
        }
    }
    for m in a.products.iter().map(|p| p.decisions.clone()).chain([load_decisions(&sto("decisions.P1.json")).unwrap()]) {
        if DecisionModel::parse(&m.to_json()).unwrap() == m {
            round_trips += 1;
        } else {
            problems.push(format!("decisions {} round trip", m.product_id));
        }
    }
    let report = ImpactReport::from_json(&String::from_utf8(r1["impact.json"].clone()).unwrap()).unwrap();
    if ImpactReport::from_json(&report.to_json()).unwrap() == report && report.to_json().as_bytes() == r1["impact.json"] {
        round_trips += 1;
    } else {
        problems.push("report round trip".into());
    }
    verdict_line(
        "9 determinism",
        problems.is_empty(),
        &format!("{} files identical across runs; {round_trips} round trips {}", r1.len(), problems.join("; ")),
    );
}

#[test]
fn criterion_10_performance() {
    let line = generate(&SyntheticConfig::default());
    let start = Instant::now();
    let (classifications, report) = whole_line(&line);
    let _ = report.to_json();
    let classify = start.elapsed();

    let id = line.products.last().unwrap().decisions.product_id.clone();
    let start = Instant::now();
    let p = prioritize_product(&line.history, &line.features, &id, &[], DEFAULT_ALPHA).unwrap();
    let prioritize = start.elapsed();
    let ok = classify < LINE_RUNTIME && prioritize < LINE_RUNTIME;
    verdict_line(
        "10 performance",
        ok,
        &format!(
            "classify {} suites and report: {classify:?}; prioritize {} tests: {prioritize:?}",
            classifications.len(),
            p.result.ranking.len()
        ),
    );
}
