//! Seeded generator for a synthetic product line: specification, diagram,
//! decisions of each product, test suites with traces, scenario features and
//! an execution history drawn from a known failure model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::{classify_test_cases, Classification, Product, TestClass};
use crate::configurator::generate_ps_specification;
use crate::decision::{diff, DecisionModel, DiagramDecision, SpecDecision, SpecElement};
use crate::diagram::{parse_diagram, PLDiagram};
use crate::prioritizer::{Execution, FeatureTable, History, TestFeatures};
use crate::rucm::{parse_specification, UseCaseDocument};
use crate::scenario::ScenarioModel;
use crate::traceability::{load_traces, TestSuite};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub products: usize,
    /// Use cases tested directly (not only through an include).
    pub root_use_cases: usize,
    /// Decision changes between consecutive products.
    pub changes_per_product: std::ops::RangeInclusive<usize>,
    pub versions_per_product: std::ops::RangeInclusive<usize>,
    pub failure_model: FailureModel,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 1,
            products: 5,
            root_use_cases: 22,
            changes_per_product: 2..=4,
            versions_per_product: 2..=4,
            failure_model: FailureModel::default(),
        }
    }
}

/// Log-odds of a test failing on one version:
/// `intercept + fragile * [test is fault-prone] + fresh * [first product of the test]
///  + retestable * R + size * S + variability * V + version * (version index)`.
#[derive(Debug, Clone, Copy)]
pub struct FailureModel {
    pub fragile_share: f64,
    pub intercept: f64,
    pub fragile: f64,
    pub fresh: f64,
    pub retestable: f64,
    pub size: f64,
    pub variability: f64,
    pub version: f64,
}

impl Default for FailureModel {
    fn default() -> Self {
        FailureModel {
            fragile_share: 0.15,
            intercept: -6.5,
            fragile: 5.5,
            fresh: 1.5,
            retestable: 1.5,
            size: 0.05,
            variability: -0.1,
            version: -0.3,
        }
    }
}

/// One generated product.
#[derive(Debug, Clone)]
pub struct SyntheticProduct {
    pub decisions: DecisionModel,
    pub spec: UseCaseDocument,
    pub suite: TestSuite,
    pub traces_csv: String,
    /// Tests first introduced by this product.
    pub introduced: BTreeSet<String>,
    /// Scenario id of each test.
    pub scenario_of: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct SyntheticLine {
    pub pl_text: String,
    pub pl: UseCaseDocument,
    pub diagram: PLDiagram,
    pub products: Vec<SyntheticProduct>,
    /// Classification of each product's suite against the next product.
    pub classifications: Vec<Classification>,
    pub features: FeatureTable,
    pub history: History,
    pub fragile: BTreeSet<String>,
}

#[derive(Debug, Clone)]
struct Variant {
    name: String,
    kind: VariantKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VariantKind {
    Ordered,
    Checked,
    Plain,
}

#[derive(Debug, Clone)]
struct RootUseCase {
    name: String,
    optional_step: bool,
    bounded: bool,
    returning: bool,
    shared: Option<usize>,
    vp: Option<(String, Vec<Variant>)>,
}

const SHARED: usize = 3;

fn shared_name(k: usize) -> String {
    format!("Check Unit Status {}", k + 1)
}

fn plan(rng: &mut ChaCha8Rng, roots: usize) -> Vec<RootUseCase> {
    (1..=roots)
        .map(|i| {
            let vp = rng.gen_bool(0.6).then(|| {
                let n = rng.gen_range(2..=3);
                let variants = (0..n)
                    .map(|k| Variant {
                        name: format!("Operate Function {i:02} in Mode {}", (b'A' + k as u8) as char),
                        kind: [VariantKind::Ordered, VariantKind::Checked, VariantKind::Plain][rng.gen_range(0..3)],
                    })
                    .collect();
                (format!("Mode of Function {i:02}"), variants)
            });
            RootUseCase {
                name: format!("Operate Function {i:02}"),
                optional_step: rng.gen_bool(0.6),
                bounded: rng.gen_bool(0.5),
                returning: rng.gen_bool(0.5),
                shared: rng.gen_bool(0.3).then(|| rng.gen_range(0..SHARED)),
                vp,
            }
        })
        .collect()
}

fn spec_text(roots: &[RootUseCase]) -> String {
    let mut t = String::from("# Synthetic product line\n");
    for k in 0..SHARED {
        let n = k + 1;
        let _ = write!(
            t,
            "\nUSE CASE {}\n1.1 Basic Flow (BF)\n\
             1. The system VALIDATES THAT the unit {n} power supply is stable.\n\
             2. The system reads the unit {n} counters.\n\
             1.2 Specific Alternative Flow (SAF1)\nRFS 1\n\
             1. The system records the unit {n} power failure.\n2. ABORT.\n",
            shared_name(k)
        );
    }
    for uc in roots {
        let id = &uc.name["Operate Function ".len()..];
        let mut steps = vec![
            format!("The operator SENDS the function {id} command TO the system."),
            format!("The system VALIDATES THAT the function {id} command is accepted."),
        ];
        let mut optional = None;
        if uc.optional_step {
            optional = Some(steps.len() + 1);
            steps.push(format!("The system records the function {id} usage."));
        }
        if let Some(k) = uc.shared {
            steps.push(format!("INCLUDE USE CASE {}.", shared_name(k)));
        }
        let temp = steps.len() + 1;
        steps.push(format!("The system VALIDATES THAT the function {id} temperature is nominal."));
        if let Some((vp, _)) = &uc.vp {
            steps.push(format!("INCLUDE <VARIATION POINT: {vp}>."));
        }
        let out = steps.len() + 1;
        steps.push(format!("The system SENDS the function {id} result TO the operator."));

        let _ = writeln!(t, "\nUSE CASE {}\n1.1 Basic Flow (BF)", uc.name);
        for (i, s) in steps.iter().enumerate() {
            let mark = if optional == Some(i + 1) { "<OPTIONAL> " } else { "" };
            let _ = writeln!(t, "{}. {mark}{s}", i + 1);
        }
        let _ = write!(
            t,
            "1.2 Specific Alternative Flow (SAF1)\nRFS 2\n\
             1. The system SENDS the function {id} rejection TO the operator.\n2. ABORT.\n\
             1.3 Specific Alternative Flow (SAF2)\nRFS {temp}\n1. The system cools the function {id} unit.\n"
        );
        if uc.returning {
            let _ = writeln!(t, "2. RESUME STEP {}.", temp + 1);
        } else {
            let _ = writeln!(t, "2. ABORT.");
        }
        if uc.bounded {
            let _ = write!(
                t,
                "1.4 <OPTIONAL> Bounded Alternative Flow (BAF1)\nRFS 1-{out}\n\
                 1. IF the function {id} supply voltage fluctuates THEN\n2. ABORT.\n3. ENDIF\n"
            );
        }
        if let Some((_, variants)) = &uc.vp {
            for (k, v) in variants.iter().enumerate() {
                let m = (b'a' + k as u8) as char;
                let _ = writeln!(t, "\n<VARIANT> USE CASE {}\n1.1 Basic Flow (BF)", v.name);
                match v.kind {
                    VariantKind::Ordered => {
                        for (j, what) in ["status", "log", "trace"].iter().enumerate() {
                            let _ = writeln!(
                                t,
                                "V{}. <OPTIONAL> The system SENDS the function {id} mode {m} {what} TO the operator.",
                                j + 1
                            );
                        }
                    }
                    VariantKind::Checked => {
                        let _ = write!(
                            t,
                            "1. The system VALIDATES THAT the function {id} mode {m} sensor is ready.\n\
                             2. The system SENDS the function {id} mode {m} data TO the operator.\n\
                             1.2 Specific Alternative Flow (SAF1)\nRFS 1\n1. ABORT.\n"
                        );
                    }
                    VariantKind::Plain => {
                        let _ = writeln!(t, "1. The system computes the function {id} mode {m} value.");
                    }
                }
            }
        }
    }
    t
}

fn diagram_of(roots: &[RootUseCase]) -> PLDiagram {
    let mut use_cases = Vec::new();
    let mut vps = Vec::new();
    let mut includes = Vec::new();
    for k in 0..SHARED {
        use_cases.push(serde_json::json!({"name": shared_name(k), "variant": false}));
    }
    for uc in roots {
        use_cases.push(serde_json::json!({"name": uc.name, "variant": false}));
        if let Some(k) = uc.shared {
            includes.push(serde_json::json!({"from": uc.name, "to": shared_name(k)}));
        }
        if let Some((vp, variants)) = &uc.vp {
            let names: Vec<&str> = variants.iter().map(|v| v.name.as_str()).collect();
            for n in &names {
                use_cases.push(serde_json::json!({"name": n, "variant": true}));
            }
            vps.push(serde_json::json!({
                "name": vp,
                "mandatory": true,
                "relations": [{"variants": names, "min": 1, "max": 2}]
            }));
            includes.push(serde_json::json!({"from": uc.name, "to": vp}));
        }
    }
    let j = serde_json::json!({
        "schema_version": crate::diagram::DIAGRAM_SCHEMA_VERSION,
        "use_cases": use_cases,
        "variation_points": vps,
        "includes": includes,
    });
    parse_diagram(&j.to_string()).expect("generated diagram is well formed")
}

/// Every configurable element of the line, with its current choice.
#[derive(Debug, Clone, PartialEq)]
enum Choice {
    Step { use_case: String, step: String, on: bool },
    Flow { use_case: String, flow: String, on: bool },
    Variants { vp: String, use_case: String, all: Vec<String>, on: BTreeSet<String> },
    Order { use_case: String, order: Vec<(String, Option<u32>)> },
}

fn random_order(rng: &mut ChaCha8Rng, use_case: &str) -> Choice {
    let mut picked: Vec<usize> = (0..3).filter(|_| rng.gen_bool(0.6)).collect();
    if picked.is_empty() {
        picked.push(rng.gen_range(0..3));
    }
    picked.shuffle(rng);
    let order = (0..3)
        .map(|j| {
            let pos = picked.iter().position(|&p| p == j).map(|p| p as u32 + 1);
            (format!("V{}", j + 1), pos)
        })
        .collect();
    Choice::Order {
        use_case: use_case.to_string(),
        order,
    }
}

fn random_variants(rng: &mut ChaCha8Rng, all: &[String]) -> BTreeSet<String> {
    let n = rng.gen_range(1..=2.min(all.len()));
    all.choose_multiple(rng, n).cloned().collect()
}

fn initial_choices(rng: &mut ChaCha8Rng, roots: &[RootUseCase]) -> Vec<Choice> {
    let mut out = Vec::new();
    for uc in roots {
        if uc.optional_step {
            out.push(Choice::Step {
                use_case: uc.name.clone(),
                step: "3".into(),
                on: rng.gen_bool(0.5),
            });
        }
        if uc.bounded {
            out.push(Choice::Flow {
                use_case: uc.name.clone(),
                flow: "BAF1".into(),
                on: rng.gen_bool(0.5),
            });
        }
        if let Some((vp, variants)) = &uc.vp {
            let all: Vec<String> = variants.iter().map(|v| v.name.clone()).collect();
            let on = random_variants(rng, &all);
            out.push(Choice::Variants {
                vp: vp.clone(),
                use_case: uc.name.clone(),
                all,
                on,
            });
            for v in variants.iter().filter(|v| v.kind == VariantKind::Ordered) {
                out.push(random_order(rng, &v.name));
            }
        }
    }
    out
}

fn mutate(rng: &mut ChaCha8Rng, c: &mut Choice) {
    match c {
        Choice::Step { on, .. } | Choice::Flow { on, .. } => *on = !*on,
        Choice::Variants { all, on, .. } => loop {
            let next = random_variants(rng, all);
            if next != *on {
                *on = next;
                break;
            }
        },
        Choice::Order { use_case, .. } => {
            let use_case = use_case.clone();
            loop {
                let next = random_order(rng, &use_case);
                if next != *c {
                    *c = next;
                    break;
                }
            }
        }
    }
}

fn decision_model(id: &str, created_on: NaiveDate, choices: &[Choice]) -> DecisionModel {
    let mut m = DecisionModel {
        product_id: id.to_string(),
        product_line: Some("synthetic".into()),
        created_on,
        diagram_decisions: Vec::new(),
        spec_decisions: Vec::new(),
    };
    for c in choices {
        match c {
            Choice::Step { use_case, step, on } => m.spec_decisions.push(SpecDecision {
                use_case: use_case.clone(),
                flow: "BF".into(),
                step: Some(step.clone()),
                element: SpecElement::OptionalStep,
                selected: *on,
                order_number: None,
            }),
            Choice::Flow { use_case, flow, on } => m.spec_decisions.push(SpecDecision {
                use_case: use_case.clone(),
                flow: flow.clone(),
                step: None,
                element: SpecElement::OptionalFlow,
                selected: *on,
                order_number: None,
            }),
            Choice::Variants { vp, use_case, all, on } => m.diagram_decisions.push(DiagramDecision {
                variation_point: vp.clone(),
                including_use_case: use_case.clone(),
                selected_variants: on.clone(),
                unselected_variants: all.iter().filter(|v| !on.contains(*v)).cloned().collect(),
            }),
            Choice::Order { use_case, order } => {
                for (step, pos) in order {
                    m.spec_decisions.push(SpecDecision {
                        use_case: use_case.clone(),
                        flow: "BF".into(),
                        step: Some(step.clone()),
                        element: SpecElement::VariantOrder,
                        selected: pos.is_some(),
                        order_number: *pos,
                    });
                }
            }
        }
    }
    m
}

/// Assigns test ids to scenarios by root use case and covered flows, so a
/// scenario keeps its test across products.
#[derive(Default)]
struct TestRegistry {
    ids: BTreeMap<(String, BTreeSet<(String, String)>), String>,
}

impl TestRegistry {
    fn id(&mut self, root: &str, flows: BTreeSet<(String, String)>) -> (String, bool) {
        let n = self.ids.len();
        let mut fresh = false;
        let id = self
            .ids
            .entry((root.to_string(), flows))
            .or_insert_with(|| {
                fresh = true;
                format!("T{:03}", n + 1)
            })
            .clone();
        (id, fresh)
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Generates a product line and its history.
pub fn generate(cfg: &SyntheticConfig) -> SyntheticLine {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let roots = plan(&mut rng, cfg.root_use_cases);
    let pl_text = spec_text(&roots);
    let pl = parse_specification(&pl_text).expect("generated specification parses");
    let diagram = diagram_of(&roots);
    let root_names: Vec<&str> = roots.iter().map(|r| r.name.as_str()).collect();

    let mut choices = initial_choices(&mut rng, &roots);
    let start = NaiveDate::from_ymd_opt(2015, 1, 15).expect("valid date");
    let mut registry = TestRegistry::default();
    let mut products: Vec<SyntheticProduct> = Vec::new();
    for p in 0..cfg.products {
        if p > 0 {
            let n = rng.gen_range(cfg.changes_per_product.clone()).min(choices.len());
            let picked: Vec<usize> = rand::seq::index::sample(&mut rng, choices.len(), n).into_vec();
            for i in picked {
                mutate(&mut rng, &mut choices[i]);
            }
        }
        let id = format!("P{}", p + 1);
        let created = start + Days::new(150 * p as u64);
        let decisions = decision_model(&id, created, &choices);
        let spec = generate_ps_specification(&pl, &diagram, &decisions)
            .expect("generated decisions are valid")
            .document;
        let model = ScenarioModel::build(&spec).expect("generated specification is well formed");

        let mut traces = String::from("test_id,use_case,flow_id,order,to_step\n");
        let mut introduced = BTreeSet::new();
        let mut scenario_of = BTreeMap::new();
        for root in &root_names {
            for s in model.enumerate(root).expect("bounded scenarios") {
                let flows: BTreeSet<(String, String)> = s
                    .covered_flows
                    .iter()
                    .map(|f| (f.use_case.clone(), f.flow.clone()))
                    .collect();
                let (test, fresh) = registry.id(root, flows.clone());
                if scenario_of.contains_key(&test) {
                    continue;
                }
                if fresh {
                    introduced.insert(test.clone());
                }
                scenario_of.insert(test.clone(), s.id.clone());
                // root first, as engineers write them
                let mut links: Vec<&(String, String)> = flows.iter().filter(|f| f.0 == *root).collect();
                links.extend(flows.iter().filter(|f| f.0 != *root));
                for (uc, flow) in links {
                    let _ = writeln!(traces, "{test},{uc},{flow},,");
                }
            }
        }
        let suite = load_traces(&traces, &id).expect("generated traces parse");
        products.push(SyntheticProduct {
            decisions,
            spec,
            suite,
            traces_csv: traces,
            introduced,
            scenario_of,
        });
    }

    let mut classifications = Vec::new();
    for w in products.windows(2) {
        let dc = diff(&w[0].decisions, &w[1].decisions).expect("same line");
        let c = classify_test_cases(
            Product { id: &w[0].decisions.product_id, doc: &w[0].spec },
            &w[0].suite,
            &BTreeMap::new(),
            Product { id: &w[1].decisions.product_id, doc: &w[1].spec },
            &dc,
        )
        .expect("generated suites classify");
        classifications.push(c);
    }

    let mut features = FeatureTable::default();
    for (p, product) in products.iter().enumerate() {
        let model = ScenarioModel::build(&product.spec).expect("well formed");
        let retest: BTreeSet<&str> = if p == 0 {
            BTreeSet::new()
        } else {
            classifications[p - 1]
                .verdicts
                .iter()
                .filter(|v| v.class == TestClass::Retestable)
                .filter_map(|v| v.new_scenario.as_deref())
                .collect()
        };
        let mut by_id = BTreeMap::new();
        for root in &root_names {
            for s in model.enumerate(root).expect("bounded scenarios") {
                by_id.insert(s.id.clone(), s);
            }
        }
        for (test, sid) in &product.scenario_of {
            let s = &by_id[sid];
            features.insert(TestFeatures {
                product_id: product.decisions.product_id.clone(),
                test_id: test.clone(),
                retestable: retest.contains(sid.as_str()),
                size: s.size as u32,
                variability: s.variability as u32,
            });
        }
    }

    let fm = cfg.failure_model;
    let all_tests: BTreeSet<&String> = products.iter().flat_map(|p| p.scenario_of.keys()).collect();
    let fragile: BTreeSet<String> = all_tests
        .into_iter()
        .filter(|_| rng.gen_bool(fm.fragile_share))
        .cloned()
        .collect();
    let mut history = History::default();
    for product in &products {
        let pid = &product.decisions.product_id;
        let versions = rng.gen_range(cfg.versions_per_product.clone());
        for v in 0..versions {
            for test in product.scenario_of.keys() {
                let f = features.get(pid, test).expect("features of every test");
                let eta = fm.intercept
                    + fm.fragile * fragile.contains(test) as u8 as f64
                    + fm.fresh * product.introduced.contains(test) as u8 as f64
                    + fm.retestable * f.retestable as u8 as f64
                    + fm.size * f.size as f64
                    + fm.variability * f.variability as f64
                    + fm.version * v as f64;
                history.executions.push(Execution {
                    product_id: pid.clone(),
                    version_id: format!("V{}", v + 1),
                    test_id: test.clone(),
                    fails: rng.gen_bool(logistic(eta)),
                });
            }
        }
    }

    SyntheticLine {
        pl_text,
        pl,
        diagram,
        products,
        classifications,
        features,
        history,
        fragile,
    }
}

impl SyntheticLine {
    pub fn product(&self, id: &str) -> Option<&SyntheticProduct> {
        self.products.iter().find(|p| p.decisions.product_id == id)
    }

    /// Writes the line in the layout the command line expects:
    /// `pl.rucm`, `diagram.json`, `decisions.<P>.json`, `traces.<P>.csv`,
    /// `history.csv` and `features.csv`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("pl.rucm"), &self.pl_text)?;
        std::fs::write(dir.join("diagram.json"), self.diagram.to_json())?;
        for p in &self.products {
            let id = &p.decisions.product_id;
            std::fs::write(dir.join(format!("decisions.{id}.json")), p.decisions.to_json())?;
            std::fs::write(dir.join(format!("traces.{id}.csv")), &p.traces_csv)?;
        }
        std::fs::write(dir.join("history.csv"), self.history.to_csv())?;
        std::fs::write(dir.join("features.csv"), self.features.to_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_is_reproducible() {
        let cfg = SyntheticConfig { seed: 11, ..Default::default() };
        let (a, b) = (generate(&cfg), generate(&cfg));
        assert_eq!(a.pl_text, b.pl_text);
        assert_eq!(a.history, b.history);
        assert_eq!(a.features, b.features);
        assert_eq!(a.products.len(), 5);
    }

    #[test]
    fn every_test_traces_to_one_scenario() {
        let line = generate(&SyntheticConfig::default());
        for (p, c) in line.products.iter().zip(&line.classifications) {
            assert!(c.untraced.is_empty(), "{:?}", c.untraced);
            assert_eq!(c.verdicts.len(), p.suite.tests.len());
        }
        let sizes: Vec<usize> = line.products.iter().map(|p| p.suite.tests.len()).collect();
        assert!(sizes.iter().all(|&n| (60..=160).contains(&n)), "{sizes:?}");
    }

    #[test]
    fn consecutive_products_differ() {
        let line = generate(&SyntheticConfig::default());
        for w in line.products.windows(2) {
            assert!(!diff(&w[0].decisions, &w[1].decisions).unwrap().is_empty());
        }
    }
}
