//! Test cases, their trace links to use case flows, and the retrieval of
//! the test cases that exercise a scenario.
//!
//! Traces are read from CSV with the columns
//! `test_id,use_case,flow_id,order,to_step`; the last two may be empty.
//! `order` is the 1-based position of the flow among the flows a scenario
//! covers, `to_step` the reference step a bounded or global flow is entered
//! from.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rucm::UseCaseDocument;
use crate::scenario::{NodeKind, Scenario, ScenarioError, ScenarioModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace file: {0}")]
    Csv(String),
    #[error("test `{test}` is traced to unknown flow `{use_case}`/{flow}")]
    UnknownFlow {
        test: String,
        use_case: String,
        flow: String,
    },
    #[error("test `{test}` matches several scenarios: {}; add a line to the overrides file", .candidates.join(", "))]
    AmbiguousTrace { test: String, candidates: Vec<String> },
    #[error("override maps test `{test}` to `{scenario}`, which is not one of its candidates")]
    BadOverride { test: String, scenario: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraceLink {
    pub test_id: String,
    pub use_case: String,
    pub flow_id: String,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub to_step: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCaseRecord {
    pub id: String,
    pub product_id: String,
    pub title: String,
    pub links: Vec<TraceLink>,
}

impl TestCaseRecord {
    fn flow_set(&self) -> BTreeSet<(&str, &str)> {
        self.links
            .iter()
            .map(|l| (l.use_case.as_str(), l.flow_id.as_str()))
            .collect()
    }
}

/// Test suite of one product, in the order the tests first appear.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TestSuite {
    pub product_id: String,
    pub tests: Vec<TestCaseRecord>,
}

impl TestSuite {
    pub fn test(&self, id: &str) -> Option<&TestCaseRecord> {
        self.tests.iter().find(|t| t.id == id)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["test_id", "use_case", "flow_id", "order", "to_step"])
            .expect("in-memory write");
        for l in self.tests.iter().flat_map(|t| &t.links) {
            w.write_record([
                l.test_id.as_str(),
                &l.use_case,
                &l.flow_id,
                &l.order.map(|o| o.to_string()).unwrap_or_default(),
                l.to_step.as_deref().unwrap_or(""),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn empty_as_none<T: std::str::FromStr>(s: Option<&str>) -> Result<Option<T>, String> {
    match s.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| format!("bad value `{v}`")),
    }
}

/// Reads a `traces.<product>.csv` file.
pub fn load_traces(text: &str, product_id: &str) -> Result<TestSuite, TraceError> {
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut suite = TestSuite {
        product_id: product_id.to_string(),
        tests: Vec::new(),
    };
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| TraceError::Csv(e.to_string()))?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).filter(|s| !s.is_empty());
        let (Some(test), Some(uc), Some(flow)) = (field(0), field(1), field(2)) else {
            return Err(TraceError::Csv(format!("line {line}: missing test_id, use_case or flow_id")));
        };
        let order = empty_as_none::<usize>(rec.get(3)).map_err(|e| TraceError::Csv(format!("line {line}: {e}")))?;
        let to_step = empty_as_none::<String>(rec.get(4)).map_err(|e| TraceError::Csv(format!("line {line}: {e}")))?;
        let link = TraceLink {
            test_id: test.to_string(),
            use_case: uc.to_string(),
            flow_id: flow.to_string(),
            order,
            to_step,
        };
        let at = *index.entry(test.to_string()).or_insert_with(|| {
            suite.tests.push(TestCaseRecord {
                id: test.to_string(),
                product_id: product_id.to_string(),
                title: test.to_string(),
                links: Vec::new(),
            });
            suite.tests.len() - 1
        });
        suite.tests[at].links.push(link);
    }
    Ok(suite)
}

/// Reads an overrides file (`test_id,scenario_id`) that settles ambiguous traces.
pub fn load_overrides(text: &str) -> Result<BTreeMap<String, String>, TraceError> {
    #[derive(Deserialize)]
    struct Row {
        test_id: String,
        scenario_id: String,
    }
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for row in r.deserialize::<Row>() {
        let row = row.map_err(|e| TraceError::Csv(e.to_string()))?;
        out.insert(row.test_id, row.scenario_id);
    }
    Ok(out)
}

/// Checks that every link names a flow of the product's PS document.
pub fn check_links(suite: &TestSuite, doc: &UseCaseDocument) -> Result<(), TraceError> {
    for l in suite.tests.iter().flat_map(|t| &t.links) {
        let known = doc
            .use_case(&l.use_case)
            .and_then(|uc| uc.flow(&l.flow_id))
            .is_some();
        if !known {
            return Err(TraceError::UnknownFlow {
                test: l.test_id.clone(),
                use_case: l.use_case.clone(),
                flow: l.flow_id.clone(),
            });
        }
    }
    Ok(())
}

/// A scenario exercised by one or more test cases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracedScenario {
    pub scenario: Scenario,
    pub tests: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TestedScenarios {
    pub scenarios: Vec<TracedScenario>,
    /// Tests whose links match no scenario.
    pub untraced: Vec<String>,
}

impl TestedScenarios {
    pub fn of_use_case<'a>(&'a self, use_case: &'a str) -> impl Iterator<Item = &'a TracedScenario> {
        self.scenarios.iter().filter(move |s| s.scenario.root == use_case)
    }

    pub fn scenario_of(&self, test: &str) -> Option<&Scenario> {
        self.scenarios
            .iter()
            .find(|s| s.tests.iter().any(|t| t == test))
            .map(|s| &s.scenario)
    }
}

fn link_fits(s: &Scenario, link: &TraceLink) -> bool {
    let Some(pos) = s
        .covered_flows
        .iter()
        .position(|f| f.use_case == link.use_case && f.flow == link.flow_id)
    else {
        return false;
    };
    if let Some(o) = link.order {
        if pos + 1 != o {
            return false;
        }
    }
    if let Some(step) = &link.to_step {
        if s.covered_flows[pos].entry.as_deref() != Some(step.as_str()) {
            return false;
        }
    }
    true
}

fn implicit_abort(s: &Scenario) -> bool {
    s.last()
        .map(|n| n.kind == NodeKind::Abort && n.key.ends_with("|implicit-abort"))
        .unwrap_or(false)
}

/// Scenarios of `model` that a test's links pick out: the scenario starts in
/// a linked use case, covers every linked flow, and takes exactly the linked
/// alternative flows. Basic flows of included use cases may be left implicit.
pub fn identify_tested_scenarios(
    model: &ScenarioModel,
    suite: &TestSuite,
    overrides: &BTreeMap<String, String>,
) -> Result<TestedScenarios, TraceError> {
    let mut all: Vec<Scenario> = Vec::new();
    for uc in model.graphs.keys() {
        all.extend(model.enumerate(uc)?);
    }
    type Flows<'a> = BTreeSet<(&'a str, &'a str)>;
    let flow_sets: Vec<(Flows, Flows)> = all
        .iter()
        .map(|s| {
            let covered = s
                .covered_flows
                .iter()
                .map(|f| (f.use_case.as_str(), f.flow.as_str()))
                .collect();
            let alternative = s
                .alternative_flows()
                .map(|f| (f.use_case.as_str(), f.flow.as_str()))
                .collect();
            (covered, alternative)
        })
        .collect();

    let mut by_scenario: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut untraced = Vec::new();
    for t in &suite.tests {
        let linked = t.flow_set();
        let mut candidates: Vec<usize> = (0..all.len())
            .filter(|&i| {
                let (covered, alternative) = &flow_sets[i];
                linked.iter().any(|(uc, _)| *uc == all[i].root)
                    && linked.is_subset(covered)
                    && alternative.is_subset(&linked)
                    && t.links.iter().all(|l| link_fits(&all[i], l))
            })
            .collect();
        // a bare condition failure without a flow cannot be traced to
        if candidates.len() > 1 && candidates.iter().any(|&i| !implicit_abort(&all[i])) {
            candidates.retain(|&i| !implicit_abort(&all[i]));
        }
        let chosen = match candidates.as_slice() {
            [] => {
                untraced.push(t.id.clone());
                continue;
            }
            [one] => *one,
            many => match overrides.get(&t.id) {
                Some(sid) => *many.iter().find(|&&i| &all[i].id == sid).ok_or_else(|| {
                    TraceError::BadOverride {
                        test: t.id.clone(),
                        scenario: sid.clone(),
                    }
                })?,
                None => {
                    return Err(TraceError::AmbiguousTrace {
                        test: t.id.clone(),
                        candidates: many.iter().map(|&i| all[i].id.clone()).collect(),
                    })
                }
            },
        };
        by_scenario.entry(chosen).or_default().push(t.id.clone());
    }
    Ok(TestedScenarios {
        scenarios: by_scenario
            .into_iter()
            .map(|(i, tests)| TracedScenario {
                scenario: all[i].clone(),
                tests,
            })
            .collect(),
        untraced,
    })
}

/// Test cases retrieved for scenario `s`.
pub fn retrieve_test_cases<'a>(s: &Scenario, tested: &'a TestedScenarios) -> Vec<&'a str> {
    tested
        .scenarios
        .iter()
        .filter(|t| t.scenario.root == s.root && t.scenario.keys() == s.keys())
        .flat_map(|t| t.tests.iter().map(String::as_str))
        .collect()
}
