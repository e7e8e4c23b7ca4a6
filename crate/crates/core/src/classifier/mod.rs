//! Classification of a previous product's test cases against a new product,
//! and derivation of the new product's untested scenarios.
//!
//! For each test the scenario it exercises is replayed on the new product's
//! scenario model: conditions shared with the old scenario take the same
//! branch, new conditions take the branch that stays on the old path. The
//! differences between the two step sequences decide the class.

pub mod guidance;
pub mod rules;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use guidance::{apply_guidance, generate_guidance, Edit, EditOp, Guidance};
pub use rules::{
    condition_refers_to_input_entity, scenario_changes, verdict, ChangeKind, Rule, ScenarioChange,
    TestClass,
};

use crate::decision::ChangeSet;
use crate::rucm::{StepKind, UseCaseDocument};
use crate::scenario::{CoveredFlow, NodeKind, Scenario, ScenarioError, ScenarioModel};
use crate::traceability::{identify_tested_scenarios, TestSuite, TraceError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub test_id: String,
    pub product_id: String,
    pub class: TestClass,
    pub rules: Vec<Rule>,
    pub use_case: String,
    /// Old scenario the test exercises.
    pub scenario: String,
    /// Scenario of the new product the test still exercises; none when obsolete.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_scenario: Option<String>,
    /// Size and variability of the scenario the test exercises in the new product.
    pub size: usize,
    pub variability: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub changes: Vec<ScenarioChange>,
}

/// An old scenario a new scenario can be derived from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidanceSource {
    pub product_id: String,
    pub old_scenario: String,
    pub tests: Vec<String>,
    pub guidance: Guidance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewScenarioFinding {
    pub scenario: Scenario,
    pub sources: Vec<GuidanceSource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub previous: String,
    pub product: String,
    pub impacted_use_cases: Vec<String>,
    pub verdicts: Vec<Verdict>,
    pub new_scenarios: Vec<NewScenarioFinding>,
    /// Tests whose links match no scenario of the previous product.
    pub untraced: Vec<String>,
}

impl Classification {
    pub fn count(&self, class: TestClass) -> usize {
        self.verdicts.iter().filter(|v| v.class == class).count()
    }

    pub fn verdict(&self, test: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.test_id == test)
    }

    pub fn tests(&self, class: TestClass) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|v| v.class == class)
            .map(|v| v.test_id.as_str())
            .collect()
    }
}

/// One product's artifacts as the classifier needs them.
#[derive(Debug, Clone, Copy)]
pub struct Product<'a> {
    pub id: &'a str,
    pub doc: &'a UseCaseDocument,
}

/// Condition branches of a scenario, keyed by condition and occurrence on the path.
pub fn branch_map(s: &Scenario) -> BTreeMap<(String, usize), bool> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for n in s.nodes.iter().filter(|n| n.kind == NodeKind::Condition) {
        let k = seen.entry(n.key.as_str()).or_insert(0);
        if let Some(b) = n.branch {
            out.insert((n.key.clone(), *k), b);
        }
        *k += 1;
    }
    out
}

/// The new product's version of an old scenario.
pub fn replay(model: &ScenarioModel, old: &Scenario) -> Result<Scenario, ScenarioError> {
    let branches = branch_map(old);
    let mut out = crate::scenario::Walk::new(model, &old.root)?.run(|v| {
        match branches.get(&(v.key.to_string(), v.seen)) {
            Some(&b) => vec![b],
            None => vec![!v.enter_on],
        }
    })?;
    Ok(out.remove(0))
}

/// Scenarios of the new model reachable from an old scenario: shared
/// conditions follow the old branch, new ones are explored both ways with
/// the branch leaving the alternative flow first.
pub fn identify_new_scenarios(model: &ScenarioModel, old: &Scenario) -> Result<Vec<Scenario>, ScenarioError> {
    let branches = branch_map(old);
    crate::scenario::Walk::new(model, &old.root)?.run(|v| {
        match branches.get(&(v.key.to_string(), v.seen)) {
            Some(&b) => vec![b],
            None if !v.enter_allowed => vec![!v.enter_on],
            None => vec![!v.enter_on, v.enter_on],
        }
    })
}

/// Keeps the sources needing the fewest edits, preferring removals on ties.
pub fn filter_sources(mut sources: Vec<GuidanceSource>) -> Vec<GuidanceSource> {
    let rank = |g: &GuidanceSource| (g.guidance.len(), std::cmp::Reverse(g.guidance.removals()));
    let Some(best) = sources.iter().map(rank).min() else {
        return sources;
    };
    sources.retain(|s| rank(s) == best);
    sources
}

fn includes(doc: &UseCaseDocument) -> BTreeMap<&str, Vec<&str>> {
    let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for uc in &doc.use_cases {
        let e = out.entry(uc.name.as_str()).or_default();
        for s in uc.flows().flat_map(|f| &f.steps) {
            if let StepKind::IncludeUseCase { target } = &s.kind {
                e.push(target.as_str());
            }
        }
    }
    out
}

/// Use cases of either product touched by a change, directly or through
/// the use cases they include.
pub fn impacted_use_cases(old: &UseCaseDocument, new: &UseCaseDocument, dc: &ChangeSet) -> BTreeSet<String> {
    let changed: BTreeSet<&str> = dc.keys().map(|k| k.use_case()).collect();
    let (a, b) = (includes(old), includes(new));
    let names: BTreeSet<&str> = a.keys().chain(b.keys()).copied().collect();
    let mut out = BTreeSet::new();
    for &u in &names {
        let mut stack = vec![u];
        let mut seen = BTreeSet::new();
        while let Some(x) = stack.pop() {
            if !seen.insert(x) {
                continue;
            }
            if changed.contains(x) {
                out.insert(u.to_string());
                break;
            }
            stack.extend(a.get(x).into_iter().flatten());
            stack.extend(b.get(x).into_iter().flatten());
        }
    }
    out
}

fn flow_origins(doc: &UseCaseDocument) -> BTreeSet<String> {
    doc.use_cases
        .iter()
        .flat_map(|uc| uc.flows().map(move |f| f.origin(&uc.name)))
        .collect()
}

/// Ids of the new product's scenarios, by step sequence.
struct ScenarioIds<'m> {
    model: &'m ScenarioModel,
    index: BTreeMap<String, BTreeMap<Vec<String>, (usize, String)>>,
}

impl ScenarioIds<'_> {
    fn get(&mut self, root: &str, keys: &[String]) -> Result<Option<(usize, String)>, ScenarioError> {
        if !self.index.contains_key(root) {
            let all = self.model.enumerate(root)?;
            self.index.insert(
                root.to_string(),
                all.into_iter().enumerate().map(|(i, x)| (owned_keys(&x), (i, x.id))).collect(),
            );
        }
        Ok(self.index[root].get(keys).cloned())
    }
}

/// Classifies the test suite of `previous` for the `new` product.
pub fn classify_test_cases(
    previous: Product,
    suite: &TestSuite,
    overrides: &BTreeMap<String, String>,
    new: Product,
    dc: &ChangeSet,
) -> Result<Classification, ClassifyError> {
    let old_model = ScenarioModel::build(previous.doc)?;
    let new_model = ScenarioModel::build(new.doc)?;
    let tested = identify_tested_scenarios(&old_model, suite, overrides)?;
    let impacted = impacted_use_cases(previous.doc, new.doc, dc);
    let new_origins = flow_origins(new.doc);
    let mut ids = ScenarioIds {
        model: &new_model,
        index: BTreeMap::new(),
    };

    let mut verdicts = Vec::new();
    let mut covered: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut candidates: BTreeMap<Vec<String>, (Scenario, Vec<GuidanceSource>)> = BTreeMap::new();

    for ts in &tested.scenarios {
        let old = &ts.scenario;
        let (class, rules, changes, counterpart) = if new_model.graph(&old.root).is_none() {
            let changes = scenario_changes(old, old, &old.covered_flows);
            let (class, rules) = verdict(&changes);
            (class, rules, changes, old.clone())
        } else if !impacted.contains(&old.root) {
            (TestClass::Reusable, vec![], vec![], old.clone())
        } else {
            let counterpart = replay(&new_model, old)?;
            let removed: Vec<CoveredFlow> = old
                .covered_flows
                .iter()
                .filter(|f| !new_origins.contains(&f.flow_origin))
                .cloned()
                .collect();
            let changes = scenario_changes(old, &counterpart, &removed);
            let (class, rules) = verdict(&changes);
            (class, rules, changes, counterpart)
        };
        let mut new_scenario = None;
        if class != TestClass::Obsolete {
            let keys = owned_keys(&counterpart);
            new_scenario = ids.get(&old.root, &keys)?.map(|(_, id)| id);
            covered.insert(keys);
        }
        if class != TestClass::Reusable && new_model.graph(&old.root).is_some() {
            for s in identify_new_scenarios(&new_model, old)? {
                let g = generate_guidance(&old.nodes, &s.nodes);
                let source = GuidanceSource {
                    product_id: previous.id.to_string(),
                    old_scenario: old.id.clone(),
                    tests: ts.tests.clone(),
                    guidance: g,
                };
                candidates
                    .entry(owned_keys(&s))
                    .or_insert_with(|| (s, Vec::new()))
                    .1
                    .push(source);
            }
        }
        for t in &ts.tests {
            verdicts.push(Verdict {
                test_id: t.clone(),
                product_id: previous.id.to_string(),
                class,
                rules: rules.clone(),
                use_case: old.root.clone(),
                scenario: old.id.clone(),
                new_scenario: new_scenario.clone(),
                size: counterpart.size,
                variability: counterpart.variability,
                changes: changes.clone(),
            });
        }
    }

    let mut new_scenarios = Vec::new();
    let mut unknown = 0;
    for (keys, (mut s, sources)) in candidates {
        if covered.contains(&keys) {
            continue;
        }
        let (ord, id) = match ids.get(&s.root, &keys)? {
            Some(x) => x,
            None => {
                unknown += 1;
                (usize::MAX, format!("{}#new{unknown}", s.root))
            }
        };
        s.id = id;
        new_scenarios.push((
            s.root.clone(),
            ord,
            NewScenarioFinding {
                scenario: s,
                sources: filter_sources(sources),
            },
        ));
    }
    new_scenarios.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));

    verdicts.sort_by(|a, b| a.test_id.cmp(&b.test_id));
    Ok(Classification {
        previous: previous.id.to_string(),
        product: new.id.to_string(),
        impacted_use_cases: impacted.into_iter().collect(),
        verdicts,
        new_scenarios: new_scenarios.into_iter().map(|(_, _, f)| f).collect(),
        untraced: tested.untraced,
    })
}

fn owned_keys(s: &Scenario) -> Vec<String> {
    s.nodes.iter().map(|n| n.key.clone()).collect()
}
