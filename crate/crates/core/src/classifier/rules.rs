//! Change rules R1 to R9 over a pair of step sequences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::rucm::{normalize_phrase, StepKind};
use crate::scenario::{CoveredFlow, NodeKind, Scenario, ScenarioNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestClass {
    Obsolete,
    Retestable,
    Reusable,
}

impl TestClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TestClass::Obsolete => "obsolete",
            TestClass::Retestable => "retestable",
            TestClass::Reusable => "reusable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
}

impl Rule {
    pub fn class(self) -> TestClass {
        match self {
            Rule::R1 | Rule::R2 | Rule::R3 => TestClass::Retestable,
            _ => TestClass::Obsolete,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeKind {
    Added,
    Removed,
    Reordered,
    FlowRemoved,
}

/// One difference between an old scenario and its counterpart in the new
/// product, with the rule it triggers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioChange {
    pub change: ChangeKind,
    pub key: String,
    pub text: String,
    pub rule: Rule,
}

/// Step of a scenario tagged with its occurrence, so repeated steps of a
/// loop stay distinct.
type Slot = (String, usize);

fn slots(nodes: &[&ScenarioNode]) -> Vec<Slot> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    nodes
        .iter()
        .map(|n| {
            let k = seen.entry(n.key.as_str()).or_insert(0);
            *k += 1;
            (n.key.clone(), *k - 1)
        })
        .collect()
}

/// Steps the rules look at: interactions, internal steps, conditions and includes.
pub fn rule_steps(s: &Scenario) -> Vec<&ScenarioNode> {
    s.nodes.iter().filter(|n| n.kind.is_step()).collect()
}

/// True when an n-gram of the condition phrase equals the entity phrase of
/// one of the input steps.
pub fn condition_refers_to_input_entity(phrase: &str, inputs: &[&ScenarioNode]) -> bool {
    let cond = normalize_phrase(phrase);
    if cond.is_empty() {
        return false;
    }
    inputs.iter().any(|n| {
        let Some(StepKind::Input { entity, .. }) = &n.step_kind else {
            return false;
        };
        let e = normalize_phrase(entity);
        !e.is_empty() && cond.windows(e.len()).any(|w| w == e.as_slice())
    })
}

fn condition_phrase(n: &ScenarioNode) -> &str {
    match &n.step_kind {
        Some(StepKind::Condition { phrase }) => phrase,
        _ => &n.text,
    }
}

fn add_remove_rule(n: &ScenarioNode, inputs: &[&ScenarioNode]) -> Rule {
    match n.kind {
        NodeKind::Input | NodeKind::Output => Rule::R6,
        NodeKind::Condition => {
            if condition_refers_to_input_entity(condition_phrase(n), inputs) {
                Rule::R4
            } else {
                Rule::R3
            }
        }
        _ => Rule::R1,
    }
}

fn order_rule(kind: NodeKind) -> Rule {
    match kind {
        NodeKind::Input | NodeKind::Output => Rule::R7,
        NodeKind::Condition => Rule::R5,
        _ => Rule::R2,
    }
}

/// Positions (in `new`) of the shared steps, in the order of `old`, plus
/// which of them moved. A step moved when some other shared step is on the
/// other side of it in the new sequence; interactions only count moves
/// relative to other interactions.
fn moved(old: &[(Slot, NodeKind)], new_pos: &BTreeMap<&Slot, usize>) -> Vec<bool> {
    let pos: Vec<usize> = old.iter().map(|(s, _)| new_pos[s]).collect();
    let inversion = |mask: &dyn Fn(NodeKind) -> bool| -> Vec<bool> {
        let idx: Vec<usize> = (0..old.len()).filter(|&i| mask(old[i].1)).collect();
        let mut out = vec![false; old.len()];
        let mut prefix_max = 0usize;
        let mut before = Vec::with_capacity(idx.len());
        for (j, &i) in idx.iter().enumerate() {
            before.push(j > 0 && prefix_max > pos[i]);
            prefix_max = prefix_max.max(pos[i]);
        }
        let mut suffix_min = usize::MAX;
        for (j, &i) in idx.iter().enumerate().rev() {
            out[i] = before[j] || suffix_min < pos[i];
            suffix_min = suffix_min.min(pos[i]);
        }
        out
    };
    let any = inversion(&|_| true);
    let io = inversion(&|k: NodeKind| k.is_interaction());
    (0..old.len())
        .map(|i| if old[i].1.is_interaction() { io[i] } else { any[i] })
        .collect()
}

/// Differences between an old scenario and the new product's version of
/// it, and the rules they trigger.
pub fn scenario_changes(old: &Scenario, new: &Scenario, removed_flows: &[CoveredFlow]) -> Vec<ScenarioChange> {
    let o = rule_steps(old);
    let n = rule_steps(new);
    let os = slots(&o);
    let ns = slots(&n);
    let new_index: BTreeMap<&Slot, usize> = ns.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let old_index: BTreeMap<&Slot, usize> = os.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let inputs: Vec<&ScenarioNode> = o
        .iter()
        .chain(n.iter())
        .copied()
        .filter(|x| x.kind == NodeKind::Input)
        .collect();

    let mut out = Vec::new();
    for f in removed_flows {
        out.push(ScenarioChange {
            change: ChangeKind::FlowRemoved,
            key: f.flow_origin.clone(),
            text: format!("{} {}", f.use_case, f.flow),
            rule: Rule::R8,
        });
    }
    for (i, s) in os.iter().enumerate() {
        if !new_index.contains_key(s) {
            out.push(ScenarioChange {
                change: ChangeKind::Removed,
                key: s.0.clone(),
                text: o[i].text.clone(),
                rule: add_remove_rule(o[i], &inputs),
            });
        }
    }
    for (i, s) in ns.iter().enumerate() {
        if !old_index.contains_key(s) {
            out.push(ScenarioChange {
                change: ChangeKind::Added,
                key: s.0.clone(),
                text: n[i].text.clone(),
                rule: add_remove_rule(n[i], &inputs),
            });
        }
    }
    let shared: Vec<(Slot, NodeKind)> = os
        .iter()
        .enumerate()
        .filter(|(_, s)| new_index.contains_key(s))
        .map(|(i, s)| (s.clone(), o[i].kind))
        .collect();
    let shared_pos: BTreeMap<&Slot, usize> = shared.iter().map(|(s, _)| (s, new_index[s])).collect();
    for ((s, kind), m) in shared.iter().zip(moved(&shared, &shared_pos)) {
        if m {
            out.push(ScenarioChange {
                change: ChangeKind::Reordered,
                key: s.0.clone(),
                text: o[old_index[s]].text.clone(),
                rule: order_rule(*kind),
            });
        }
    }
    out
}

/// Class and rules for a set of changes. No change means reusable.
pub fn verdict(changes: &[ScenarioChange]) -> (TestClass, Vec<Rule>) {
    let mut rules: Vec<Rule> = changes.iter().map(|c| c.rule).collect();
    rules.sort();
    rules.dedup();
    let class = if changes.is_empty() {
        TestClass::Reusable
    } else if rules.iter().any(|r| r.class() == TestClass::Obsolete) {
        TestClass::Obsolete
    } else {
        TestClass::Retestable
    };
    if changes.len() > 1 {
        rules.push(Rule::R9);
    }
    (class, rules)
}
