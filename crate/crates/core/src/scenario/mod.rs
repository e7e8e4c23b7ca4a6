//! Use case scenario models (control-flow graphs of PS use cases) and
//! scenario enumeration.
//!
//! A graph has one node per executable step plus a start node, exit and
//! abort nodes, and guard conditions for bounded, global and chained
//! specific alternative flows. Node keys come from step provenance, so the
//! same step has the same key in the graphs of two products.

mod enumerate;
mod graph;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::DecisionKey;
use crate::rucm::{FlowKind, StepKind, UseCaseDocument};

pub use enumerate::{ConditionVisit, Walk};
pub use graph::build_graph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("malformed flow `{use_case}`/{flow}: {message}")]
    MalformedFlow {
        use_case: String,
        flow: String,
        message: String,
    },
    #[error("include cycle: {}", .0.join(" -> "))]
    IncludeCycle(Vec<String>),
    #[error("use case `{0}` is not in the document")]
    UnknownUseCase(String),
    #[error("scenario exceeds {0} steps; the flows do not terminate")]
    Unbounded(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    UseCaseStart,
    Input,
    Output,
    Internal,
    Include,
    Condition,
    Exit,
    Abort,
}

impl NodeKind {
    pub fn is_interaction(self) -> bool {
        matches!(self, NodeKind::Input | NodeKind::Output)
    }

    /// Steps that count towards scenario size and that the classification
    /// rules look at.
    pub fn is_step(self) -> bool {
        matches!(
            self,
            NodeKind::Input | NodeKind::Output | NodeKind::Internal | NodeKind::Condition | NodeKind::Include
        )
    }
}

/// Alternative flow entered through a condition edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowEntry {
    pub use_case: String,
    pub flow: String,
    pub flow_origin: String,
    pub kind: FlowKind,
    /// Reference step the flow is taken from; `None` for global flows.
    pub entry: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub target: usize,
    pub enters: Option<FlowEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub key: String,
    pub kind: NodeKind,
    pub text: String,
    pub use_case: String,
    pub flow: String,
    pub flow_origin: String,
    pub step: Option<String>,
    pub step_kind: Option<StepKind>,
    pub decision: Option<DecisionKey>,
    /// Successor of every node except conditions and terminal nodes.
    pub next: Option<usize>,
    pub on_true: Option<Edge>,
    pub on_false: Option<Edge>,
    /// Branch of a condition that leaves the current flow; the other one
    /// is the exit branch used when the loop body was already covered.
    pub enter_on: bool,
}

impl Node {
    pub fn branch(&self, value: bool) -> Option<&Edge> {
        if value {
            self.on_true.as_ref()
        } else {
            self.on_false.as_ref()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioGraph {
    pub use_case: String,
    pub precondition: String,
    pub nodes: Vec<Node>,
    pub start: usize,
}

impl ScenarioGraph {
    pub fn node_by_key(&self, key: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.key == key)
    }

    pub fn conditions(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Condition)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }
}

/// One step of a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScenarioNode {
    pub key: String,
    pub kind: NodeKind,
    pub text: String,
    pub use_case: String,
    pub flow: String,
    pub flow_origin: String,
    pub step: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_kind: Option<StepKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<DecisionKey>,
    /// Branch taken at a condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<bool>,
}

impl ScenarioNode {
    /// The branch that was taken entered an alternative flow (or aborted).
    pub fn entered(&self, enter_on: bool) -> bool {
        self.branch == Some(enter_on)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoveredFlow {
    pub use_case: String,
    pub flow: String,
    pub flow_origin: String,
    pub kind: FlowKind,
    pub entry: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub root: String,
    pub nodes: Vec<ScenarioNode>,
    /// Basic flows of the root and included use cases and every entered
    /// alternative flow, in the order they are first taken.
    pub covered_flows: Vec<CoveredFlow>,
    pub size: usize,
    pub variability: usize,
}

impl Scenario {
    pub(crate) fn from_nodes(
        id: String,
        root: String,
        nodes: Vec<ScenarioNode>,
        covered_flows: Vec<CoveredFlow>,
    ) -> Self {
        let size = nodes.iter().filter(|n| n.kind.is_step()).count();
        let variability = nodes
            .iter()
            .filter_map(|n| n.decision.as_ref())
            .collect::<std::collections::BTreeSet<_>>()
            .len();
        Scenario {
            id,
            root,
            nodes,
            covered_flows,
            size,
            variability,
        }
    }

    pub fn keys(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.key.as_str()).collect()
    }

    pub fn alternative_flows(&self) -> impl Iterator<Item = &CoveredFlow> {
        self.covered_flows.iter().filter(|f| f.kind != FlowKind::Basic)
    }

    pub fn last(&self) -> Option<&ScenarioNode> {
        self.nodes.last()
    }
}

/// Scenario graphs of every use case of a PS document.
#[derive(Debug, Clone)]
pub struct ScenarioModel {
    pub graphs: BTreeMap<String, ScenarioGraph>,
}

impl ScenarioModel {
    pub fn build(doc: &UseCaseDocument) -> Result<Self, ScenarioError> {
        check_include_cycles(doc)?;
        let mut graphs = BTreeMap::new();
        for uc in &doc.use_cases {
            graphs.insert(uc.name.clone(), build_graph(uc)?);
        }
        Ok(ScenarioModel { graphs })
    }

    pub fn graph(&self, use_case: &str) -> Option<&ScenarioGraph> {
        self.graphs.get(use_case)
    }

    /// All start-to-termination scenarios of a use case, covering each
    /// alternative flow at most once and inlining included use cases.
    pub fn enumerate(&self, use_case: &str) -> Result<Vec<Scenario>, ScenarioError> {
        Walk::new(self, use_case)?.run(|v| {
            if v.enter_allowed {
                vec![true, false]
            } else {
                vec![!v.enter_on]
            }
        })
    }
}

fn check_include_cycles(doc: &UseCaseDocument) -> Result<(), ScenarioError> {
    let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for uc in &doc.use_cases {
        let targets = edges.entry(uc.name.as_str()).or_default();
        for f in uc.flows() {
            for s in &f.steps {
                if let StepKind::IncludeUseCase { target } = &s.kind {
                    if doc.use_case(target).is_none() {
                        return Err(ScenarioError::UnknownUseCase(target.clone()));
                    }
                    targets.push(target.as_str());
                }
            }
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit<'a>(
        n: &'a str,
        edges: &BTreeMap<&'a str, Vec<&'a str>>,
        state: &mut BTreeMap<&'a str, u8>,
        stack: &mut Vec<&'a str>,
    ) -> Result<(), ScenarioError> {
        match state.get(n).copied().unwrap_or(0) {
            2 => return Ok(()),
            1 => {
                let pos = stack.iter().position(|s| *s == n).unwrap_or(0);
                let mut cycle: Vec<String> = stack[pos..].iter().map(|s| s.to_string()).collect();
                cycle.push(n.to_string());
                return Err(ScenarioError::IncludeCycle(cycle));
            }
            _ => {}
        }
        state.insert(n, 1);
        stack.push(n);
        for t in edges.get(n).into_iter().flatten() {
            visit(t, edges, state, stack)?;
        }
        stack.pop();
        state.insert(n, 2);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for n in edges.keys() {
        visit(n, &edges, &mut state, &mut Vec::new())?;
    }
    Ok(())
}
