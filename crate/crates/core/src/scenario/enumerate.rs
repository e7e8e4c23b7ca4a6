use std::collections::{BTreeMap, BTreeSet};

use super::{
    CoveredFlow, Node, NodeKind, Scenario, ScenarioError, ScenarioGraph, ScenarioModel,
    ScenarioNode,
};
use crate::rucm::FlowKind;

/// Default cap on the number of nodes in one scenario.
pub const MAX_SCENARIO_LENGTH: usize = 10_000;

/// A condition reached during a walk, handed to the branch chooser.
#[derive(Debug, Clone)]
pub struct ConditionVisit<'a> {
    pub key: &'a str,
    pub node: &'a Node,
    /// Include frame the condition is evaluated in (0 is the root use case).
    pub frame: usize,
    /// Earlier visits of this condition in the same frame.
    pub occurrence: usize,
    /// Earlier visits of this condition anywhere on the path.
    pub seen: usize,
    pub enter_on: bool,
    /// False once the entering branch was taken in this frame.
    pub enter_allowed: bool,
}

#[derive(Debug, Clone)]
struct Frame<'m> {
    id: usize,
    graph: &'m ScenarioGraph,
    ret: Option<usize>,
}

#[derive(Debug, Clone)]
struct State<'m> {
    stack: Vec<Frame<'m>>,
    at: usize,
    nodes: Vec<ScenarioNode>,
    covered: Vec<CoveredFlow>,
    entered: BTreeSet<(usize, String)>,
    visits: BTreeMap<(usize, String), usize>,
    seen: BTreeMap<String, usize>,
    frames: usize,
}

impl<'m> State<'m> {
    fn cover(&mut self, f: CoveredFlow) {
        if !self.covered.contains(&f) {
            self.covered.push(f);
        }
    }

    fn record(&mut self, n: &Node, branch: Option<bool>) {
        self.nodes.push(ScenarioNode {
            key: n.key.clone(),
            kind: n.kind,
            text: n.text.clone(),
            use_case: n.use_case.clone(),
            flow: n.flow.clone(),
            flow_origin: n.flow_origin.clone(),
            step: n.step.clone(),
            step_kind: n.step_kind.clone(),
            decision: n.decision.clone(),
            branch,
        });
    }

    fn enter_graph(&mut self, graph: &'m ScenarioGraph, ret: Option<usize>) {
        let start = &graph.nodes[graph.start];
        self.stack.push(Frame {
            id: self.frames,
            graph,
            ret,
        });
        self.frames += 1;
        self.cover(CoveredFlow {
            use_case: graph.use_case.clone(),
            flow: start.flow.clone(),
            flow_origin: start.flow_origin.clone(),
            kind: FlowKind::Basic,
            entry: None,
        });
        self.at = graph.start;
    }
}

/// Depth-first walk over the scenarios of one use case. The chooser decides
/// which branches of each reached condition are explored, in order.
pub struct Walk<'m> {
    model: &'m ScenarioModel,
    root: &'m ScenarioGraph,
    max_len: usize,
}

impl<'m> Walk<'m> {
    pub fn new(model: &'m ScenarioModel, use_case: &str) -> Result<Self, ScenarioError> {
        let root = model
            .graph(use_case)
            .ok_or_else(|| ScenarioError::UnknownUseCase(use_case.to_string()))?;
        Ok(Walk {
            model,
            root,
            max_len: MAX_SCENARIO_LENGTH,
        })
    }

    pub fn with_limit(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    pub fn run<F>(&self, mut chooser: F) -> Result<Vec<Scenario>, ScenarioError>
    where
        F: FnMut(&ConditionVisit) -> Vec<bool>,
    {
        let mut state = State {
            stack: Vec::new(),
            at: 0,
            nodes: Vec::new(),
            covered: Vec::new(),
            entered: BTreeSet::new(),
            visits: BTreeMap::new(),
            seen: BTreeMap::new(),
            frames: 0,
        };
        state.enter_graph(self.root, None);
        let mut done = Vec::new();
        self.step(state, &mut chooser, &mut done)?;
        Ok(done
            .into_iter()
            .enumerate()
            .map(|(k, (nodes, covered))| {
                Scenario::from_nodes(
                    format!("{}#{}", self.root.use_case, k + 1),
                    self.root.use_case.clone(),
                    nodes,
                    covered,
                )
            })
            .collect())
    }

    fn step<F>(
        &self,
        mut s: State<'m>,
        chooser: &mut F,
        done: &mut Vec<(Vec<ScenarioNode>, Vec<CoveredFlow>)>,
    ) -> Result<(), ScenarioError>
    where
        F: FnMut(&ConditionVisit) -> Vec<bool>,
    {
        loop {
            if s.nodes.len() > self.max_len {
                return Err(ScenarioError::Unbounded(self.max_len));
            }
            let frame = s.stack.last().expect("walk has a frame").clone();
            let node = &frame.graph.nodes[s.at];
            match node.kind {
                NodeKind::Abort => {
                    s.record(node, None);
                    done.push((s.nodes, s.covered));
                    return Ok(());
                }
                NodeKind::Exit if node.next.is_none() => {
                    s.stack.pop();
                    match frame.ret {
                        Some(ret) => s.at = ret,
                        None => {
                            s.record(node, None);
                            done.push((s.nodes, s.covered));
                            return Ok(());
                        }
                    }
                }
                NodeKind::Include => {
                    s.record(node, None);
                    let target = match &node.step_kind {
                        Some(crate::rucm::StepKind::IncludeUseCase { target }) => target,
                        _ => unreachable!("include nodes carry their target"),
                    };
                    let graph = self
                        .model
                        .graph(target)
                        .ok_or_else(|| ScenarioError::UnknownUseCase(target.clone()))?;
                    s.enter_graph(graph, node.next);
                }
                NodeKind::Condition => {
                    let mark = (frame.id, node.key.clone());
                    let occurrence = s.visits.get(&mark).copied().unwrap_or(0);
                    s.visits.insert(mark.clone(), occurrence + 1);
                    let seen = s.seen.get(&node.key).copied().unwrap_or(0);
                    s.seen.insert(node.key.clone(), seen + 1);
                    let visit = ConditionVisit {
                        key: &node.key,
                        node,
                        frame: frame.id,
                        occurrence,
                        seen,
                        enter_on: node.enter_on,
                        enter_allowed: !s.entered.contains(&mark),
                    };
                    let choices = chooser(&visit);
                    for b in choices {
                        let Some(edge) = node.branch(b) else {
                            continue;
                        };
                        let mut t = s.clone();
                        t.record(node, Some(b));
                        if b == node.enter_on {
                            t.entered.insert(mark.clone());
                        }
                        if let Some(e) = &edge.enters {
                            t.cover(CoveredFlow {
                                use_case: e.use_case.clone(),
                                flow: e.flow.clone(),
                                flow_origin: e.flow_origin.clone(),
                                kind: e.kind,
                                entry: e.entry.clone(),
                            });
                        }
                        t.at = edge.target;
                        self.step(t, chooser, done)?;
                    }
                    return Ok(());
                }
                _ => {
                    s.record(node, None);
                    s.at = node.next.expect("non-terminal node has a successor");
                }
            }
        }
    }
}
