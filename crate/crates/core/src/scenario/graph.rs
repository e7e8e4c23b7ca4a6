use std::collections::BTreeMap;

use super::{Edge, FlowEntry, Node, NodeKind, ScenarioError, ScenarioGraph};
use crate::rucm::{Flow, FlowKind, Step, StepKind, UseCase};

fn malformed(uc: &UseCase, flow: &Flow, message: impl Into<String>) -> ScenarioError {
    ScenarioError::MalformedFlow {
        use_case: uc.name.clone(),
        flow: flow.id.clone(),
        message: message.into(),
    }
}

fn blank(key: String, kind: NodeKind, uc: &UseCase, flow: &Flow) -> Node {
    Node {
        key,
        kind,
        text: String::new(),
        use_case: uc.name.clone(),
        flow: flow.id.clone(),
        flow_origin: flow.origin(&uc.name),
        step: None,
        step_kind: None,
        decision: flow.provenance.as_ref().and_then(|p| p.decision.clone()),
        next: None,
        on_true: None,
        on_false: None,
        enter_on: false,
    }
}

fn step_node(uc: &UseCase, flow: &Flow, step: &Step) -> Node {
    let kind = match &step.kind {
        StepKind::Input { .. } => NodeKind::Input,
        StepKind::Output { .. } => NodeKind::Output,
        StepKind::Condition { .. } => NodeKind::Condition,
        StepKind::Internal | StepKind::IncludeVariationPoint { .. } => NodeKind::Internal,
        StepKind::IncludeUseCase { .. } => NodeKind::Include,
        StepKind::Abort => NodeKind::Abort,
        StepKind::Resume { .. } => NodeKind::Exit,
    };
    Node {
        key: step.origin(&uc.name, &flow.id),
        kind,
        text: step.text.clone(),
        use_case: uc.name.clone(),
        flow: flow.id.clone(),
        flow_origin: flow.origin(&uc.name),
        step: Some(step.number.clone()),
        step_kind: Some(step.kind.clone()),
        decision: step.decision().cloned(),
        next: None,
        on_true: None,
        on_false: None,
        enter_on: false,
    }
}

fn entry_of(uc: &UseCase, flow: &Flow) -> FlowEntry {
    FlowEntry {
        use_case: uc.name.clone(),
        flow: flow.id.clone(),
        flow_origin: flow.origin(&uc.name),
        kind: flow.kind,
        entry: flow.rfs.first().cloned(),
    }
}

/// Builds the scenario graph of one PS use case.
pub fn build_graph(uc: &UseCase) -> Result<ScenarioGraph, ScenarioError> {
    let flows: Vec<&Flow> = uc.flows().collect();
    let index: BTreeMap<&str, usize> = flows
        .iter()
        .enumerate()
        .map(|(i, f)| (f.id.as_str(), i))
        .collect();
    let reference_of = |f: &Flow| -> Result<usize, ScenarioError> {
        let id = f.reference_flow.as_deref().unwrap_or(&uc.basic_flow.id);
        index
            .get(id)
            .copied()
            .ok_or_else(|| malformed(uc, f, format!("unknown reference flow `{id}`")))
    };
    let step_index = |fi: usize, number: &str| -> Result<usize, ScenarioError> {
        flows[fi]
            .steps
            .iter()
            .position(|s| s.number == number)
            .ok_or_else(|| malformed(uc, flows[fi], format!("no step {number}")))
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut start = blank(format!("{}|start", uc.name), NodeKind::UseCaseStart, uc, &uc.basic_flow);
    start.text = uc.precondition.clone();
    start.decision = None;
    nodes.push(start);

    // one node per step
    let mut step_nodes: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (fi, f) in flows.iter().enumerate() {
        for (si, s) in f.steps.iter().enumerate() {
            if let StepKind::IncludeVariationPoint { name } = &s.kind {
                return Err(malformed(
                    uc,
                    f,
                    format!("variation point `{name}` in a product-specific use case"),
                ));
            }
            step_nodes.insert((fi, si), nodes.len());
            nodes.push(step_node(uc, f, s));
        }
    }

    // end nodes: basic exit, and an exit for alternative flows that return
    let mut end_nodes: BTreeMap<usize, usize> = BTreeMap::new();
    for (fi, f) in flows.iter().enumerate() {
        let terminates = f
            .steps
            .iter()
            .any(|s| matches!(s.kind, StepKind::Abort | StepKind::Resume { .. }));
        if f.kind == FlowKind::Basic {
            let mut n = blank(format!("{}|exit", uc.name), NodeKind::Exit, uc, f);
            n.decision = None;
            end_nodes.insert(fi, nodes.len());
            nodes.push(n);
        } else if !terminates {
            end_nodes.insert(fi, nodes.len());
            nodes.push(blank(format!("{}|exit", f.origin(&uc.name)), NodeKind::Exit, uc, f));
        }
    }

    // guards of bounded and global flows, placed before the first reference step
    let mut guards_before: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut guard_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (fi, f) in flows.iter().enumerate() {
        if !matches!(f.kind, FlowKind::BoundedAlt | FlowKind::GlobalAlt) {
            continue;
        }
        let ri = reference_of(f)?;
        let at = if f.kind == FlowKind::GlobalAlt {
            0
        } else {
            let mut idx = Vec::new();
            for r in &f.rfs {
                idx.push(step_index(ri, r)?);
            }
            idx.into_iter().min().unwrap_or(0)
        };
        if flows[ri].steps.is_empty() {
            return Err(malformed(uc, f, "reference flow has no steps"));
        }
        let mut g = blank(format!("{}|guard", f.origin(&uc.name)), NodeKind::Condition, uc, f);
        g.text = if f.guard.is_empty() {
            format!("alternative flow {} applies", f.id)
        } else {
            f.guard.clone()
        };
        g.step_kind = Some(StepKind::Condition {
            phrase: g.text.clone(),
        });
        g.enter_on = true;
        guard_of.insert(fi, nodes.len());
        guards_before.entry((ri, at)).or_default().push(nodes.len());
        nodes.push(g);
    }

    let entry = |fi: usize, si: usize| -> usize {
        if let Some(g) = guards_before.get(&(fi, si)) {
            return g[0];
        }
        match step_nodes.get(&(fi, si)) {
            Some(&n) => n,
            None => end_nodes[&fi],
        }
    };
    // wire guards
    for ((fi, si), gs) in &guards_before {
        for (k, &g) in gs.iter().enumerate() {
            let owner = guard_of
                .iter()
                .find(|(_, &n)| n == g)
                .map(|(&o, _)| o)
                .expect("guard has an owner");
            let of = flows[owner];
            let fallthrough = match gs.get(k + 1) {
                Some(&n) => n,
                None => step_nodes[&(*fi, *si)],
            };
            nodes[g].on_true = Some(Edge {
                target: entry(owner, 0),
                enters: Some(entry_of(uc, of)),
            });
            nodes[g].on_false = Some(Edge {
                target: fallthrough,
                enters: None,
            });
        }
    }

    // wire steps
    let mut extra: Vec<Node> = Vec::new();
    for (fi, f) in flows.iter().enumerate() {
        for (si, s) in f.steps.iter().enumerate() {
            let n = step_nodes[&(fi, si)];
            match &s.kind {
                StepKind::Abort => {}
                StepKind::Resume { flow, step } => {
                    let target_flow = match flow {
                        Some(id) => *index
                            .get(id.as_str())
                            .ok_or_else(|| malformed(uc, f, format!("resume into unknown flow `{id}`")))?,
                        None => reference_of(f)?,
                    };
                    let ti = step_index(target_flow, step)?;
                    nodes[n].next = Some(step_nodes[&(target_flow, ti)]);
                }
                StepKind::Condition { .. } => {
                    let specifics: Vec<usize> = flows
                        .iter()
                        .enumerate()
                        .filter(|(_, g)| {
                            g.kind == FlowKind::SpecificAlt
                                && reference_of(g).ok() == Some(fi)
                                && g.rfs.first() == Some(&s.number)
                        })
                        .map(|(i, _)| i)
                        .collect();
                    nodes[n].enter_on = false;
                    nodes[n].on_true = Some(Edge {
                        target: entry(fi, si + 1),
                        enters: None,
                    });
                    let on_false = match specifics.as_slice() {
                        [] => {
                            let id = nodes.len() + extra.len();
                            let mut a = blank(
                                format!("{}|implicit-abort", s.origin(&uc.name, &f.id)),
                                NodeKind::Abort,
                                uc,
                                f,
                            );
                            a.decision = s.decision().cloned();
                            extra.push(a);
                            Edge {
                                target: id,
                                enters: None,
                            }
                        }
                        [only] => Edge {
                            target: entry(*only, 0),
                            enters: Some(entry_of(uc, flows[*only])),
                        },
                        [rest @ .., last] => {
                            // one synthetic condition per flow but the last
                            let first_id = nodes.len() + extra.len();
                            for (j, &sf) in rest.iter().enumerate() {
                                let g_flow = flows[sf];
                                let mut g = blank(
                                    format!("{}|guard", g_flow.origin(&uc.name)),
                                    NodeKind::Condition,
                                    uc,
                                    g_flow,
                                );
                                g.text = if g_flow.guard.is_empty() {
                                    format!("alternative flow {} applies", g_flow.id)
                                } else {
                                    g_flow.guard.clone()
                                };
                                g.step_kind = Some(StepKind::Condition {
                                    phrase: g.text.clone(),
                                });
                                g.enter_on = true;
                                g.on_true = Some(Edge {
                                    target: entry(sf, 0),
                                    enters: Some(entry_of(uc, g_flow)),
                                });
                                g.on_false = Some(if j + 1 < rest.len() {
                                    Edge {
                                        target: first_id + j + 1,
                                        enters: None,
                                    }
                                } else {
                                    Edge {
                                        target: entry(*last, 0),
                                        enters: Some(entry_of(uc, flows[*last])),
                                    }
                                });
                                extra.push(g);
                            }
                            Edge {
                                target: first_id,
                                enters: None,
                            }
                        }
                    };
                    nodes[n].on_false = Some(on_false);
                }
                _ => nodes[n].next = Some(entry(fi, si + 1)),
            }
        }
    }
    nodes.extend(extra);

    // specific flows must hang off a condition
    for f in &flows {
        if f.kind != FlowKind::SpecificAlt {
            continue;
        }
        let ri = reference_of(f)?;
        let r = f.rfs.first().ok_or_else(|| malformed(uc, f, "no reference step"))?;
        let si = step_index(ri, r)?;
        if !matches!(flows[ri].steps[si].kind, StepKind::Condition { .. }) {
            return Err(malformed(
                uc,
                f,
                format!("reference step {r} of `{}` is not a condition", flows[ri].id),
            ));
        }
    }

    // returning alternative flows
    for (fi, f) in flows.iter().enumerate() {
        if f.kind == FlowKind::Basic {
            continue;
        }
        let Some(&end) = end_nodes.get(&fi) else {
            continue;
        };
        let target = match f.kind {
            FlowKind::SpecificAlt => {
                let ri = reference_of(f)?;
                step_nodes[&(ri, step_index(ri, &f.rfs[0])?)]
            }
            _ => guard_of[&fi],
        };
        nodes[end].next = Some(target);
    }

    nodes[0].next = Some(entry(0, 0));
    Ok(ScenarioGraph {
        use_case: uc.name.clone(),
        precondition: uc.precondition.clone(),
        nodes,
        start: 0,
    })
}
