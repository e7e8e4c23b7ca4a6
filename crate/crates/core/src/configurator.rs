//! Generation of product-specific (PS) use case diagrams and specifications
//! from the product-line model and one product's decisions.
//!
//! Every generated step and flow carries a [`Provenance`] whose `origin` is
//! stable across products, so two PS documents configured from the same
//! product line can be compared element by element.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{validate_decisions, variant_groups, DecisionKey, DecisionModel, Violation};
use crate::diagram::{Include, PLDiagram};
use crate::rucm::{
    Flow, FlowKind, Provenance, Step, StepKind, UseCase, UseCaseDocument,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("decisions are invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidDecisions(Vec<Violation>),
    #[error("`{use_case}`: include of unknown use case `{target}`")]
    UnresolvedInclude { use_case: String, target: String },
    #[error("`{use_case}`/{flow}: {message}")]
    UnresolvedReference {
        use_case: String,
        flow: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConfigWarning {
    /// A variant checked in a validation chain has no precondition text.
    MissingPrecondition {
        variation_point: String,
        variant: String,
    },
}

impl std::fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigWarning::MissingPrecondition {
                variation_point,
                variant,
            } => write!(
                f,
                "variant `{variant}` of `{variation_point}` has no precondition; placeholder used"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PSDiagram {
    pub product_id: String,
    pub use_cases: Vec<String>,
    pub includes: Vec<Include>,
}

impl PSDiagram {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ps diagram serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PSSpecification {
    pub document: UseCaseDocument,
    pub warnings: Vec<ConfigWarning>,
}

/// Essential use cases plus the selected variants; variation point includes
/// become plain includes of the selected variants.
pub fn generate_ps_diagram(pl: &PLDiagram, m: &DecisionModel) -> Result<PSDiagram, ConfigError> {
    let violations = diagram_violations(pl, m);
    if !violations.is_empty() {
        return Err(ConfigError::InvalidDecisions(violations));
    }
    let selected = m.selected_variants();
    let present = |name: &str| {
        pl.use_case(name)
            .is_some_and(|u| !u.variant || selected.contains(name))
    };
    let use_cases: Vec<String> = pl
        .use_cases
        .iter()
        .filter(|u| present(&u.name))
        .map(|u| u.name.clone())
        .collect();
    let mut includes = BTreeSet::new();
    for inc in &pl.includes {
        if !present(&inc.from) {
            continue;
        }
        if let Some(vp) = pl.variation_point(&inc.to) {
            let Some(d) = m.variation_point_decision(&vp.name, &inc.from) else {
                continue;
            };
            for v in vp.variants().filter(|v| d.selected_variants.contains(*v)) {
                includes.insert(Include {
                    from: inc.from.clone(),
                    to: v.to_string(),
                });
            }
        } else if present(&inc.to) {
            includes.insert(inc.clone());
        }
    }
    Ok(PSDiagram {
        product_id: m.product_id.clone(),
        use_cases,
        includes: includes.into_iter().collect(),
    })
}

fn diagram_violations(pl: &PLDiagram, m: &DecisionModel) -> Vec<Violation> {
    validate_decisions(m, pl, &UseCaseDocument::default())
        .into_iter()
        .filter(|v| {
            !matches!(
                v,
                Violation::UnknownElement {
                    key: DecisionKey::OptionalFlow { .. } | DecisionKey::Step { .. },
                    ..
                }
            )
        })
        .collect()
}

/// Generates the PS specification of one product.
pub fn generate_ps_specification(
    pl: &UseCaseDocument,
    diagram: &PLDiagram,
    m: &DecisionModel,
) -> Result<PSSpecification, ConfigError> {
    let violations = validate_decisions(m, diagram, pl);
    if !violations.is_empty() {
        return Err(ConfigError::InvalidDecisions(violations));
    }
    let selected = m.selected_variants();
    let mut warnings = BTreeSet::new();
    let mut use_cases = Vec::new();
    for uc in &pl.use_cases {
        if uc.variant && !selected.contains(&uc.name) {
            continue;
        }
        use_cases.push(configure_use_case(uc, pl, diagram, m, &mut warnings)?);
    }
    let doc = UseCaseDocument {
        use_cases,
        source_path: String::new(),
    };
    for uc in &doc.use_cases {
        for flow in uc.flows() {
            for s in &flow.steps {
                if let StepKind::IncludeUseCase { target } = &s.kind {
                    if doc.use_case(target).is_none() {
                        return Err(ConfigError::UnresolvedInclude {
                            use_case: uc.name.clone(),
                            target: target.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(PSSpecification {
        document: doc,
        warnings: warnings.into_iter().collect(),
    })
}

enum Body {
    Text(String),
    /// Resume at the step generated from `origin` in `flow`.
    Resume {
        flow: String,
        explicit: bool,
        /// Candidate targets; the first one that was generated wins.
        origins: Vec<String>,
        /// End with ABORT when no candidate survived configuration.
        or_abort: bool,
    },
}

struct PendingStep {
    body: Body,
    origin: String,
    /// Origin of the product-line step this was generated from, when any.
    pl_origin: Option<String>,
    decision: Option<DecisionKey>,
}

struct PendingFlow {
    id: String,
    kind: FlowKind,
    reference_flow: Option<String>,
    /// Origins (or product-line origins) of the reference steps.
    rfs: Vec<String>,
    guard: String,
    postcondition: String,
    provenance: Provenance,
    steps: Vec<PendingStep>,
}

fn configure_use_case(
    uc: &UseCase,
    pl: &UseCaseDocument,
    diagram: &PLDiagram,
    m: &DecisionModel,
    warnings: &mut BTreeSet<ConfigWarning>,
) -> Result<UseCase, ConfigError> {
    let name = &uc.name;
    let basic_id = uc.basic_flow.id.clone();
    let mut next_saf = uc
        .flows()
        .filter_map(|f| f.id.strip_prefix("SAF").and_then(|n| n.parse::<u32>().ok()))
        .max()
        .unwrap_or(0)
        + 1;

    let mut flows: Vec<PendingFlow> = Vec::new();
    let mut chains: Vec<PendingFlow> = Vec::new();
    let mut dropped: BTreeSet<String> = BTreeSet::new();

    for flow in uc.flows() {
        let flow_decision = if flow.optional {
            let d = m.flow_decision(name, &flow.id);
            if !d.is_some_and(|d| d.selected) {
                dropped.insert(flow.id.clone());
                continue;
            }
            Some(DecisionKey::OptionalFlow {
                use_case: name.clone(),
                flow: flow.id.clone(),
            })
        } else {
            None
        };
        let reference = flow
            .reference_flow
            .clone()
            .unwrap_or_else(|| basic_id.clone());
        if flow.kind != FlowKind::Basic && dropped.contains(&reference) && !flow.rfs.is_empty() {
            dropped.insert(flow.id.clone());
            continue;
        }

        let mut steps: Vec<PendingStep> = Vec::new();
        let groups = variant_groups(&flow.steps);
        let mut i = 0;
        while i < flow.steps.len() {
            if let Some(group) = groups.iter().find(|g| g[0] == i) {
                let mut chosen: Vec<(u32, usize)> = group
                    .iter()
                    .filter_map(|&j| {
                        let d = m.step_decision(name, &flow.id, &flow.steps[j].number)?;
                        d.selected.then_some((d.order_number.unwrap_or(u32::MAX), j))
                    })
                    .collect();
                chosen.sort();
                for (_, j) in chosen {
                    emit_step(
                        &mut steps,
                        &mut chains,
                        &mut next_saf,
                        uc,
                        flow,
                        j,
                        flow_decision.as_ref(),
                        pl,
                        diagram,
                        m,
                        warnings,
                    )?;
                }
                i = group[group.len() - 1] + 1;
                continue;
            }
            let step = &flow.steps[i];
            let keep = !step.optional
                || m
                    .step_decision(name, &flow.id, &step.number)
                    .is_some_and(|d| d.selected);
            if keep {
                emit_step(
                    &mut steps,
                    &mut chains,
                    &mut next_saf,
                    uc,
                    flow,
                    i,
                    flow_decision.as_ref(),
                    pl,
                    diagram,
                    m,
                    warnings,
                )?;
            }
            i += 1;
        }

        flows.push(PendingFlow {
            id: flow.id.clone(),
            kind: flow.kind,
            reference_flow: flow.reference_flow.clone(),
            rfs: flow
                .rfs
                .iter()
                .map(|r| format!("{name}|{reference}|{r}"))
                .collect(),
            guard: flow.guard.clone(),
            postcondition: flow.postcondition.clone(),
            provenance: Provenance {
                origin: flow.origin(name),
                decision: flow_decision,
            },
            steps,
        });
    }
    flows.extend(chains);
    finish_flows(uc, flows)
}

#[allow(clippy::too_many_arguments)]
fn emit_step(
    out: &mut Vec<PendingStep>,
    chains: &mut Vec<PendingFlow>,
    next_saf: &mut u32,
    uc: &UseCase,
    flow: &Flow,
    index: usize,
    flow_decision: Option<&DecisionKey>,
    pl: &UseCaseDocument,
    diagram: &PLDiagram,
    m: &DecisionModel,
    warnings: &mut BTreeSet<ConfigWarning>,
) -> Result<(), ConfigError> {
    let name = &uc.name;
    let step = &flow.steps[index];
    let pl_origin = step.origin(name, &flow.id);
    let decision = if step.optional || step.is_variant_ordered() {
        Some(DecisionKey::Step {
            use_case: name.clone(),
            flow: flow.id.clone(),
            step: step.number.clone(),
        })
    } else {
        flow_decision.cloned()
    };

    match &step.kind {
        StepKind::IncludeVariationPoint { name: vp_name } => {
            let key = DecisionKey::VariationPoint {
                variation_point: vp_name.clone(),
                use_case: name.clone(),
            };
            let Some(vp) = diagram.variation_point(vp_name) else {
                return Err(ConfigError::UnresolvedReference {
                    use_case: name.clone(),
                    flow: flow.id.clone(),
                    message: format!("unknown variation point `{vp_name}`"),
                });
            };
            let selected: Vec<&str> = match m.variation_point_decision(vp_name, name) {
                Some(d) => vp
                    .variants()
                    .filter(|v| d.selected_variants.contains(*v))
                    .collect(),
                None => Vec::new(),
            };
            let stamp = Some(key);
            let include = |v: &str| PendingStep {
                body: Body::Text(format!("INCLUDE USE CASE {v}")),
                origin: format!("{pl_origin}#include:{v}"),
                pl_origin: Some(pl_origin.clone()),
                decision: stamp.clone(),
            };
            let validate = |v: &str, warnings: &mut BTreeSet<ConfigWarning>| {
                let pre = pl.use_case(v).map(|u| u.precondition.trim()).unwrap_or("");
                let text = if pre.is_empty() {
                    warnings.insert(ConfigWarning::MissingPrecondition {
                        variation_point: vp_name.clone(),
                        variant: v.to_string(),
                    });
                    format!("The system VALIDATES THAT 'Precondition of {v}'")
                } else {
                    format!("The system VALIDATES THAT {pre}")
                };
                PendingStep {
                    body: Body::Text(text),
                    origin: format!("{pl_origin}#validate:{v}"),
                    pl_origin: Some(pl_origin.clone()),
                    decision: stamp.clone(),
                }
            };
            match selected.as_slice() {
                [] => {}
                [v] => out.push(include(v)),
                [first, rest @ ..] => {
                    out.push(validate(first, warnings));
                    out.push(include(first));
                    // where the chain flows end
                    let resume_origins: Vec<String> = flow.steps[index + 1..]
                        .iter()
                        .take_while(|s| !matches!(s.kind, StepKind::Abort))
                        .map(|s| s.origin(name, &flow.id))
                        .collect();
                    let mut prev_flow = flow.id.clone();
                    let mut prev_validate = format!("{pl_origin}#validate:{first}");
                    let basic_id = uc.basic_flow.id.clone();
                    for (k, v) in rest.iter().enumerate() {
                        let last = k + 1 == rest.len();
                        let id = format!("SAF{next_saf}");
                        *next_saf += 1;
                        let mut steps = Vec::new();
                        if !last {
                            steps.push(validate(v, warnings));
                        }
                        steps.push(include(v));
                        let end_origin = format!("{pl_origin}#end:{v}");
                        steps.push(PendingStep {
                            body: Body::Resume {
                                flow: flow.id.clone(),
                                explicit: true,
                                origins: resume_origins.clone(),
                                or_abort: true,
                            },
                            origin: end_origin,
                            pl_origin: None,
                            decision: stamp.clone(),
                        });
                        chains.push(PendingFlow {
                            id: id.clone(),
                            kind: FlowKind::SpecificAlt,
                            reference_flow: (prev_flow != basic_id).then(|| prev_flow.clone()),
                            rfs: vec![prev_validate.clone()],
                            guard: String::new(),
                            postcondition: String::new(),
                            provenance: Provenance {
                                origin: format!("{name}|VP:{vp_name}@{}.{}:alt:{v}", flow.id, step.number),
                                decision: stamp.clone(),
                            },
                            steps,
                        });
                        prev_flow = id;
                        prev_validate = format!("{pl_origin}#validate:{v}");
                    }
                }
            }
        }
        StepKind::Resume { flow: target, step: n } => {
            let target_flow = target
                .clone()
                .or_else(|| flow.reference_flow.clone())
                .unwrap_or_else(|| uc.basic_flow.id.clone());
            out.push(PendingStep {
                body: Body::Resume {
                    flow: target_flow.clone(),
                    explicit: target.is_some(),
                    origins: vec![format!("{name}|{target_flow}|{n}")],
                    or_abort: false,
                },
                origin: pl_origin.clone(),
                pl_origin: Some(pl_origin),
                decision,
            });
        }
        _ => out.push(PendingStep {
            body: Body::Text(step.text.clone()),
            origin: pl_origin.clone(),
            pl_origin: Some(pl_origin),
            decision,
        }),
    }
    Ok(())
}

fn push_step(
    steps: &mut Vec<Step>,
    number: usize,
    text: String,
    origin: String,
    decision: Option<DecisionKey>,
) {
    let mut step = Step::new(number.to_string(), text);
    step.provenance = Some(Provenance { origin, decision });
    steps.push(step);
}

fn finish_flows(uc: &UseCase, flows: Vec<PendingFlow>) -> Result<UseCase, ConfigError> {
    let name = &uc.name;
    // number steps; origin -> number per flow
    let mut numbers: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for f in &flows {
        let start = if f.guard.is_empty() { 1 } else { 2 };
        let map = numbers.entry(f.id.clone()).or_default();
        for (k, s) in f.steps.iter().enumerate() {
            let n = (start + k).to_string();
            map.insert(s.origin.clone(), n.clone());
            if let Some(p) = &s.pl_origin {
                map.entry(p.clone()).or_insert(n);
            }
        }
    }
    let present: BTreeSet<String> = flows.iter().map(|f| f.id.clone()).collect();

    let mut basic = None;
    let mut alternatives = Vec::new();
    for f in flows {
        let reference = f
            .reference_flow
            .clone()
            .unwrap_or_else(|| uc.basic_flow.id.clone());
        let rfs: Vec<String> = match numbers.get(&reference) {
            Some(map) => f.rfs.iter().filter_map(|o| map.get(o).cloned()).collect(),
            None => Vec::new(),
        };
        if f.kind != FlowKind::Basic
            && f.kind != FlowKind::GlobalAlt
            && (!present.contains(&reference) || rfs.is_empty())
        {
            continue;
        }
        let start = if f.guard.is_empty() { 1 } else { 2 };
        let mut steps = Vec::new();
        for (k, s) in f.steps.into_iter().enumerate() {
            let text = match s.body {
                Body::Text(t) => t,
                Body::Resume {
                    flow,
                    explicit,
                    origins,
                    or_abort,
                } => {
                    let found = numbers
                        .get(&flow)
                        .and_then(|m| origins.iter().find_map(|o| m.get(o)));
                    let n = match found {
                        Some(n) => n,
                        None if or_abort => {
                            push_step(&mut steps, start + k, "ABORT".into(), s.origin, s.decision);
                            continue;
                        }
                        None => {
                            return Err(ConfigError::UnresolvedReference {
                                use_case: name.clone(),
                                flow: f.id.clone(),
                                message: format!("resume target {} was not generated", origins.join(", ")),
                            })
                        }
                    };
                    if explicit {
                        format!("RESUME STEP {flow} {n}")
                    } else {
                        format!("RESUME STEP {n}")
                    }
                }
            };
            push_step(&mut steps, start + k, text, s.origin, s.decision);
        }
        let flow = Flow {
            id: f.id,
            kind: f.kind,
            optional: false,
            reference_flow: f.reference_flow,
            rfs: if f.kind == FlowKind::GlobalAlt { Vec::new() } else { rfs },
            steps,
            guard: f.guard,
            postcondition: f.postcondition,
            provenance: Some(f.provenance),
        };
        if flow.kind == FlowKind::Basic {
            basic = Some(flow);
        } else {
            alternatives.push(flow);
        }
    }
    Ok(UseCase {
        name: name.clone(),
        variant: false,
        precondition: uc.precondition.clone(),
        basic_flow: basic.expect("basic flow is never optional"),
        alternative_flows: alternatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_diagram;
    use crate::rucm::{parse_ps_specification, parse_specification, serialize_specification};

    const PL: &str = include_str!("../fixtures/sto_mini/pl.rucm");
    const DIAGRAM: &str = include_str!("../fixtures/sto_mini/diagram.json");
    const P1: &str = include_str!("../fixtures/sto_mini/decisions.P1.json");
    const P2: &str = include_str!("../fixtures/sto_mini/decisions.P2.json");
    const RECOGNIZE_GESTURE_P1: &str = include_str!("../fixtures/sto_mini/recognize_gesture.P1.rucm");

    fn configure(decisions: &str) -> PSSpecification {
        let pl = parse_specification(PL).unwrap();
        let d = parse_diagram(DIAGRAM).unwrap();
        let m = DecisionModel::parse(decisions).unwrap();
        generate_ps_specification(&pl, &d, &m).unwrap()
    }

    #[test]
    fn reproduces_the_generated_specification_structure() {
        let ps = configure(P1);
        let golden = parse_ps_specification(RECOGNIZE_GESTURE_P1).unwrap();
        for g in &golden.use_cases {
            let uc = ps.document.use_case(&g.name).expect(&g.name);
            for gf in g.flows() {
                let f = uc.flow(&gf.id).unwrap_or_else(|| panic!("{}/{}", g.name, gf.id));
                assert_eq!(f.kind, gf.kind);
                assert_eq!(f.rfs, gf.rfs, "{}/{}", g.name, gf.id);
                let kinds = |fl: &Flow| fl.steps.iter().map(|s| (s.number.clone(), s.kind.label())).collect::<Vec<_>>();
                assert_eq!(kinds(f), kinds(gf), "{}/{}", g.name, gf.id);
                for (a, b) in f.steps.iter().zip(&gf.steps) {
                    if let StepKind::IncludeUseCase { .. } = b.kind {
                        assert_eq!(a.kind, b.kind);
                    }
                }
            }
        }
        let psud = ps.document.use_case("Provide System User Data").unwrap();
        assert_eq!(
            psud.basic_flow.steps[1].text,
            "The system VALIDATES THAT 'Precondition of Provide System User Data via Standard Mode'"
        );
        let std_mode = ps.document.use_case("Provide System User Data via Standard Mode").unwrap();
        let texts: Vec<&str> = std_mode.basic_flow.steps.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(
            texts,
            vec![
                "The system SENDS trace data TO the tester",
                "The system SENDS calibration TO the tester",
                "The system SENDS error trace data TO the tester"
            ]
        );
        assert_eq!(ps.warnings.len(), 1);
    }

    #[test]
    fn output_has_no_product_line_markers_and_reparses() {
        for d in [P1, P2] {
            let ps = configure(d);
            assert!(!ps.document.has_variability());
            let text = serialize_specification(&ps.document);
            let mut doc = ps.document.clone();
            doc.strip_provenance();
            assert_eq!(parse_ps_specification(&text).unwrap(), doc);
            assert_eq!(text, serialize_specification(&configure(d).document));
        }
    }

    #[test]
    fn three_variants_build_a_chain() {
        let ps = configure(P2);
        let psud = ps.document.use_case("Provide System User Data").unwrap();
        let ids: Vec<&str> = psud.alternative_flows.iter().map(|f| f.id.as_str()).collect();
        assert_eq!(ids, vec!["SAF1", "SAF2"]);
        let saf2 = &psud.alternative_flows[1];
        assert_eq!(saf2.reference_flow.as_deref(), Some("SAF1"));
        assert_eq!(saf2.rfs, vec!["1"]);
        assert!(matches!(
            &saf2.steps[0].kind,
            StepKind::IncludeUseCase { target } if target.ends_with("Diagnostic Mode")
        ));
        let rg = ps.document.use_case("Recognize Gesture").unwrap();
        let baf = rg.flow("BAF1").unwrap();
        assert_eq!(baf.rfs, vec!["1", "2", "3", "4"]);
        assert_eq!(baf.steps[0].number, "2");
    }

    #[test]
    fn chain_resumes_when_the_include_is_not_last() {
        let pl = parse_specification(
            "USE CASE A\n1.1 Basic Flow (BF)\n1. INCLUDE <VARIATION POINT: VP>.\n2. The system SENDS x TO the y.\n\
             <VARIANT> USE CASE B1\nPRECONDITION the b1 mode is on\n1.1 Basic Flow (BF)\n1. The system resets b1.\n\
             <VARIANT> USE CASE B2\n1.1 Basic Flow (BF)\n1. The system resets b2.\n",
        )
        .unwrap();
        let d = parse_diagram(
            r#"{"schema_version": 1,
                "use_cases": [{"name": "A"}, {"name": "B1", "variant": true}, {"name": "B2", "variant": true}],
                "variation_points": [{"name": "VP", "relations": [{"variants": ["B1", "B2"], "min": 1, "max": 2}]}],
                "includes": [{"from": "A", "to": "VP"}]}"#,
        )
        .unwrap();
        let m = DecisionModel::parse(
            r#"{"product_id": "X", "created_on": "2020-01-01", "diagram_decisions": [
                {"variation_point": "VP", "including_use_case": "A",
                 "selected_variants": ["B1", "B2"], "unselected_variants": []}]}"#,
        )
        .unwrap();
        let ps = generate_ps_specification(&pl, &d, &m).unwrap();
        let a = ps.document.use_case("A").unwrap();
        assert_eq!(a.basic_flow.steps[0].text, "The system VALIDATES THAT the b1 mode is on");
        let saf = &a.alternative_flows[0];
        assert_eq!(saf.steps[1].text, "RESUME STEP BF 3");
        assert!(ps.warnings.is_empty());

        let psd = generate_ps_diagram(&d, &m).unwrap();
        assert_eq!(psd.includes.len(), 2);
    }

    #[test]
    fn invalid_decisions_are_rejected() {
        let pl = parse_specification(PL).unwrap();
        let d = parse_diagram(DIAGRAM).unwrap();
        let mut m = DecisionModel::parse(P1).unwrap();
        m.diagram_decisions[0].selected_variants.clear();
        assert!(matches!(
            generate_ps_specification(&pl, &d, &m),
            Err(ConfigError::InvalidDecisions(_))
        ));
    }

    #[test]
    fn ps_diagram_from_decisions() {
        let d = parse_diagram(DIAGRAM).unwrap();
        let m = DecisionModel::parse(P1).unwrap();
        let psd = generate_ps_diagram(&d, &m).unwrap();
        let from_psud: Vec<&str> = psd
            .includes
            .iter()
            .filter(|i| i.from == "Provide System User Data")
            .map(|i| i.to.as_str())
            .collect();
        assert_eq!(
            from_psud,
            vec![
                "Provide System User Data via IEE QC Mode",
                "Provide System User Data via Standard Mode"
            ]
        );
        assert!(!psd.use_cases.iter().any(|u| u.ends_with("via Diagnostic Mode")));
    }
}
