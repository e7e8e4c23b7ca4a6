use serde::Serialize;

use super::{FlowKind, StepKind, UseCaseDocument};

/// Non-fatal findings on a parsed document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ValidationWarning {
    /// A specific alternative flow branches from a step that is not a condition.
    NonConditionReference {
        use_case: String,
        flow: String,
        step: String,
    },
    /// A global alternative flow includes a variation point.
    VariationPointInGlobalFlow {
        use_case: String,
        flow: String,
        variation_point: String,
    },
    /// A bounded or global flow has no `IF .. THEN` guard.
    MissingGuard { use_case: String, flow: String },
}

impl std::fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidationWarning::NonConditionReference { use_case, flow, step } => write!(
                f,
                "{use_case}/{flow}: reference step {step} is not a VALIDATES THAT condition"
            ),
            ValidationWarning::VariationPointInGlobalFlow {
                use_case,
                flow,
                variation_point,
            } => write!(
                f,
                "{use_case}/{flow}: global flow includes variation point `{variation_point}`"
            ),
            ValidationWarning::MissingGuard { use_case, flow } => {
                write!(f, "{use_case}/{flow}: no IF .. THEN guard")
            }
        }
    }
}

pub fn validate_document(doc: &UseCaseDocument) -> Vec<ValidationWarning> {
    let mut out = Vec::new();
    for uc in &doc.use_cases {
        for flow in &uc.alternative_flows {
            match flow.kind {
                FlowKind::SpecificAlt => {
                    let Some(reference) = uc.reference_flow_of(flow) else {
                        continue;
                    };
                    for r in &flow.rfs {
                        let is_condition = reference
                            .step(r)
                            .is_some_and(|s| matches!(s.kind, StepKind::Condition { .. }));
                        if !is_condition {
                            out.push(ValidationWarning::NonConditionReference {
                                use_case: uc.name.clone(),
                                flow: flow.id.clone(),
                                step: r.clone(),
                            });
                        }
                    }
                }
                FlowKind::BoundedAlt | FlowKind::GlobalAlt if !flow.has_guard() => {
                    out.push(ValidationWarning::MissingGuard {
                        use_case: uc.name.clone(),
                        flow: flow.id.clone(),
                    });
                }
                _ => {}
            }
            if flow.kind == FlowKind::GlobalAlt {
                for s in &flow.steps {
                    if let StepKind::IncludeVariationPoint { name } = &s.kind {
                        out.push(ValidationWarning::VariationPointInGlobalFlow {
                            use_case: uc.name.clone(),
                            flow: flow.id.clone(),
                            variation_point: name.clone(),
                        });
                    }
                }
            }
        }
    }
    out
}
