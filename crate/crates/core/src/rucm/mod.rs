//! Restricted use case specifications (RUCM) with product-line extensions.
//!
//! A document is a list of use cases. Each use case has one basic flow and
//! any number of specific, bounded or global alternative flows. Steps are
//! classified from their capitalised keywords (`SENDS .. TO`,
//! `REQUESTS .. FROM`, `VALIDATES THAT`, `INCLUDE USE CASE`, ...).
//!
//! The text format is line oriented; see `docs/rucm-format.md` in the
//! repository for the grammar.

mod parse;
mod serialize;
mod step;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::DecisionKey;

pub use parse::{parse_ps_specification, parse_specification};
pub use serialize::serialize_specification;
pub use step::{classify_step, is_system_actor, normalize_phrase, STOP_WORDS};
pub use validate::{validate_document, ValidationWarning};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RucmError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: dangling reference: {message}")]
    DanglingReference { line: usize, message: String },
}

impl RucmError {
    pub(crate) fn syntax(line: usize, message: impl Into<String>) -> Self {
        RucmError::Syntax {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn dangling(line: usize, message: impl Into<String>) -> Self {
        RucmError::DanglingReference {
            line,
            message: message.into(),
        }
    }
}

/// Where a generated element came from.
///
/// `origin` is stable across products configured from the same product line
/// and is used to match steps and flows between two products. `decision` is
/// set when the element exists because of a configuration decision.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub origin: String,
    pub decision: Option<DecisionKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UseCaseDocument {
    pub use_cases: Vec<UseCase>,
    pub source_path: String,
}

impl UseCaseDocument {
    pub fn use_case(&self, name: &str) -> Option<&UseCase> {
        self.use_cases.iter().find(|u| u.name == name)
    }

    /// True when the document uses any product-line marker.
    pub fn has_variability(&self) -> bool {
        self.use_cases.iter().any(|u| {
            u.variant
                || u.flows().any(|f| {
                    f.optional
                        || f.steps.iter().any(|s| {
                            s.optional
                                || s.is_variant_ordered()
                                || matches!(s.kind, StepKind::IncludeVariationPoint { .. })
                        })
                })
        })
    }

    pub fn strip_provenance(&mut self) {
        for uc in &mut self.use_cases {
            for flow in std::iter::once(&mut uc.basic_flow).chain(uc.alternative_flows.iter_mut()) {
                flow.provenance = None;
                for s in &mut flow.steps {
                    s.provenance = None;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseCase {
    pub name: String,
    pub variant: bool,
    pub precondition: String,
    pub basic_flow: Flow,
    pub alternative_flows: Vec<Flow>,
}

impl UseCase {
    /// Basic flow first, then alternative flows in document order.
    pub fn flows(&self) -> impl Iterator<Item = &Flow> {
        std::iter::once(&self.basic_flow).chain(self.alternative_flows.iter())
    }

    pub fn flow(&self, id: &str) -> Option<&Flow> {
        self.flows().find(|f| f.id == id)
    }

    /// Resolves an alternative flow's reference flow (the basic flow when unset).
    pub fn reference_flow_of(&self, flow: &Flow) -> Option<&Flow> {
        match &flow.reference_flow {
            None => Some(&self.basic_flow),
            Some(id) => self.flow(id),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlowKind {
    Basic,
    SpecificAlt,
    BoundedAlt,
    GlobalAlt,
}

impl FlowKind {
    pub fn header(self) -> &'static str {
        match self {
            FlowKind::Basic => "Basic Flow",
            FlowKind::SpecificAlt => "Specific Alternative Flow",
            FlowKind::BoundedAlt => "Bounded Alternative Flow",
            FlowKind::GlobalAlt => "Global Alternative Flow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub id: String,
    pub kind: FlowKind,
    pub optional: bool,
    /// Flow the `rfs` steps belong to; `None` is the basic flow.
    pub reference_flow: Option<String>,
    pub rfs: Vec<String>,
    pub steps: Vec<Step>,
    /// `IF .. THEN` condition of bounded and global flows, empty otherwise.
    pub guard: String,
    pub postcondition: String,
    pub provenance: Option<Provenance>,
}

impl Flow {
    pub fn new(id: impl Into<String>, kind: FlowKind) -> Self {
        Flow {
            id: id.into(),
            kind,
            optional: false,
            reference_flow: None,
            rfs: Vec::new(),
            steps: Vec::new(),
            guard: String::new(),
            postcondition: String::new(),
            provenance: None,
        }
    }

    pub fn step(&self, number: &str) -> Option<&Step> {
        self.steps.iter().find(|s| s.number == number)
    }

    pub fn has_guard(&self) -> bool {
        !self.guard.is_empty()
    }

    /// Whether the flow ends the use case (its last effective step is ABORT).
    pub fn aborts(&self) -> bool {
        self.terminal_step()
            .is_some_and(|s| matches!(s.kind, StepKind::Abort))
    }

    /// First ABORT or RESUME step, or the last step when there is none.
    pub fn terminal_step(&self) -> Option<&Step> {
        self.steps
            .iter()
            .find(|s| matches!(s.kind, StepKind::Abort | StepKind::Resume { .. }))
            .or(self.steps.last())
    }

    /// Origin used to match this flow across products.
    pub fn origin(&self, use_case: &str) -> String {
        match &self.provenance {
            Some(p) => p.origin.clone(),
            None => format!("{use_case}|{}", self.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub number: String,
    pub optional: bool,
    pub text: String,
    pub kind: StepKind,
    pub provenance: Option<Provenance>,
}

impl Step {
    pub fn new(number: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Step {
            number: number.into(),
            optional: false,
            kind: classify_step(&text),
            text,
            provenance: None,
        }
    }

    pub fn optional(mut self) -> Self {
        self.optional = true;
        self
    }

    pub fn is_variant_ordered(&self) -> bool {
        self.number.starts_with('V')
    }

    pub fn origin(&self, use_case: &str, flow: &str) -> String {
        match &self.provenance {
            Some(p) => p.origin.clone(),
            None => format!("{use_case}|{flow}|{}", self.number),
        }
    }

    pub fn decision(&self) -> Option<&DecisionKey> {
        self.provenance.as_ref().and_then(|p| p.decision.as_ref())
    }
}

/// Step kind plus the payload extracted from its keywords.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepKind {
    Input { actor: String, entity: String },
    Output { actor: String, entity: String },
    Condition { phrase: String },
    Internal,
    IncludeUseCase { target: String },
    IncludeVariationPoint { name: String },
    Abort,
    /// `RESUME STEP [flow] n`: leave the flow and continue at step `n`.
    Resume { flow: Option<String>, step: String },
}

impl StepKind {
    pub fn label(&self) -> &'static str {
        match self {
            StepKind::Input { .. } => "input",
            StepKind::Output { .. } => "output",
            StepKind::Condition { .. } => "condition",
            StepKind::Internal => "internal",
            StepKind::IncludeUseCase { .. } => "include-use-case",
            StepKind::IncludeVariationPoint { .. } => "include-variation-point",
            StepKind::Abort => "abort",
            StepKind::Resume { .. } => "resume",
        }
    }
}
