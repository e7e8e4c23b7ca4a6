//! Product-line use case diagrams: essential and variant use cases,
//! variation points with `[min..max]` variability relations, include
//! relations and require/conflict dependencies.
//!
//! Diagrams are stored as JSON:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "use_cases": [{"name": "Provide System User Data", "variant": false}],
//!   "variation_points": [{"name": "Method of Providing Data",
//!                         "relations": [{"variants": ["..."], "min": 2, "max": 2}]}],
//!   "includes": [{"from": "Provide System User Data", "to": "Method of Providing Data"}],
//!   "dependencies": [{"kind": "require", "from": "Storing Error Status", "to": "Clearing Error Status"}]
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rucm::{StepKind, UseCaseDocument};

pub const DIAGRAM_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown reference: {0}")]
    UnknownReference(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramUseCase {
    pub name: String,
    #[serde(default)]
    pub variant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariabilityRelation {
    pub variants: Vec<String>,
    pub min: usize,
    pub max: usize,
}

impl VariabilityRelation {
    /// `min = max = n`.
    pub fn is_mandatory(&self) -> bool {
        self.min == self.max && self.max == self.variants.len()
    }

    pub fn is_optional(&self) -> bool {
        !self.is_mandatory()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariationPoint {
    pub name: String,
    /// When absent in the file, a variation point is mandatory iff one of its
    /// relations forces a selection (`min >= 1`).
    #[serde(default)]
    pub mandatory: Option<bool>,
    pub relations: Vec<VariabilityRelation>,
}

impl VariationPoint {
    pub fn is_mandatory(&self) -> bool {
        self.mandatory
            .unwrap_or_else(|| self.relations.iter().any(|r| r.min >= 1))
    }

    /// All variants in relation order.
    pub fn variants(&self) -> impl Iterator<Item = &str> {
        self.relations
            .iter()
            .flat_map(|r| r.variants.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Include {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyKind {
    Require,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dependency {
    pub kind: DependencyKind,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PLDiagram {
    pub schema_version: u32,
    pub use_cases: Vec<DiagramUseCase>,
    #[serde(default)]
    pub variation_points: Vec<VariationPoint>,
    #[serde(default)]
    pub includes: Vec<Include>,
    #[serde(default)]
    pub dependencies: Vec<Dependency>,
}

impl PLDiagram {
    pub fn use_case(&self, name: &str) -> Option<&DiagramUseCase> {
        self.use_cases.iter().find(|u| u.name == name)
    }

    pub fn variation_point(&self, name: &str) -> Option<&VariationPoint> {
        self.variation_points.iter().find(|v| v.name == name)
    }

    /// Use cases that include the given variation point.
    pub fn includers_of(&self, vp: &str) -> Vec<&str> {
        self.includes
            .iter()
            .filter(|i| i.to == vp)
            .map(|i| i.from.as_str())
            .collect()
    }

    /// The variation point a variant use case belongs to.
    pub fn variation_point_of(&self, variant: &str) -> Option<&VariationPoint> {
        self.variation_points
            .iter()
            .find(|vp| vp.variants().any(|v| v == variant))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagram serializes")
    }
}

pub fn parse_diagram(text: &str) -> Result<PLDiagram, DiagramError> {
    let diagram: PLDiagram =
        serde_json::from_str(text).map_err(|e| DiagramError::Schema(e.to_string()))?;
    check_diagram(&diagram)?;
    Ok(diagram)
}

/// Structural validation applied by [`parse_diagram`].
pub fn check_diagram(d: &PLDiagram) -> Result<(), DiagramError> {
    if d.schema_version != DIAGRAM_SCHEMA_VERSION {
        return Err(DiagramError::Schema(format!(
            "unsupported schema_version {} (expected {DIAGRAM_SCHEMA_VERSION})",
            d.schema_version
        )));
    }
    let mut names = BTreeSet::new();
    for uc in &d.use_cases {
        if !names.insert(uc.name.as_str()) {
            return Err(DiagramError::Schema(format!("duplicate element `{}`", uc.name)));
        }
    }
    for vp in &d.variation_points {
        if !names.insert(vp.name.as_str()) {
            return Err(DiagramError::Schema(format!("duplicate element `{}`", vp.name)));
        }
    }
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for vp in &d.variation_points {
        if vp.relations.is_empty() {
            return Err(DiagramError::Schema(format!(
                "variation point `{}` has no variability relation",
                vp.name
            )));
        }
        for r in &vp.relations {
            if r.variants.is_empty() || r.min > r.max || r.max > r.variants.len() {
                return Err(DiagramError::Schema(format!(
                    "variation point `{}`: invalid cardinality [{}..{}] over {} variants",
                    vp.name,
                    r.min,
                    r.max,
                    r.variants.len()
                )));
            }
            for v in &r.variants {
                match d.use_case(v) {
                    Some(uc) if uc.variant => {}
                    Some(_) => {
                        return Err(DiagramError::Schema(format!(
                            "`{v}` in variation point `{}` is not a variant use case",
                            vp.name
                        )))
                    }
                    None => {
                        return Err(DiagramError::UnknownReference(format!(
                            "variation point `{}` lists unknown variant `{v}`",
                            vp.name
                        )))
                    }
                }
                if let Some(prev) = owner.insert(v, &vp.name) {
                    return Err(DiagramError::Schema(format!(
                        "variant `{v}` belongs to both `{prev}` and `{}`",
                        vp.name
                    )));
                }
            }
        }
    }
    for inc in &d.includes {
        if d.use_case(&inc.from).is_none() {
            return Err(DiagramError::UnknownReference(format!(
                "include from unknown use case `{}`",
                inc.from
            )));
        }
        if !names.contains(inc.to.as_str()) {
            return Err(DiagramError::UnknownReference(format!(
                "include of unknown element `{}`",
                inc.to
            )));
        }
    }
    for vp in &d.variation_points {
        if d.includers_of(&vp.name).is_empty() {
            return Err(DiagramError::Schema(format!(
                "variation point `{}` is not included by any use case",
                vp.name
            )));
        }
    }
    for dep in &d.dependencies {
        for end in [&dep.from, &dep.to] {
            if !names.contains(end.as_str()) {
                return Err(DiagramError::UnknownReference(format!(
                    "dependency endpoint `{end}` does not exist"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Finding {
    VariationPointNotInDiagram { use_case: String, variation_point: String },
    IncludeNotInDiagram { use_case: String, variation_point: String },
    VariantWithoutSpecification { use_case: String },
    UseCaseNotInDiagram { use_case: String },
    VariantMarkerMismatch { use_case: String },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::VariationPointNotInDiagram { use_case, variation_point } => write!(
                f,
                "`{use_case}` includes variation point `{variation_point}` which is not in the diagram"
            ),
            Finding::IncludeNotInDiagram { use_case, variation_point } => write!(
                f,
                "`{use_case}` includes `{variation_point}` but the diagram has no such include"
            ),
            Finding::VariantWithoutSpecification { use_case } => {
                write!(f, "variant use case `{use_case}` has no specification")
            }
            Finding::UseCaseNotInDiagram { use_case } => {
                write!(f, "use case `{use_case}` is specified but not in the diagram")
            }
            Finding::VariantMarkerMismatch { use_case } => write!(
                f,
                "`{use_case}`: <VARIANT> marker disagrees with the diagram"
            ),
        }
    }
}

/// Consistency findings between a diagram and a product-line specification.
pub fn cross_check(diagram: &PLDiagram, spec: &UseCaseDocument) -> Vec<Finding> {
    let mut out = BTreeSet::new();
    for uc in &spec.use_cases {
        match diagram.use_case(&uc.name) {
            None => {
                out.insert(Finding::UseCaseNotInDiagram {
                    use_case: uc.name.clone(),
                });
            }
            Some(d) if d.variant != uc.variant => {
                out.insert(Finding::VariantMarkerMismatch {
                    use_case: uc.name.clone(),
                });
            }
            Some(_) => {}
        }
        for flow in uc.flows() {
            for step in &flow.steps {
                let StepKind::IncludeVariationPoint { name } = &step.kind else {
                    continue;
                };
                if diagram.variation_point(name).is_none() {
                    out.insert(Finding::VariationPointNotInDiagram {
                        use_case: uc.name.clone(),
                        variation_point: name.clone(),
                    });
                } else if !diagram
                    .includes
                    .iter()
                    .any(|i| i.from == uc.name && &i.to == name)
                {
                    out.insert(Finding::IncludeNotInDiagram {
                        use_case: uc.name.clone(),
                        variation_point: name.clone(),
                    });
                }
            }
        }
    }
    for d in &diagram.use_cases {
        if d.variant && spec.use_case(&d.name).is_none() {
            out.insert(Finding::VariantWithoutSpecification {
                use_case: d.name.clone(),
            });
        }
    }
    out.into_iter().collect()
}
