//! Configuration decisions of one product, matching of decisions between
//! two products and the resulting change set.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{DependencyKind, PLDiagram};
use crate::rucm::{UseCase, UseCaseDocument};

#[derive(Debug, Error)]
pub enum DecisionError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("duplicate decision for {0}")]
    DuplicateKey(DecisionKey),
    #[error("decision models belong to different product lines (`{0}` vs `{1}`)")]
    ModelMismatch(String, String),
}

/// Identity of a decision, shared by every product of the line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecisionKey {
    VariationPoint {
        variation_point: String,
        use_case: String,
    },
    OptionalFlow {
        use_case: String,
        flow: String,
    },
    /// Optional step or step of a variant order group.
    Step {
        use_case: String,
        flow: String,
        step: String,
    },
}

impl DecisionKey {
    /// Use case whose specification the decision changes.
    pub fn use_case(&self) -> &str {
        match self {
            DecisionKey::VariationPoint { use_case, .. }
            | DecisionKey::OptionalFlow { use_case, .. }
            | DecisionKey::Step { use_case, .. } => use_case,
        }
    }
}

impl std::fmt::Display for DecisionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecisionKey::VariationPoint {
                variation_point,
                use_case,
            } => write!(f, "<{variation_point}, {use_case}>"),
            DecisionKey::OptionalFlow { use_case, flow } => write!(f, "<{use_case}, {flow}>"),
            DecisionKey::Step {
                use_case,
                flow,
                step,
            } => write!(f, "<{use_case}, {flow}, {step}>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DecisionValue {
    Variants {
        selected: BTreeSet<String>,
        unselected: BTreeSet<String>,
    },
    Flow {
        selected: bool,
    },
    Step {
        selected: bool,
        order: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramDecision {
    pub variation_point: String,
    pub including_use_case: String,
    pub selected_variants: BTreeSet<String>,
    #[serde(default)]
    pub unselected_variants: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecElement {
    OptionalStep,
    OptionalFlow,
    VariantOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecDecision {
    pub use_case: String,
    pub flow: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<String>,
    pub element: SpecElement,
    pub selected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_number: Option<u32>,
}

impl SpecDecision {
    pub fn key(&self) -> DecisionKey {
        match self.element {
            SpecElement::OptionalFlow => DecisionKey::OptionalFlow {
                use_case: self.use_case.clone(),
                flow: self.flow.clone(),
            },
            SpecElement::OptionalStep | SpecElement::VariantOrder => DecisionKey::Step {
                use_case: self.use_case.clone(),
                flow: self.flow.clone(),
                step: self.step.clone().unwrap_or_default(),
            },
        }
    }

    pub fn value(&self) -> DecisionValue {
        match self.element {
            SpecElement::OptionalFlow => DecisionValue::Flow {
                selected: self.selected,
            },
            _ => DecisionValue::Step {
                selected: self.selected,
                order: self.order_number,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionModel {
    pub product_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_line: Option<String>,
    pub created_on: NaiveDate,
    #[serde(default)]
    pub diagram_decisions: Vec<DiagramDecision>,
    #[serde(default)]
    pub spec_decisions: Vec<SpecDecision>,
}

impl DecisionModel {
    pub fn parse(text: &str) -> Result<Self, DecisionError> {
        let m: DecisionModel =
            serde_json::from_str(text).map_err(|e| DecisionError::Schema(e.to_string()))?;
        for d in &m.spec_decisions {
            if d.element != SpecElement::OptionalFlow && d.step.is_none() {
                return Err(DecisionError::Schema(format!(
                    "{}/{}: step decision without `step`",
                    d.use_case, d.flow
                )));
            }
        }
        m.entries()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("decision model serializes")
    }

    /// All decisions keyed by identity.
    pub fn entries(&self) -> Result<BTreeMap<DecisionKey, DecisionValue>, DecisionError> {
        let mut out = BTreeMap::new();
        for d in &self.diagram_decisions {
            let key = DecisionKey::VariationPoint {
                variation_point: d.variation_point.clone(),
                use_case: d.including_use_case.clone(),
            };
            let value = DecisionValue::Variants {
                selected: d.selected_variants.clone(),
                unselected: d.unselected_variants.clone(),
            };
            if out.insert(key.clone(), value).is_some() {
                return Err(DecisionError::DuplicateKey(key));
            }
        }
        for d in &self.spec_decisions {
            let key = d.key();
            if out.insert(key.clone(), d.value()).is_some() {
                return Err(DecisionError::DuplicateKey(key));
            }
        }
        Ok(out)
    }

    pub fn variation_point_decision(&self, vp: &str, use_case: &str) -> Option<&DiagramDecision> {
        self.diagram_decisions
            .iter()
            .find(|d| d.variation_point == vp && d.including_use_case == use_case)
    }

    pub fn flow_decision(&self, use_case: &str, flow: &str) -> Option<&SpecDecision> {
        self.spec_decisions.iter().find(|d| {
            d.element == SpecElement::OptionalFlow && d.use_case == use_case && d.flow == flow
        })
    }

    pub fn step_decision(&self, use_case: &str, flow: &str, step: &str) -> Option<&SpecDecision> {
        self.spec_decisions.iter().find(|d| {
            d.element != SpecElement::OptionalFlow
                && d.use_case == use_case
                && d.flow == flow
                && d.step.as_deref() == Some(step)
        })
    }

    /// Every variant use case selected in some variation point.
    pub fn selected_variants(&self) -> BTreeSet<String> {
        self.diagram_decisions
            .iter()
            .flat_map(|d| d.selected_variants.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub key: DecisionKey,
    pub old: DecisionValue,
    pub new: DecisionValue,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    pub matched: Vec<MatchedPair>,
    pub unmatched_old: Vec<(DecisionKey, DecisionValue)>,
    pub unmatched_new: Vec<(DecisionKey, DecisionValue)>,
}

/// Pairs decisions made for the same variation element in two products.
pub fn match_decisions(old: &DecisionModel, new: &DecisionModel) -> Result<Matching, DecisionError> {
    if let (Some(a), Some(b)) = (&old.product_line, &new.product_line) {
        if a != b {
            return Err(DecisionError::ModelMismatch(a.clone(), b.clone()));
        }
    }
    let old_e = old.entries()?;
    let mut new_e = new.entries()?;
    let mut out = Matching::default();
    for (key, old_v) in old_e {
        match new_e.remove(&key) {
            Some(new_v) => out.matched.push(MatchedPair {
                key,
                old: old_v,
                new: new_v,
            }),
            None => out.unmatched_old.push((key, old_v)),
        }
    }
    out.unmatched_new = new_e.into_iter().collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateKind {
    SelectUnselected,
    UnselectSelected,
    Both,
    OrderChange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Update {
    pub key: DecisionKey,
    pub old: DecisionValue,
    pub new: DecisionValue,
    pub kind: UpdateKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet {
    pub added: Vec<DecisionKey>,
    pub deleted: Vec<DecisionKey>,
    pub updated: Vec<Update>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.deleted.is_empty() && self.updated.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &DecisionKey> {
        self.added
            .iter()
            .chain(self.deleted.iter())
            .chain(self.updated.iter().map(|u| &u.key))
    }

    pub fn contains(&self, key: &DecisionKey) -> bool {
        self.keys().any(|k| k == key)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("change set serializes")
    }
}

fn update_kind(old: &DecisionValue, new: &DecisionValue) -> Option<UpdateKind> {
    let from_flags = |was: bool, is: bool| match (was, is) {
        (false, true) => Some(UpdateKind::SelectUnselected),
        (true, false) => Some(UpdateKind::UnselectSelected),
        _ => None,
    };
    match (old, new) {
        (
            DecisionValue::Variants { selected: a, .. },
            DecisionValue::Variants { selected: b, .. },
        ) => {
            let gained = b.difference(a).next().is_some();
            let lost = a.difference(b).next().is_some();
            match (gained, lost) {
                (true, true) => Some(UpdateKind::Both),
                (true, false) => Some(UpdateKind::SelectUnselected),
                (false, true) => Some(UpdateKind::UnselectSelected),
                (false, false) => None,
            }
        }
        (DecisionValue::Flow { selected: a }, DecisionValue::Flow { selected: b }) => {
            from_flags(*a, *b)
        }
        (
            DecisionValue::Step {
                selected: a,
                order: oa,
            },
            DecisionValue::Step {
                selected: b,
                order: ob,
            },
        ) => from_flags(*a, *b).or_else(|| (*a && oa != ob).then_some(UpdateKind::OrderChange)),
        // a key whose value changed shape: treat as both
        _ if old != new => Some(UpdateKind::Both),
        _ => None,
    }
}

/// Added, deleted and updated decisions. Order changes are reported per
/// step whose order number moved.
pub fn calculate_changes(m: &Matching) -> ChangeSet {
    let mut cs = ChangeSet {
        added: m.unmatched_new.iter().map(|(k, _)| k.clone()).collect(),
        deleted: m.unmatched_old.iter().map(|(k, _)| k.clone()).collect(),
        updated: Vec::new(),
    };
    for pair in &m.matched {
        if let Some(kind) = update_kind(&pair.old, &pair.new) {
            cs.updated.push(Update {
                key: pair.key.clone(),
                old: pair.old.clone(),
                new: pair.new.clone(),
                kind,
            });
        }
    }
    cs
}

/// Convenience for `calculate_changes(match_decisions(old, new))`.
pub fn diff(old: &DecisionModel, new: &DecisionModel) -> Result<ChangeSet, DecisionError> {
    Ok(calculate_changes(&match_decisions(old, new)?))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    UnknownElement {
        key: DecisionKey,
        reason: String,
    },
    MissingDecision {
        key: DecisionKey,
    },
    VariantSet {
        key: DecisionKey,
        reason: String,
    },
    Cardinality {
        variation_point: String,
        use_case: String,
        selected: usize,
        min: usize,
        max: usize,
    },
    Require {
        from: String,
        to: String,
    },
    Conflict {
        from: String,
        to: String,
    },
    Order {
        key: DecisionKey,
        reason: String,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::UnknownElement { key, reason } => write!(f, "{key}: {reason}"),
            Violation::MissingDecision { key } => write!(f, "{key}: no decision"),
            Violation::VariantSet { key, reason } => write!(f, "{key}: {reason}"),
            Violation::Cardinality {
                variation_point,
                use_case,
                selected,
                min,
                max,
            } => write!(
                f,
                "<{variation_point}, {use_case}>: {selected} variants selected, relation allows [{min}..{max}]"
            ),
            Violation::Require { from, to } => {
                write!(f, "`{from}` is selected and requires `{to}`, which is not")
            }
            Violation::Conflict { from, to } => {
                write!(f, "`{from}` and `{to}` conflict but both are selected")
            }
            Violation::Order { key, reason } => write!(f, "{key}: {reason}"),
        }
    }
}

/// Checks a decision model against the product-line diagram and specification.
pub fn validate_decisions(
    m: &DecisionModel,
    diagram: &PLDiagram,
    spec: &UseCaseDocument,
) -> Vec<Violation> {
    let mut out = BTreeSet::new();
    let selected_variants = m.selected_variants();

    // diagram decisions
    for d in &m.diagram_decisions {
        let key = DecisionKey::VariationPoint {
            variation_point: d.variation_point.clone(),
            use_case: d.including_use_case.clone(),
        };
        let Some(vp) = diagram.variation_point(&d.variation_point) else {
            out.insert(Violation::UnknownElement {
                key,
                reason: "no such variation point".into(),
            });
            continue;
        };
        if !diagram.includers_of(&vp.name).contains(&d.including_use_case.as_str()) {
            out.insert(Violation::UnknownElement {
                key: key.clone(),
                reason: format!("`{}` does not include the variation point", d.including_use_case),
            });
        }
        let all: BTreeSet<String> = vp.variants().map(String::from).collect();
        if d.selected_variants.intersection(&d.unselected_variants).next().is_some() {
            out.insert(Violation::VariantSet {
                key: key.clone(),
                reason: "a variant is both selected and unselected".into(),
            });
        }
        let union: BTreeSet<String> = d
            .selected_variants
            .union(&d.unselected_variants)
            .cloned()
            .collect();
        if union != all {
            out.insert(Violation::VariantSet {
                key: key.clone(),
                reason: format!(
                    "selected and unselected variants must partition {{{}}}",
                    all.iter().cloned().collect::<Vec<_>>().join(", ")
                ),
            });
        }
        for r in &vp.relations {
            let n = r
                .variants
                .iter()
                .filter(|v| d.selected_variants.contains(*v))
                .count();
            if n < r.min || n > r.max {
                out.insert(Violation::Cardinality {
                    variation_point: vp.name.clone(),
                    use_case: d.including_use_case.clone(),
                    selected: n,
                    min: r.min,
                    max: r.max,
                });
            }
        }
    }
    for vp in &diagram.variation_points {
        for uc in diagram.includers_of(&vp.name) {
            if m.variation_point_decision(&vp.name, uc).is_none() {
                out.insert(Violation::MissingDecision {
                    key: DecisionKey::VariationPoint {
                        variation_point: vp.name.clone(),
                        use_case: uc.to_string(),
                    },
                });
            }
        }
    }

    // dependencies
    let is_selected = |name: &str| -> bool {
        if let Some(vp) = diagram.variation_point(name) {
            return vp.variants().any(|v| selected_variants.contains(v));
        }
        match diagram.use_case(name) {
            Some(uc) if uc.variant => selected_variants.contains(name),
            Some(_) => true,
            None => false,
        }
    };
    for dep in &diagram.dependencies {
        match dep.kind {
            DependencyKind::Require if is_selected(&dep.from) && !is_selected(&dep.to) => {
                out.insert(Violation::Require {
                    from: dep.from.clone(),
                    to: dep.to.clone(),
                });
            }
            DependencyKind::Conflict if is_selected(&dep.from) && is_selected(&dep.to) => {
                out.insert(Violation::Conflict {
                    from: dep.from.clone(),
                    to: dep.to.clone(),
                });
            }
            _ => {}
        }
    }

    // specification decisions
    for d in &m.spec_decisions {
        let key = d.key();
        let Some(uc) = spec.use_case(&d.use_case) else {
            out.insert(Violation::UnknownElement {
                key,
                reason: "no such use case".into(),
            });
            continue;
        };
        let Some(flow) = uc.flow(&d.flow) else {
            out.insert(Violation::UnknownElement {
                key,
                reason: "no such flow".into(),
            });
            continue;
        };
        match d.element {
            SpecElement::OptionalFlow => {
                if !flow.optional {
                    out.insert(Violation::UnknownElement {
                        key,
                        reason: "flow is not optional".into(),
                    });
                }
            }
            SpecElement::OptionalStep | SpecElement::VariantOrder => {
                let Some(step) = d.step.as_deref().and_then(|s| flow.step(s)) else {
                    out.insert(Violation::UnknownElement {
                        key,
                        reason: "no such step".into(),
                    });
                    continue;
                };
                if d.element == SpecElement::OptionalStep && !step.optional {
                    out.insert(Violation::UnknownElement {
                        key: key.clone(),
                        reason: "step is not optional".into(),
                    });
                }
                if d.element == SpecElement::VariantOrder && !step.is_variant_ordered() {
                    out.insert(Violation::UnknownElement {
                        key: key.clone(),
                        reason: "step is not in a variant order group".into(),
                    });
                }
                if !d.selected && !step.optional {
                    out.insert(Violation::VariantSet {
                        key: key.clone(),
                        reason: "mandatory step cannot be unselected".into(),
                    });
                }
                if d.selected && step.is_variant_ordered() && d.order_number.is_none() {
                    out.insert(Violation::Order {
                        key,
                        reason: "selected variant-order step without order_number".into(),
                    });
                }
            }
        }
    }

    for uc in &spec.use_cases {
        if uc.variant && !selected_variants.contains(&uc.name) {
            continue;
        }
        check_use_case_decisions(m, uc, &mut out);
    }
    out.into_iter().collect()
}

fn check_use_case_decisions(m: &DecisionModel, uc: &UseCase, out: &mut BTreeSet<Violation>) {
    for flow in uc.flows() {
        if flow.optional && m.flow_decision(&uc.name, &flow.id).is_none() {
            out.insert(Violation::MissingDecision {
                key: DecisionKey::OptionalFlow {
                    use_case: uc.name.clone(),
                    flow: flow.id.clone(),
                },
            });
        }
        for group in variant_groups(&flow.steps) {
            let mut seen: BTreeMap<u32, &str> = BTreeMap::new();
            for &i in &group {
                let step = &flow.steps[i];
                let Some(d) = m.step_decision(&uc.name, &flow.id, &step.number) else {
                    continue;
                };
                if !d.selected {
                    continue;
                }
                if let Some(o) = d.order_number {
                    if o == 0 || o as usize > group.len() {
                        out.insert(Violation::Order {
                            key: d.key(),
                            reason: format!("order number {o} outside 1..={}", group.len()),
                        });
                    }
                    if let Some(prev) = seen.insert(o, &step.number) {
                        out.insert(Violation::Order {
                            key: d.key(),
                            reason: format!("order number {o} also used by {prev}"),
                        });
                    }
                }
            }
        }
        for step in &flow.steps {
            if (step.optional || step.is_variant_ordered())
                && m.step_decision(&uc.name, &flow.id, &step.number).is_none()
            {
                out.insert(Violation::MissingDecision {
                    key: DecisionKey::Step {
                        use_case: uc.name.clone(),
                        flow: flow.id.clone(),
                        step: step.number.clone(),
                    },
                });
            }
        }
    }
}

/// Index ranges of contiguous `V`-numbered steps.
pub(crate) fn variant_groups(steps: &[crate::rucm::Step]) -> Vec<Vec<usize>> {
    let mut groups = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    for (i, s) in steps.iter().enumerate() {
        if s.is_variant_ordered() {
            cur.push(i);
        } else if !cur.is_empty() {
            groups.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        groups.push(cur);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(json: &str) -> DecisionModel {
        DecisionModel::parse(json).unwrap()
    }

    const BASE: &str = r#"{
        "product_id": "P1", "created_on": "2015-01-01",
        "diagram_decisions": [
          {"variation_point": "VP", "including_use_case": "A",
           "selected_variants": ["B1"], "unselected_variants": ["B2"]}
        ],
        "spec_decisions": [
          {"use_case": "B1", "flow": "BF", "step": "V1", "element": "variant-order", "selected": true, "order_number": 1},
          {"use_case": "B1", "flow": "BF", "step": "V2", "element": "variant-order", "selected": true, "order_number": 2},
          {"use_case": "A", "flow": "BAF1", "element": "optional-flow", "selected": false}
        ]
    }"#;

    #[test]
    fn identical_models_have_no_changes() {
        let m = model(BASE);
        let matching = match_decisions(&m, &m).unwrap();
        assert_eq!(matching.matched.len(), 4);
        assert!(matching.unmatched_new.is_empty() && matching.unmatched_old.is_empty());
        assert!(calculate_changes(&matching).is_empty());
    }

    #[test]
    fn extra_decision_is_added() {
        let old = model(BASE);
        let mut new = old.clone();
        new.spec_decisions.push(SpecDecision {
            use_case: "A".into(),
            flow: "BF".into(),
            step: Some("3".into()),
            element: SpecElement::OptionalStep,
            selected: true,
            order_number: None,
        });
        let matching = match_decisions(&old, &new).unwrap();
        assert_eq!(matching.unmatched_new.len(), 1);
        let cs = calculate_changes(&matching);
        assert_eq!(cs.added.len(), 1);
        assert!(cs.deleted.is_empty() && cs.updated.is_empty());
    }

    #[test]
    fn update_kinds() {
        let old = model(BASE);
        let mut new = old.clone();
        new.spec_decisions[0].order_number = Some(2);
        new.spec_decisions[1].order_number = Some(1);
        new.spec_decisions[2].selected = true;
        new.diagram_decisions[0].selected_variants = ["B2".to_string()].into();
        new.diagram_decisions[0].unselected_variants = ["B1".to_string()].into();
        let cs = diff(&old, &new).unwrap();
        let kinds: Vec<UpdateKind> = cs.updated.iter().map(|u| u.kind).collect();
        assert_eq!(
            kinds,
            vec![
                UpdateKind::Both,
                UpdateKind::SelectUnselected,
                UpdateKind::OrderChange,
                UpdateKind::OrderChange
            ]
        );

        let mut unsel = old.clone();
        unsel.spec_decisions[0].selected = false;
        unsel.spec_decisions[0].order_number = None;
        let cs = diff(&old, &unsel).unwrap();
        assert_eq!(cs.updated.len(), 1);
        assert_eq!(cs.updated[0].kind, UpdateKind::UnselectSelected);
    }

    #[test]
    fn product_line_mismatch() {
        let mut a = model(BASE);
        let mut b = a.clone();
        a.product_line = Some("x".into());
        b.product_line = Some("y".into());
        assert!(matches!(
            match_decisions(&a, &b),
            Err(DecisionError::ModelMismatch(..))
        ));
    }

    #[test]
    fn duplicate_keys_rejected() {
        let json = r#"{"product_id": "P", "created_on": "2015-01-01", "spec_decisions": [
            {"use_case": "A", "flow": "BAF1", "element": "optional-flow", "selected": false},
            {"use_case": "A", "flow": "BAF1", "element": "optional-flow", "selected": true}]}"#;
        assert!(matches!(
            DecisionModel::parse(json),
            Err(DecisionError::DuplicateKey(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let m = model(BASE);
        assert_eq!(model(&m.to_json()), m);
    }
}
