use std::collections::BTreeSet;

use super::step::normalize_markers;
use super::{Flow, FlowKind, RucmError, Step, StepKind, UseCase, UseCaseDocument};

struct PendingFlow {
    flow: Flow,
    header_line: usize,
    rfs_line: Option<usize>,
}

struct PendingUseCase {
    name: String,
    variant: bool,
    precondition: String,
    line: usize,
    flows: Vec<PendingFlow>,
}

/// Parses a product-line (or product-specific) use case document.
pub fn parse_specification(text: &str) -> Result<UseCaseDocument, RucmError> {
    let mut pending: Vec<PendingUseCase> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = normalize_markers(raw.trim());
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }

        if let Some((variant, name)) = use_case_header(line) {
            if name.is_empty() {
                return Err(RucmError::syntax(line_no, "use case without a name"));
            }
            pending.push(PendingUseCase {
                name: name.to_string(),
                variant,
                precondition: String::new(),
                line: line_no,
                flows: Vec::new(),
            });
            continue;
        }

        let Some(uc) = pending.last_mut() else {
            return Err(RucmError::syntax(
                line_no,
                format!("expected `USE CASE <name>`, found `{line}`"),
            ));
        };

        if let Some(rest) = keyword_line(line, "PRECONDITION") {
            uc.precondition = rest.to_string();
            continue;
        }
        if let Some(rest) = keyword_line(line, "POSTCONDITION") {
            let Some(flow) = uc.flows.last_mut() else {
                return Err(RucmError::syntax(line_no, "postcondition outside of a flow"));
            };
            flow.flow.postcondition = rest.to_string();
            continue;
        }
        if let Some(header) = flow_header(line, line_no)? {
            uc.flows.push(PendingFlow {
                flow: header,
                header_line: line_no,
                rfs_line: None,
            });
            continue;
        }
        if let Some(rest) = line.strip_prefix("RFS") {
            if !(rest.is_empty() || rest.starts_with(' ')) {
                return Err(RucmError::syntax(line_no, format!("malformed line `{line}`")));
            }
            let Some(flow) = uc.flows.last_mut() else {
                return Err(RucmError::syntax(line_no, "RFS outside of a flow"));
            };
            let (reference, refs) = parse_rfs(rest.trim(), line_no)?;
            flow.flow.reference_flow = reference;
            flow.flow.rfs = refs;
            flow.rfs_line = Some(line_no);
            continue;
        }
        if let Some((number, optional, body)) = step_line(line) {
            let Some(flow) = uc.flows.last_mut() else {
                return Err(RucmError::syntax(line_no, "step outside of a flow"));
            };
            push_step(&mut flow.flow, number, optional, body);
            continue;
        }
        return Err(RucmError::syntax(
            line_no,
            format!("unrecognised line `{line}`"),
        ));
    }

    if pending.is_empty() {
        return Err(RucmError::syntax(1, "empty document"));
    }

    let mut names = BTreeSet::new();
    let mut use_cases = Vec::with_capacity(pending.len());
    for uc in pending {
        if !names.insert(uc.name.clone()) {
            return Err(RucmError::syntax(
                uc.line,
                format!("duplicate use case `{}`", uc.name),
            ));
        }
        use_cases.push(finish_use_case(uc)?);
    }

    Ok(UseCaseDocument {
        use_cases,
        source_path: String::new(),
    })
}

/// Parses a product-specific document: no product-line markers are allowed.
pub fn parse_ps_specification(text: &str) -> Result<UseCaseDocument, RucmError> {
    let doc = parse_specification(text)?;
    for uc in &doc.use_cases {
        if uc.variant {
            return Err(RucmError::syntax(
                0,
                format!("`{}`: <VARIANT> in a product-specific document", uc.name),
            ));
        }
        for flow in uc.flows() {
            if flow.optional {
                return Err(RucmError::syntax(
                    0,
                    format!("`{}`/{}: <OPTIONAL> flow in a product-specific document", uc.name, flow.id),
                ));
            }
            for step in &flow.steps {
                if step.optional || step.is_variant_ordered() {
                    return Err(RucmError::syntax(
                        0,
                        format!(
                            "`{}`/{} step {}: product-line marker in a product-specific document",
                            uc.name, flow.id, step.number
                        ),
                    ));
                }
                if let StepKind::IncludeVariationPoint { name } = &step.kind {
                    return Err(RucmError::dangling(
                        0,
                        format!("`{}`: include of variation point `{name}` in a product-specific document", uc.name),
                    ));
                }
            }
        }
    }
    Ok(doc)
}

fn use_case_header(line: &str) -> Option<(bool, &str)> {
    if let Some(rest) = line.strip_prefix("USE CASE") {
        if rest.is_empty() || rest.starts_with(' ') {
            return Some((false, rest.trim()));
        }
    }
    let rest = line.strip_prefix("<VARIANT>")?.trim_start();
    let rest = rest.strip_prefix("USE CASE")?;
    Some((true, rest.trim()))
}

fn keyword_line<'a>(line: &'a str, keyword: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(keyword)?;
    if !(rest.is_empty() || rest.starts_with(' ') || rest.starts_with(':')) {
        return None;
    }
    Some(rest.trim_start_matches(':').trim())
}

/// `1.2 <OPTIONAL> Bounded Alternative Flow (BAF1)`
fn flow_header(line: &str, line_no: usize) -> Result<Option<Flow>, RucmError> {
    let Some((numbering, rest)) = line.split_once(' ') else {
        return Ok(None);
    };
    let is_numbering = numbering.contains('.')
        && !numbering.ends_with('.')
        && numbering.split('.').all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()));
    if !is_numbering {
        return Ok(None);
    }
    let mut rest = rest.trim();
    let optional = if let Some(r) = rest.strip_prefix("<OPTIONAL>") {
        rest = r.trim_start();
        true
    } else {
        false
    };
    let kinds = [
        FlowKind::Basic,
        FlowKind::SpecificAlt,
        FlowKind::BoundedAlt,
        FlowKind::GlobalAlt,
    ];
    let Some(kind) = kinds.into_iter().find(|k| rest.starts_with(k.header())) else {
        return Err(RucmError::syntax(line_no, format!("malformed flow header `{line}`")));
    };
    let id_part = rest[kind.header().len()..].trim();
    let id = id_part
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .map(str::trim)
        .filter(|s| !s.is_empty() && !s.contains(char::is_whitespace));
    let Some(id) = id else {
        return Err(RucmError::syntax(
            line_no,
            format!("flow header without `(ID)`: `{line}`"),
        ));
    };
    let mut flow = Flow::new(id, kind);
    flow.optional = optional;
    Ok(Some(flow))
}

fn is_step_ref(token: &str) -> bool {
    let t = token.strip_prefix('V').unwrap_or(token);
    if let Some((a, b)) = token.split_once('-') {
        return !a.is_empty()
            && !b.is_empty()
            && a.bytes().all(|c| c.is_ascii_digit())
            && b.bytes().all(|c| c.is_ascii_digit());
    }
    !t.is_empty() && t.bytes().all(|c| c.is_ascii_digit())
}

fn parse_rfs(text: &str, line_no: usize) -> Result<(Option<String>, Vec<String>), RucmError> {
    let tokens: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(RucmError::syntax(line_no, "RFS without step references"));
    }
    let (reference, items) = if !is_step_ref(tokens[0]) && tokens.len() > 1 {
        (Some(tokens[0].to_string()), &tokens[1..])
    } else {
        (None, &tokens[..])
    };
    let mut refs = Vec::new();
    for item in items {
        if !is_step_ref(item) {
            return Err(RucmError::syntax(line_no, format!("bad RFS entry `{item}`")));
        }
        if let Some((a, b)) = item.split_once('-') {
            let (a, b): (u32, u32) = (a.parse().unwrap_or(0), b.parse().unwrap_or(0));
            if a == 0 || b < a {
                return Err(RucmError::syntax(line_no, format!("bad RFS range `{item}`")));
            }
            refs.extend((a..=b).map(|n| n.to_string()));
        } else {
            refs.push(item.to_string());
        }
    }
    Ok((reference, refs))
}

/// `V3. <OPTIONAL> The system SENDS ...`
fn step_line(line: &str) -> Option<(String, bool, String)> {
    let (number, rest) = line.split_once(' ').unwrap_or((line, ""));
    let number = number.strip_suffix('.')?;
    let digits = number.strip_prefix('V').unwrap_or(number);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut rest = rest.trim();
    let optional = if let Some(r) = rest.strip_prefix("<OPTIONAL>") {
        rest = r.trim_start();
        true
    } else {
        false
    };
    let body = rest.trim().trim_end_matches('.').trim_end().to_string();
    Some((number.to_string(), optional, body))
}

fn push_step(flow: &mut Flow, number: String, optional: bool, body: String) {
    if body == "ENDIF" {
        return;
    }
    if flow.steps.is_empty() && flow.guard.is_empty() {
        if let Some(cond) = body.strip_prefix("IF ").and_then(|b| b.strip_suffix(" THEN")) {
            flow.guard = cond.trim().to_string();
            return;
        }
    }
    let mut step = Step::new(number, body);
    step.optional = optional;
    flow.steps.push(step);
}

fn finish_use_case(uc: PendingUseCase) -> Result<UseCase, RucmError> {
    let basic_count = uc.flows.iter().filter(|f| f.flow.kind == FlowKind::Basic).count();
    if basic_count != 1 {
        return Err(RucmError::syntax(
            uc.line,
            format!("use case `{}` must have exactly one basic flow, found {basic_count}", uc.name),
        ));
    }
    let mut ids = BTreeSet::new();
    for f in &uc.flows {
        if !ids.insert(f.flow.id.clone()) {
            return Err(RucmError::syntax(
                f.header_line,
                format!("duplicate flow id `{}` in `{}`", f.flow.id, uc.name),
            ));
        }
        let line = f.rfs_line.unwrap_or(f.header_line);
        let n = f.flow.rfs.len();
        match f.flow.kind {
            FlowKind::Basic | FlowKind::GlobalAlt if f.rfs_line.is_some() => {
                return Err(RucmError::syntax(
                    line,
                    format!("{} flow `{}` cannot have RFS", f.flow.kind.header(), f.flow.id),
                ));
            }
            FlowKind::SpecificAlt if n != 1 => {
                return Err(RucmError::syntax(
                    line,
                    format!("specific alternative flow `{}` needs exactly one RFS step, found {n}", f.flow.id),
                ));
            }
            FlowKind::BoundedAlt if n == 0 => {
                return Err(RucmError::syntax(
                    line,
                    format!("bounded alternative flow `{}` needs RFS steps", f.flow.id),
                ));
            }
            _ => {}
        }
    }

    let mut flows = uc.flows.into_iter();
    let basic_pos_first = flows.next().expect("at least one flow");
    let mut all: Vec<PendingFlow> = vec![basic_pos_first];
    all.extend(flows);
    let basic_idx = all
        .iter()
        .position(|f| f.flow.kind == FlowKind::Basic)
        .expect("checked above");
    let basic_id = all[basic_idx].flow.id.clone();

    // normalise explicit references to the basic flow
    for f in &mut all {
        if f.flow.reference_flow.as_deref() == Some(basic_id.as_str()) {
            f.flow.reference_flow = None;
        }
    }

    // resolve references
    for f in &all {
        let line = f.rfs_line.unwrap_or(f.header_line);
        if f.flow.rfs.is_empty() && f.flow.reference_flow.is_none() {
            continue;
        }
        let ref_id = f.flow.reference_flow.as_deref().unwrap_or(&basic_id);
        let Some(reference) = all.iter().find(|g| g.flow.id == ref_id) else {
            return Err(RucmError::dangling(
                line,
                format!("flow `{}` references unknown flow `{ref_id}`", f.flow.id),
            ));
        };
        if reference.flow.id == f.flow.id {
            return Err(RucmError::dangling(line, format!("flow `{}` references itself", f.flow.id)));
        }
        for r in &f.flow.rfs {
            if reference.flow.step(r).is_none() {
                return Err(RucmError::dangling(
                    line,
                    format!("flow `{}` references missing step {r} of `{ref_id}`", f.flow.id),
                ));
            }
        }
    }
    for f in &all {
        for s in &f.flow.steps {
            if let StepKind::Resume { flow, step } = &s.kind {
                let target_id = match flow {
                    Some(id) => id.clone(),
                    None => f.flow.reference_flow.clone().unwrap_or_else(|| basic_id.clone()),
                };
                let ok = all
                    .iter()
                    .find(|g| g.flow.id == target_id)
                    .is_some_and(|g| g.flow.step(step).is_some());
                if !ok {
                    return Err(RucmError::dangling(
                        f.header_line,
                        format!("flow `{}` resumes at missing step {target_id} {step}", f.flow.id),
                    ));
                }
            }
        }
    }

    let basic = all.remove(basic_idx).flow;
    Ok(UseCase {
        name: uc.name,
        variant: uc.variant,
        precondition: uc.precondition,
        basic_flow: basic,
        alternative_flows: all.into_iter().map(|f| f.flow).collect(),
    })
}
