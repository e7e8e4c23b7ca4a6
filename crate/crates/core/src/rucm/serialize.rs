use std::fmt::Write as _;

use super::{Flow, UseCase, UseCaseDocument};

/// Canonical text form. Flow headers are renumbered `1.1`, `1.2`, ... and
/// consecutive RFS steps are written as ranges.
pub fn serialize_specification(doc: &UseCaseDocument) -> String {
    let mut out = String::new();
    for (i, uc) in doc.use_cases.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_use_case(&mut out, uc);
    }
    out
}

fn write_use_case(out: &mut String, uc: &UseCase) {
    if uc.variant {
        out.push_str("<VARIANT> ");
    }
    let _ = writeln!(out, "USE CASE {}", uc.name);
    if !uc.precondition.is_empty() {
        let _ = writeln!(out, "PRECONDITION {}", uc.precondition);
    }
    for (i, flow) in uc.flows().enumerate() {
        write_flow(out, i + 1, flow);
    }
}

fn write_flow(out: &mut String, index: usize, flow: &Flow) {
    let _ = write!(out, "1.{index} ");
    if flow.optional {
        out.push_str("<OPTIONAL> ");
    }
    let _ = writeln!(out, "{} ({})", flow.kind.header(), flow.id);
    if !flow.rfs.is_empty() {
        out.push_str("RFS ");
        if let Some(r) = &flow.reference_flow {
            let _ = write!(out, "{r} ");
        }
        out.push_str(&compress_refs(&flow.rfs));
        out.push('\n');
    }
    if flow.has_guard() {
        let _ = writeln!(out, "1. IF {} THEN", flow.guard);
    }
    for step in &flow.steps {
        let _ = write!(out, "{}. ", step.number);
        if step.optional {
            out.push_str("<OPTIONAL> ");
        }
        let _ = writeln!(out, "{}.", step.text);
    }
    if flow.has_guard() {
        let next = flow
            .steps
            .last()
            .and_then(|s| s.number.trim_start_matches('V').parse::<u32>().ok())
            .map_or(2, |n| n + 1);
        let _ = writeln!(out, "{next}. ENDIF");
    }
    if !flow.postcondition.is_empty() {
        let _ = writeln!(out, "POSTCONDITION {}", flow.postcondition);
    }
}

fn compress_refs(refs: &[String]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < refs.len() {
        let start = refs[i].parse::<u32>().ok();
        let mut j = i;
        if let Some(s) = start {
            while j + 1 < refs.len()
                && refs[j + 1].parse::<u32>().ok() == Some(s + (j + 1 - i) as u32)
            {
                j += 1;
            }
        }
        if j > i {
            parts.push(format!("{}-{}", refs[i], refs[j]));
        } else {
            parts.push(refs[i].clone());
        }
        i = j + 1;
    }
    parts.join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rucm::parse_specification;

    #[test]
    fn ranges() {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(compress_refs(&v(&["1", "2", "3", "4"])), "1-4");
        assert_eq!(compress_refs(&v(&["1", "3", "4", "V2"])), "1, 3-4, V2");
    }

    #[test]
    fn round_trip_with_guard_and_reference_flow() {
        let text = "\
USE CASE X
PRECONDITION the system is on
1.1 Basic Flow (BF)
1. The system VALIDATES THAT x is ok.
V2. <OPTIONAL> The system SENDS a TO the b.
1.2 Specific Alternative Flow (SAF1)
RFS 1
1. The system VALIDATES THAT y is ok.
2. ABORT.
POSTCONDITION nothing happened
1.3 Specific Alternative Flow (SAF2)
RFS SAF1 1
1. RESUME STEP 1.
1.4 <OPTIONAL> Bounded Alternative Flow (BAF1)
RFS 1, V2
1. IF power is low THEN
2. ABORT.
3. ENDIF
";
        let doc = parse_specification(text).unwrap();
        let out = serialize_specification(&doc);
        assert_eq!(out, text);
        assert_eq!(parse_specification(&out).unwrap(), doc);
    }
}
