use super::StepKind;

pub const STOP_WORDS: [&str; 3] = ["the", "a", "an"];

/// Replaces the typographic angle brackets some editors produce.
pub(crate) fn normalize_markers(text: &str) -> String {
    text.replace(['⟨', '〈'], "<").replace(['⟩', '〉'], ">")
}

/// Derives the step kind from the keywords of a single step sentence.
///
/// The trailing period is optional. Keywords are matched in capitals only;
/// anything without a recognised keyword is an internal step.
pub fn classify_step(text: &str) -> StepKind {
    let text = normalize_markers(text);
    let text = text.trim().trim_end_matches('.').trim();

    if text == "ABORT" {
        return StepKind::Abort;
    }
    if let Some(rest) = text.strip_prefix("RESUME STEP ") {
        let parts: Vec<&str> = rest.split_whitespace().collect();
        return match parts.as_slice() {
            [flow, step] => StepKind::Resume {
                flow: Some(flow.to_string()),
                step: step.to_string(),
            },
            _ => StepKind::Resume {
                flow: None,
                step: rest.trim().to_string(),
            },
        };
    }
    if let Some(rest) = text.strip_prefix("INCLUDE USE CASE ") {
        return StepKind::IncludeUseCase {
            target: rest.trim().to_string(),
        };
    }
    if let Some(rest) = text.strip_prefix("INCLUDE <VARIATION POINT") {
        let rest = rest.trim_start().trim_start_matches(':').trim();
        let name = rest.trim_end_matches('>').trim();
        return StepKind::IncludeVariationPoint {
            name: name.to_string(),
        };
    }
    if let Some(idx) = text.find(" VALIDATES THAT ") {
        return StepKind::Condition {
            phrase: text[idx + " VALIDATES THAT ".len()..].trim().to_string(),
        };
    }
    if let Some(idx) = text.find(" REQUESTS ") {
        let after = &text[idx + " REQUESTS ".len()..];
        if let Some(from) = after.rfind(" FROM ") {
            return StepKind::Input {
                actor: after[from + " FROM ".len()..].trim().to_string(),
                entity: after[..from].trim().to_string(),
            };
        }
    }
    if let Some(idx) = text.find(" SENDS ") {
        let subject = text[..idx].trim();
        let after = &text[idx + " SENDS ".len()..];
        if let Some(to) = after.rfind(" TO ") {
            let entity = after[..to].trim().to_string();
            let receiver = after[to + " TO ".len()..].trim().to_string();
            return if is_system_actor(subject) {
                StepKind::Output {
                    actor: receiver,
                    entity,
                }
            } else {
                StepKind::Input {
                    actor: subject.to_string(),
                    entity,
                }
            };
        }
    }
    StepKind::Internal
}

pub fn is_system_actor(subject: &str) -> bool {
    let s = subject.trim().to_lowercase();
    s == "the system" || s == "system"
}

/// Lowercased word tokens with stop words removed, used for phrase matching.
pub fn normalize_phrase(phrase: &str) -> Vec<String> {
    phrase
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| !STOP_WORDS.contains(&w.as_str()))
        .collect()
}
