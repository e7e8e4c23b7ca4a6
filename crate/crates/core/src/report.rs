//! Whole-line impact report: classifications against every previous
//! product, the scenarios no previous product exercised, and the previous
//! product to take each remaining test from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{filter_sources, Classification, EditOp, NewScenarioFinding, TestClass};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no classification to aggregate")]
    EmptyInput,
    #[error("classifications target different products: {0} and {1}")]
    MixedProducts(String, String),
    #[error("no creation date for product `{0}`")]
    MissingDate(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Html,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "html" => Ok(Format::Html),
            _ => Err(format!("unknown format `{s}` (json, csv or html)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreviousProduct {
    pub id: String,
    pub created_on: NaiveDate,
}

/// Tests of one previous product exercising a scenario of the new product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub product_id: String,
    pub class: TestClass,
    pub tests: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "kebab-case")]
pub enum Choice {
    /// All candidates share a class; take the most recent product's tests.
    Selected { product_id: String, class: TestClass, tests: Vec<String> },
    /// Reusable and retestable candidates; the engineer picks.
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub scenario: String,
    pub choice: Choice,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub product: String,
    pub previous: Vec<PreviousProduct>,
    /// How equal creation dates are ordered when picking the most recent product.
    pub tie_break: String,
    pub classifications: Vec<Classification>,
    pub selections: Vec<Selection>,
    pub new_scenarios: Vec<NewScenarioFinding>,
}

impl ImpactReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Selected tests by class, counted once per selection.
    pub fn selected(&self, class: TestClass) -> usize {
        self.selections
            .iter()
            .filter_map(|s| match &s.choice {
                Choice::Selected { class: c, tests, .. } if *c == class => Some(tests.len()),
                _ => None,
            })
            .sum()
    }

    /// One row per verdict: `test_id,source_product,class,scenario,rules`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["test_id", "source_product", "class", "scenario", "rules"])
            .expect("in-memory write");
        for c in &self.classifications {
            for v in &c.verdicts {
                let rules: Vec<String> = v.rules.iter().map(|r| format!("{r:?}")).collect();
                w.write_record([
                    v.test_id.as_str(),
                    &v.product_id,
                    v.class.as_str(),
                    &v.scenario,
                    &rules.join(" "),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_html(&self) -> String {
        let e = |s: &str| html_escape::encode_text(s).into_owned();
        let mut h = String::new();
        let _ = writeln!(
            h,
            "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Impact report for {}</title>\n<style>\n\
             body {{ font-family: sans-serif; }}\ntable {{ border-collapse: collapse; }}\n\
             td, th {{ border: 1px solid #999; padding: 2px 6px; }}\n\
             .added {{ color: #060; background: #dfd; }}\n.removed {{ color: #900; background: #fdd; text-decoration: line-through; }}\n\
             .reordered {{ color: #036; background: #ddf; }}\n</style></head><body>",
            e(&self.product)
        );
        let _ = writeln!(h, "<h1>Impact report for {}</h1>", e(&self.product));
        let _ = writeln!(
            h,
            "<p class=\"legend\">Legend: <span class=\"added\">added step</span> \
             <span class=\"removed\">removed step</span> <span class=\"reordered\">reordered step</span></p>"
        );
        for c in &self.classifications {
            let _ = writeln!(
                h,
                "<h2>Tests of {}</h2>\n<p>{} obsolete, {} retestable, {} reusable</p>\n\
                 <table><tr><th>test</th><th>class</th><th>rules</th><th>scenario</th></tr>",
                e(&c.previous),
                c.count(TestClass::Obsolete),
                c.count(TestClass::Retestable),
                c.count(TestClass::Reusable)
            );
            for v in &c.verdicts {
                let rules: Vec<String> = v.rules.iter().map(|r| format!("{r:?}")).collect();
                let _ = writeln!(
                    h,
                    "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
                    e(&v.test_id),
                    v.class.as_str(),
                    rules.join(" "),
                    e(&v.scenario)
                );
            }
            let _ = writeln!(h, "</table>");
        }
        let _ = writeln!(h, "<h2>Test selection</h2>\n<table><tr><th>scenario</th><th>take from</th><th>candidates</th></tr>");
        for s in &self.selections {
            let take = match &s.choice {
                Choice::Selected { product_id, tests, .. } => format!("{} ({})", e(product_id), e(&tests.join(", "))),
                Choice::Manual => "engineer's choice".to_string(),
            };
            let cands: Vec<String> = s
                .candidates
                .iter()
                .map(|c| format!("{} {}", e(&c.product_id), c.class.as_str()))
                .collect();
            let _ = writeln!(
                h,
                "<tr><td>{}</td><td>{}</td><td>{}</td></tr>",
                e(&s.scenario),
                take,
                cands.join("; ")
            );
        }
        let _ = writeln!(h, "</table>\n<h2>New scenarios</h2>");
        for f in &self.new_scenarios {
            let _ = writeln!(h, "<h3>{}</h3>", e(&f.scenario.id));
            for src in &f.sources {
                let _ = writeln!(
                    h,
                    "<p>From {} of {} (tests {}):</p>\n<ol>",
                    e(&src.old_scenario),
                    e(&src.product_id),
                    e(&src.tests.join(", "))
                );
                for ed in &src.guidance.edits {
                    let class = match ed.op {
                        EditOp::Add => "added",
                        EditOp::Remove => "removed",
                        EditOp::Reorder => "reordered",
                    };
                    let label = if ed.step.text.is_empty() { &ed.step.key } else { &ed.step.text };
                    let _ = writeln!(h, "<li class=\"{class}\">{}</li>", e(label));
                }
                let _ = writeln!(h, "</ol>");
            }
        }
        h.push_str("</body></html>\n");
        h
    }

    /// Writes `impact.<format>` under `dir` and returns its path.
    pub fn emit(&self, dir: &Path, format: Format) -> Result<PathBuf, ReportError> {
        let (name, body) = match format {
            Format::Json => ("impact.json", self.to_json()),
            Format::Csv => ("impact.csv", self.to_csv()),
            Format::Html => ("impact.html", self.to_html()),
        };
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ReportError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
        Ok(path)
    }
}

/// Merges the classifications of one new product against several previous
/// products.
pub fn aggregate(
    classifications: Vec<Classification>,
    created_on: &BTreeMap<String, NaiveDate>,
) -> Result<ImpactReport, ReportError> {
    let first = classifications.first().ok_or(ReportError::EmptyInput)?;
    let product = first.product.clone();
    if let Some(c) = classifications.iter().find(|c| c.product != product) {
        return Err(ReportError::MixedProducts(product, c.product.clone()));
    }
    let mut previous = Vec::new();
    for c in &classifications {
        let date = *created_on
            .get(&c.previous)
            .ok_or_else(|| ReportError::MissingDate(c.previous.clone()))?;
        previous.push(PreviousProduct {
            id: c.previous.clone(),
            created_on: date,
        });
    }
    let recency: BTreeMap<&str, (NaiveDate, std::cmp::Reverse<&str>)> = previous
        .iter()
        .map(|p| (p.id.as_str(), (p.created_on, std::cmp::Reverse(p.id.as_str()))))
        .collect();

    // scenarios no previous product exercised
    let mut sets = classifications
        .iter()
        .map(|c| c.new_scenarios.iter().map(|f| f.scenario.id.clone()).collect::<BTreeSet<_>>());
    let mut common = sets.next().unwrap_or_default();
    for s in sets {
        common = common.intersection(&s).cloned().collect();
    }
    let mut new_scenarios: Vec<NewScenarioFinding> = Vec::new();
    for c in &classifications {
        for f in c.new_scenarios.iter().filter(|f| common.contains(&f.scenario.id)) {
            match new_scenarios.iter_mut().find(|g| g.scenario.id == f.scenario.id) {
                Some(g) => g.sources.extend(f.sources.iter().cloned()),
                None => new_scenarios.push(f.clone()),
            }
        }
    }
    for f in &mut new_scenarios {
        f.sources = filter_sources(std::mem::take(&mut f.sources));
    }

    // tests still exercising a scenario of the new product
    let mut by_scenario: BTreeMap<&str, Vec<Candidate>> = BTreeMap::new();
    for c in &classifications {
        for v in &c.verdicts {
            let Some(s) = &v.new_scenario else { continue };
            let list = by_scenario.entry(s.as_str()).or_default();
            match list.iter_mut().find(|x| x.product_id == v.product_id && x.class == v.class) {
                Some(x) => x.tests.push(v.test_id.clone()),
                None => list.push(Candidate {
                    product_id: v.product_id.clone(),
                    class: v.class,
                    tests: vec![v.test_id.clone()],
                }),
            }
        }
    }
    let selections = by_scenario
        .into_iter()
        .map(|(scenario, candidates)| {
            let classes: BTreeSet<TestClass> = candidates.iter().map(|c| c.class).collect();
            let choice = if classes.len() == 1 {
                let best = candidates
                    .iter()
                    .max_by_key(|c| recency[c.product_id.as_str()])
                    .expect("non-empty");
                Choice::Selected {
                    product_id: best.product_id.clone(),
                    class: best.class,
                    tests: best.tests.clone(),
                }
            } else {
                Choice::Manual
            };
            Selection {
                scenario: scenario.to_string(),
                choice,
                candidates,
            }
        })
        .collect();

    Ok(ImpactReport {
        product,
        previous,
        tie_break: "most recent created_on; equal dates go to the smallest product id".into(),
        classifications,
        selections,
        new_scenarios,
    })
}
