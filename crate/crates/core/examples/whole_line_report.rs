//! Classifies every earlier product of a synthetic line against the last
//! one, merges the results and writes the impact report.
//!
//!     cargo run --example whole_line_report -- [out-dir]

use std::collections::BTreeMap;
use std::path::PathBuf;

use plucase::classifier::{classify_test_cases, Product, TestClass};
use plucase::decision::diff;
use plucase::report::{aggregate, Choice, Format};
use plucase::synthetic::{generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/whole-line".into()));
    let line = generate(&SyntheticConfig::default());
    let (new, earlier) = line.products.split_last().unwrap();
    let mut classifications = Vec::new();
    for p in earlier {
        classifications.push(classify_test_cases(
            Product { id: &p.decisions.product_id, doc: &p.spec },
            &p.suite,
            &BTreeMap::new(),
            Product { id: &new.decisions.product_id, doc: &new.spec },
            &diff(&p.decisions, &new.decisions)?,
        )?);
    }
    let dates = line.products.iter().map(|p| (p.decisions.product_id.clone(), p.decisions.created_on)).collect();
    let report = aggregate(classifications, &dates)?;

    for c in &report.classifications {
        println!("{} -> {}: {} new scenarios", c.previous, c.product, c.new_scenarios.len());
    }
    let manual = report.selections.iter().filter(|s| matches!(s.choice, Choice::Manual)).count();
    println!(
        "selected: {} reusable, {} retestable, {} obsolete; {manual} scenarios left to the engineer",
        report.selected(TestClass::Reusable),
        report.selected(TestClass::Retestable),
        report.selected(TestClass::Obsolete)
    );
    println!("new scenarios for the whole line: {}", report.new_scenarios.len());
    for format in [Format::Json, Format::Html] {
        println!("wrote {}", report.emit(&out, format)?.display());
    }
    Ok(())
}
