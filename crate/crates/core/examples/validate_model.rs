//! Loads the STO-mini product line, cross-checks the diagram against the
//! specification and validates both products' decisions.
//!
//!     cargo run --example validate_model

use std::path::Path;

use plucase::model::{load_decisions, PLModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sto_mini");
    let model = PLModel::load(&dir.join("pl.rucm"), &dir.join("diagram.json"))?;
    println!(
        "{} use cases, {} variation points",
        model.spec.use_cases.len(),
        model.diagram.variation_points.len()
    );
    for w in model.warnings() {
        println!("warning: {w}");
    }
    let findings = model.findings();
    println!("{} cross-check findings", findings.len());
    for f in findings {
        println!("  {f}");
    }
    for p in ["P1", "P2"] {
        let m = load_decisions(&dir.join(format!("decisions.{p}.json")))?;
        let violations = model.validate(&m);
        println!("{p}: {} decisions, {} violations", m.entries()?.len(), violations.len());
        for v in violations {
            println!("  {v}");
        }
    }
    Ok(())
}
