//! Builds the scenario graphs of a configured product and lists every
//! scenario of one use case.
//!
//!     cargo run --example enumerate_scenarios -- ["Recognize Gesture"]

use std::path::Path;

use plucase::model::{load_decisions, PLModel};
use plucase::scenario::ScenarioModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let use_case = std::env::args().nth(1).unwrap_or_else(|| "Recognize Gesture".into());
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sto_mini");
    let model = PLModel::load(&dir.join("pl.rucm"), &dir.join("diagram.json"))?;
    let ps = model.configure(&load_decisions(&dir.join("decisions.P2.json"))?)?;
    let scenarios = ScenarioModel::build(&ps.spec.document)?.enumerate(&use_case)?;
    for s in &scenarios {
        println!("{} (size {}, variability {})", s.id, s.size, s.variability);
        for n in &s.nodes {
            let branch = n.branch.map(|b| format!(" [{b}]")).unwrap_or_default();
            println!("    {:<14} {}{branch}", format!("{:?}", n.kind), n.text);
        }
    }
    Ok(())
}
