//! Generates the product-specific diagram and use cases of one STO-mini
//! product and prints the specification.
//!
//!     cargo run --example configure_product -- [P1|P2]

use std::path::Path;

use plucase::model::{load_decisions, PLModel};
use plucase::rucm::serialize_specification;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let product = std::env::args().nth(1).unwrap_or_else(|| "P2".into());
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sto_mini");
    let model = PLModel::load(&dir.join("pl.rucm"), &dir.join("diagram.json"))?;
    let decisions = load_decisions(&dir.join(format!("decisions.{product}.json")))?;
    let c = model.configure(&decisions)?;
    println!("# use cases of {product}: {}", c.diagram.use_cases.join(", "));
    for w in &c.spec.warnings {
        println!("# warning: {w}");
    }
    print!("{}", serialize_specification(&c.spec.document));
    Ok(())
}
