//! Matches the decisions of two STO-mini products and prints what changed.
//!
//!     cargo run --example diff_decisions

use std::path::Path;

use plucase::decision::diff;
use plucase::model::load_decisions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sto_mini");
    let old = load_decisions(&dir.join("decisions.P1.json"))?;
    let new = load_decisions(&dir.join("decisions.P2.json"))?;
    let dc = diff(&old, &new)?;
    println!(
        "{} -> {}: {} added, {} deleted, {} updated",
        old.product_id,
        new.product_id,
        dc.added.len(),
        dc.deleted.len(),
        dc.updated.len()
    );
    for u in &dc.updated {
        println!("  {:?}: {:?}", u.kind, u.key);
    }
    println!("{}", dc.to_json());
    Ok(())
}
