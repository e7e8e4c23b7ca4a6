//! Generates a seeded five-product line and writes it in the layout the
//! command line reads.
//!
//!     cargo run --example synthetic_line -- [out-dir] [seed]

use std::path::PathBuf;

use plucase::classifier::TestClass;
use plucase::synthetic::{generate, SyntheticConfig};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "target/synthetic-line".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let line = generate(&SyntheticConfig { seed, ..Default::default() });

    for (p, c) in line.products.iter().zip(std::iter::once(None).chain(line.classifications.iter().map(Some))) {
        let id = &p.decisions.product_id;
        let failing = line.history.failing_tests(id).len();
        match c {
            Some(c) => println!(
                "{id}: {} tests, {failing} failing; from {}: {} obsolete, {} retestable, {} reusable",
                p.suite.tests.len(),
                c.previous,
                c.count(TestClass::Obsolete),
                c.count(TestClass::Retestable),
                c.count(TestClass::Reusable)
            ),
            None => println!("{id}: {} tests, {failing} failing", p.suite.tests.len()),
        }
    }
    line.write_to(&dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}
