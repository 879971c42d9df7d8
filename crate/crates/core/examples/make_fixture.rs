//! Writes the synthetic desk-scale fixture.
//!
//! ```text
//! cargo run --example make_fixture -- [DIR]
//! ```
//!
//! `DIR` defaults to `crates/core/fixtures/desk`.

use std::path::PathBuf;

use casesim::fixture::{generate, FixtureSpec};

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk"));
    let fixture = generate(&FixtureSpec::default());
    fixture.write(&dir)?;
    let labeled = fixture.cases.iter().filter(|c| c.labeled).count();
    println!(
        "wrote {} documents ({} eligible, {labeled} labeled) and {} labeled pairs to {}",
        fixture.documents.len(),
        fixture.cases.len(),
        fixture.labels.len(),
        dir.display()
    );
    println!("over the gpt-4 budget: {}", fixture.too_long_case);
    println!("no gpt-3.5 output:     {}", fixture.silent_case);
    Ok(())
}
