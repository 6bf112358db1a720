//! The catalog of worked examples: ground truths, declared diagnostics and
//! the implication audit.

use opshift::zoo::{implication_violations, zoo_diagnose, zoo_list, Budget, Property};

fn main() -> opshift::error::Result<()> {
    let budget = match std::env::args().nth(1) {
        Some(b) => Budget::Max(b.parse().expect("budget is an integer")),
        None => Budget::Default,
    };
    for e in zoo_list() {
        println!("{} - {}", e.id, e.description);
        for t in &e.truths {
            let flags: Vec<String> =
                Property::ALL.iter().map(|p| format!("{:?}={}", p, t.get(*p).as_str())).collect();
            let audit = implication_violations(t);
            println!("  {:<8} {}  violations: {}", t.side.as_str(), flags.join(" "), audit.len());
        }
        let r = zoo_diagnose(e.id, budget)?;
        for row in &r.rows {
            println!(
                "  {:<34} expected {:<13} got {:<13}{}",
                row.name,
                row.expected.as_str(),
                row.verdict.state.as_str(),
                if row.skipped { " (skipped)" } else { "" }
            );
        }
    }
    Ok(())
}
