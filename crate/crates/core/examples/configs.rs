//! Operator configs: export a catalog operator, edit the JSON, reload.

use opshift::config::{load_operator, operator_to_json, parse_vector_spec};
use opshift::scalar::Scalar;
use opshift::zoo::{zoo_entry, Side};

fn main() -> opshift::error::Result<()> {
    let built = zoo_entry("bilateral_chaos_gap")?.build()?;
    let mut cfg = operator_to_json(built.side(Side::Base)?)?;
    println!("{}", serde_json::to_string_pretty(&cfg).unwrap());

    // swap the formula tail for constant weight 3 below index 0
    cfg["family"]["weights"]["-1"] = "3".into();
    let op = load_operator(&cfg.to_string())?;
    let x = parse_vector_spec(op.space(), "delta:0")?;
    let norms: Vec<String> = op.orbit_norms(&x, 4)?.iter().map(Scalar::to_decimal_string).collect();
    println!("edited: {}", norms.join(", "));

    match load_operator(r#"{"index_set": "N", "norm": {"kind": "lp", "p": "1"}, "family": {"kind": "nope"}}"#) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
