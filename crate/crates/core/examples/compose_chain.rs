//! Compose per-attribute distributions into a joint exposure-class
//! distribution, pruning combinations an engineering rule forbids.
//!
//! `cargo run --example compose_chain`

use std::collections::BTreeMap;

use exposure_uq::imputation::{class_key, compose_chain, CalibratedDistribution, ChainConstraintSet, ChainStage};
use exposure_uq::inventory::AttributeSchema;

fn main() -> exposure_uq::Result<()> {
    let schema: AttributeSchema = serde_json::from_str(
        r#"{"attributes": [
            {"name": "bent_type", "kind": "categorical", "values": ["SCB", "MCB", "PWB"]},
            {"name": "n_col", "kind": "discrete_count", "values": ["1", "2", "3", "4"], "max": 8},
            {"name": "abutment_type", "kind": "categorical", "values": ["D", "S"]}
        ]}"#,
    )
    .expect("schema");
    let d = |attr: &str, p: &[f64]| CalibratedDistribution::from_probs(attr, p.to_vec());

    // Column count is predicted given the bent type.
    let mut table = BTreeMap::new();
    table.insert("SCB".to_string(), d("n_col", &[0.9, 0.1, 0.0, 0.0])?);
    table.insert("MCB".to_string(), d("n_col", &[0.05, 0.5, 0.35, 0.1])?);
    table.insert("PWB".to_string(), d("n_col", &[0.8, 0.2, 0.0, 0.0])?);
    let stages = vec![
        ChainStage::Marginal(d("bent_type", &[0.5, 0.35, 0.15])?),
        ChainStage::Conditional {
            attribute: "n_col".into(),
            upstream: "bent_type".into(),
            table,
        },
        ChainStage::Marginal(d("abutment_type", &[0.3, 0.7])?),
    ];
    let constraints: ChainConstraintSet = serde_json::from_str(
        r#"{"rules": [{"if": {"attribute": "bent_type", "in": ["SCB", "PWB"]},
                        "then": {"attribute": "n_col", "in": ["1"]}}]}"#,
    )
    .expect("constraints");

    let (dist, diag) = compose_chain("B001", &schema, &stages, &constraints)?;
    println!("{} classes, {:.3} of the mass pruned", dist.len(), diag.pruned_mass);
    let mut classes = dist.classes.clone();
    classes.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    for c in classes {
        println!("{:>6.4}  {}", c.probability, class_key(&c.label));
    }
    Ok(())
}
