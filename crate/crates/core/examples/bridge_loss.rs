//! Expected loss of one fixture bridge across intensity levels, split into
//! replacement and per-component repair.
//!
//! `cargo run --example bridge_loss`

use std::path::Path;

use exposure_uq::loss::expected_loss;
use exposure_uq::pipeline::{load_inputs, RunConfig};

fn main() -> exposure_uq::Result<()> {
    let config = RunConfig::from_file(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/five_bridge/config.toml"))?;
    let inputs = load_inputs(&config)?;
    let (_, asset) = inputs.inventory.find("B05").expect("fixture bridge");
    let label = asset
        .known_attributes
        .iter()
        .filter(|(k, _)| inputs.class_attributes.contains(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    println!(
        "{} replacement median {:.0}",
        asset.asset_id,
        inputs.loss.replacement_median(asset)?
    );
    for im in [0.1, 0.3, 0.6, 1.0, 1.5] {
        let l = expected_loss(asset, &label, im, &inputs.loss, &inputs.fragility, &inputs.rules)?;
        let parts: Vec<String> = l.per_component.iter().map(|(c, v)| format!("{c} {v:.0}")).collect();
        println!(
            "IM {im:.1} g: total {:>9.0}  replacement {:>9.0}  repair [{}]",
            l.total,
            l.replacement,
            parts.join(", ")
        );
    }
    Ok(())
}
