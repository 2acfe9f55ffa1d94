//! One-way sensitivity: rerun the fixture with all but one source of
//! uncertainty frozen and compare the spread of the regional loss.
//!
//! `cargo run --example sensitivity`

use std::path::Path;

use exposure_uq::analysis::{sensitivity_table, SensitivitySource};
use exposure_uq::pipeline::{load_inputs, RunConfig};
use exposure_uq::simulation::{PortfolioModel, SimulationSettings};

fn main() -> exposure_uq::Result<()> {
    let config = RunConfig::from_file(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/five_bridge/config.toml"))?;
    let inputs = load_inputs(&config)?;
    let model = PortfolioModel::imputed(&inputs)?;
    let runs = sensitivity_table(&model, &SimulationSettings::new(40, 50, 8), &SensitivitySource::ONE_WAY)?;
    println!(
        "{:<9} {:>12} {:>12} {:>12} {:>12} {:>7}",
        "source", "mean", "q05", "q50", "q95", "share"
    );
    for r in &runs {
        println!(
            "{:<9} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>7}",
            r.source.name(),
            r.mean,
            r.quantiles[0],
            r.quantiles[2],
            r.quantiles[4],
            r.share_of_all.map(|s| format!("{s:.3}")).unwrap_or_else(|| "-".into())
        );
    }
    Ok(())
}
