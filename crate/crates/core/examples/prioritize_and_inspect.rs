//! Rank bridges by their exposure-variance contribution, then rerun with the
//! top-ranked ones inspected (class known) to see how much uncertainty
//! inspection removes.
//!
//! `cargo run --example prioritize_and_inspect`

use std::path::Path;

use exposure_uq::analysis::prioritize;
use exposure_uq::decomposition::{decompose_all, decompose_regional, RegionalRoute};
use exposure_uq::pipeline::{load_inputs, RunConfig};
use exposure_uq::simulation::{simulate, what_if_inspect, PortfolioModel, SimulationSettings};

fn main() -> exposure_uq::Result<()> {
    let config = RunConfig::from_file(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/five_bridge/config.toml"))?;
    let inputs = load_inputs(&config)?;
    let model = PortfolioModel::imputed(&inputs)?;
    let settings = SimulationSettings::new(50, 100, 17);

    let before = simulate(&model, &settings)?.ledger;
    let ranking = prioritize(&decompose_all(&before)?)?;
    for r in &ranking.ranked {
        println!(
            "{:>2}  {}  {:.3e}  cumulative {:.3}",
            r.rank, r.asset_id, r.exposure_contribution, r.cumulative_fraction
        );
    }
    let selection = ranking.selection(0.4)?;
    println!("inspecting {selection:?}");

    let inspected = what_if_inspect(
        &inputs.inventory,
        &model.distributions(),
        &selection,
        &inputs.class_attributes,
    )?;
    let after = simulate(&PortfolioModel::new(&inputs, inspected)?, &settings)?.ledger;
    let b = decompose_regional(&before, RegionalRoute::Auto)?.decomposition;
    let a = decompose_regional(&after, RegionalRoute::Auto)?.decomposition;
    println!("exposure CV {:.4} -> {:.4}", b.cv_exposure(), a.cv_exposure());
    println!("total CV    {:.4} -> {:.4}", b.cv_total(), a.cv_total());
    Ok(())
}
