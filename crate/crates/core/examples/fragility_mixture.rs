//! Damage-state probabilities for each candidate class, their mixture under
//! exposure uncertainty, and the bias against the true class.
//!
//! `cargo run --example fragility_mixture`

use exposure_uq::fragility::{damage_bias, exposure_sd, in_state, mixture_in_state, FragilityCurve};
use exposure_uq::imputation::{ClassLabel, ExposureClass, ExposureClassDistribution};

fn label(bent: &str) -> ClassLabel {
    [("bent_type".to_string(), bent.to_string())].into_iter().collect()
}

fn main() -> exposure_uq::Result<()> {
    let scb = FragilityCurve::new("column", label("SCB"), vec![0.35, 0.65, 0.95, 1.40], vec![0.6; 4])?;
    let mcb = FragilityCurve::new("column", label("MCB"), vec![0.45, 0.80, 1.20, 1.70], vec![0.6; 4])?;
    let pi = ExposureClassDistribution {
        asset_id: "B001".into(),
        classes: vec![
            ExposureClass {
                label: label("SCB"),
                probability: 0.7,
            },
            ExposureClass {
                label: label("MCB"),
                probability: 0.3,
            },
        ],
    };
    for im in [0.2, 0.5, 1.0] {
        let per_class = vec![in_state(&scb, im)?, in_state(&mcb, im)?];
        let mix = mixture_in_state(&per_class, &pi)?;
        let truth = &per_class[1];
        let fmt = |v: &[f64]| v.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" ");
        println!("IM {im:.1} g");
        println!("  mixture  {}", fmt(&mix.in_state));
        println!("  truth    {}  (MCB)", fmt(&truth.in_state));
        println!("  bias     {}", fmt(&damage_bias(&mix, truth)?));
        println!("  sd       {}", fmt(&exposure_sd(&per_class, &pi)?));
    }
    Ok(())
}
