//! Fit a softmax temperature on labelled validation scores, then turn raw
//! classifier scores into a calibrated distribution.
//!
//! `cargo run --example calibrate_scores`

use exposure_uq::imputation::{fit_temperature, negative_log_likelihood, softmax, ScoreVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> exposure_uq::Result<()> {
    // Overconfident classifier: logits are twice what the labels support.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let validation: Vec<(ScoreVector, usize)> = (0..2000)
        .map(|_| {
            let logits: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = softmax(&ScoreVector::new("bent_type", logits.clone()), 1.0)
                .unwrap()
                .probs;
            let u: f64 = rng.random();
            let label = if u < p[0] {
                0
            } else if u < p[0] + p[1] {
                1
            } else {
                2
            };
            (
                ScoreVector::new("bent_type", logits.iter().map(|z| 2.0 * z).collect()),
                label,
            )
        })
        .collect();

    let fit = fit_temperature(&validation)?;
    println!("fitted temperature: {:.3}", fit.temperature);
    println!(
        "NLL at T=1: {:.1}, at fitted T: {:.1}",
        negative_log_likelihood(&validation, 1.0),
        fit.nll
    );
    if !fit.diagnostics.is_empty() {
        println!("diagnostics: {:?}", fit.diagnostics);
    }

    let scores = ScoreVector::new("bent_type", vec![2.4, 0.3, -1.0]);
    for t in [1.0, fit.temperature] {
        let d = softmax(&scores, t)?;
        println!(
            "T = {t:.3}: {:?}",
            d.probs.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()
        );
    }
    Ok(())
}
