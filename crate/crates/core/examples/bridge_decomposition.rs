//! Split one bridge's loss variance into a baseline part and the part due to
//! not knowing its exposure class.
//!
//! `cargo run --example bridge_decomposition`

use exposure_uq::decomposition::{decompose_bridge, RealizationLedger};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

fn main() -> exposure_uq::Result<()> {
    // Two candidate classes: a fragile one (30%) and a sturdy one (70%).
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fragile = LogNormal::new(12.5f64, 0.6).unwrap();
    let sturdy = LogNormal::new(11.5f64, 0.6).unwrap();
    let r = 20_000;
    let (mut classes, mut losses) = (Vec::with_capacity(r), Vec::with_capacity(r));
    for _ in 0..r {
        let c = (rng.random::<f64>() < 0.3) as u32;
        classes.push(c);
        losses.push(if c == 1 {
            fragile.sample(&mut rng)
        } else {
            sturdy.sample(&mut rng)
        });
    }
    let ledger = RealizationLedger::new(
        vec!["B001".into()],
        vec![vec!["bent_type=MCB".into(), "bent_type=SCB".into()]],
        vec![classes],
        vec![losses],
    )?;
    let d = decompose_bridge(&ledger, "B001")?;
    println!("mean loss        {:>14.0}", d.mean);
    println!(
        "baseline var     {:>14.4e}  (CV {:.3})",
        d.baseline_var,
        d.cv_baseline()
    );
    println!(
        "exposure var     {:>14.4e}  (CV {:.3})",
        d.exposure_var,
        d.cv_exposure()
    );
    println!("total var        {:>14.4e}  (CV {:.3})", d.total_var, d.cv_total());
    for s in &d.class_stats {
        println!(
            "  {:<16} p {:.3}  mean {:>10.0}  var {:.3e}",
            s.class, s.probability, s.mean, s.variance
        );
    }
    Ok(())
}
