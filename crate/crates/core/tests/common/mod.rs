//! Oracles shared by integration tests.
#![allow(dead_code)]

/// Standard normal CDF by Marsaglia's Taylor series,
/// `Φ(x) = 1/2 + φ(x) Σ x^(2n+1) / (2n+1)!!`, summed for `x ≥ 0` where every
/// term is positive. Absolute error is at the level of f64 rounding.
pub fn phi_series(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - phi_series(-x);
    }
    if x > 38.0 {
        return 1.0;
    }
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut n = 1.0;
    loop {
        n += 2.0;
        term *= x2 / n;
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    0.5 + sum * (-0.5 * x2 - 0.918_938_533_204_672_8).exp()
}

#[cfg(test)]
mod tests {
    #[test]
    fn series_reference_points() {
        // high-precision reference values
        assert!((super::phi_series(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((super::phi_series(1.3) - 0.903_199_515_414_389_8).abs() < 1e-15);
        assert_eq!(super::phi_series(0.0), 0.5);
    }
}
