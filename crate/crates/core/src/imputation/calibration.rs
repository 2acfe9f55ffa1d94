//! Softmax with temperature scaling, and the scalar temperature fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower and upper ends of the temperature search interval.
pub const T_MIN: f64 = 0.05;
pub const T_MAX: f64 = 20.0;

const GRID_POINTS: usize = 200;
const SMALL_SAMPLE: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub attribute: String,
    pub scores: Vec<f64>,
}

impl ScoreVector {
    pub fn new(attribute: impl Into<String>, scores: Vec<f64>) -> Self {
        Self {
            attribute: attribute.into(),
            scores,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedDistribution {
    pub attribute: String,
    pub probs: Vec<f64>,
    pub temperature: f64,
}

impl CalibratedDistribution {
    /// Wrap an externally produced probability vector. Small rounding in the
    /// input (sum within 1e-3 of one) is renormalised away.
    pub fn from_probs(attribute: impl Into<String>, probs: Vec<f64>) -> Result<Self> {
        let attribute = attribute.into();
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(format!(
                "`{attribute}`: probabilities must be finite and non-negative"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-3 {
            return Err(Error::invalid(format!(
                "`{attribute}`: probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            attribute,
            probs: probs.into_iter().map(|p| p / total).collect(),
            temperature: 1.0,
        })
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

/// First index of the maximum.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn check_scores(scores: &[f64], attribute: &str) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::invalid(format!("`{attribute}`: empty score vector")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric(format!("`{attribute}`: non-finite score")));
    }
    Ok(())
}

/// `log Σ exp(scores / T)`, shifted by the maximum.
fn log_partition(scores: &[f64], temperature: f64) -> f64 {
    let max = scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s)) / temperature;
    let sum: f64 = scores.iter().map(|&s| (s / temperature - max).exp()).sum();
    max + sum.ln()
}

pub fn softmax(scores: &ScoreVector, temperature: f64) -> Result<CalibratedDistribution> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    check_scores(&scores.scores, &scores.attribute)?;
    let max = scores.scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s));
    let weights: Vec<f64> = scores.scores.iter().map(|&s| ((s - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(CalibratedDistribution {
        attribute: scores.attribute.clone(),
        probs: weights.into_iter().map(|w| w / total).collect(),
        temperature,
    })
}

/// Negative log-likelihood of the labels under temperature-scaled softmax.
pub fn negative_log_likelihood(validation: &[(ScoreVector, usize)], temperature: f64) -> f64 {
    validation
        .iter()
        .map(|(sv, label)| log_partition(&sv.scores, temperature) - sv.scores[*label] / temperature)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureDiagnostic {
    /// Scores are constant within every vector, so the likelihood does not depend on T.
    Degenerate,
    SmallSample(usize),
    AtBound(f64),
    GridFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub temperature: f64,
    pub nll: f64,
    pub diagnostics: Vec<TemperatureDiagnostic>,
}

/// Minimise the validation NLL over `T ∈ [T_MIN, T_MAX]`.
///
/// Golden-section search on `ln T`; if the result is not at least as good as
/// both bounds and `T = 1` (the objective was not unimodal on the interval),
/// a 200-point log-spaced grid seeds a second, local golden-section pass.
pub fn fit_temperature(validation: &[(ScoreVector, usize)]) -> Result<TemperatureFit> {
    if validation.is_empty() {
        return Err(Error::invalid("temperature fit needs at least one validation sample"));
    }
    for (sv, label) in validation {
        check_scores(&sv.scores, &sv.attribute)?;
        if *label >= sv.scores.len() {
            return Err(Error::invalid(format!(
                "`{}`: label {label} outside 0..{}",
                sv.attribute,
                sv.scores.len()
            )));
        }
    }
    let mut diagnostics = Vec::new();
    if validation.len() < SMALL_SAMPLE {
        diagnostics.push(TemperatureDiagnostic::SmallSample(validation.len()));
    }
    let degenerate = validation
        .iter()
        .all(|(sv, _)| sv.scores.iter().all(|&s| s == sv.scores[0]));
    if degenerate {
        diagnostics.push(TemperatureDiagnostic::Degenerate);
        return Ok(TemperatureFit {
            temperature: 1.0,
            nll: negative_log_likelihood(validation, 1.0),
            diagnostics,
        });
    }

    let objective = |u: f64| negative_log_likelihood(validation, u.exp());
    let (lo, hi) = (T_MIN.ln(), T_MAX.ln());
    let mut best_u = golden_section(&objective, lo, hi);
    let mut best = objective(best_u);

    let references = [lo, hi, 0.0];
    if references.iter().any(|&u| objective(u) < best) {
        diagnostics.push(TemperatureDiagnostic::GridFallback);
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let (gi, _) = (0..GRID_POINTS)
            .map(|i| (i, objective(lo + step * i as f64)))
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        let a = lo + step * gi.saturating_sub(1) as f64;
        let b = (lo + step * (gi + 1) as f64).min(hi);
        best_u = golden_section(&objective, a, b);
        best = objective(best_u);
    }
    // Endpoints are never evaluated by the bracketing itself.
    for u in references {
        let v = objective(u);
        if v < best || (v == best && u != 0.0) {
            best = v;
            best_u = u;
        }
    }

    let temperature = if best_u == lo {
        T_MIN
    } else if best_u == hi {
        T_MAX
    } else {
        best_u.exp()
    };
    if temperature == T_MIN || temperature == T_MAX {
        diagnostics.push(TemperatureDiagnostic::AtBound(temperature));
    }
    Ok(TemperatureFit {
        temperature,
        nll: best,
        diagnostics,
    })
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > 1e-9 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
