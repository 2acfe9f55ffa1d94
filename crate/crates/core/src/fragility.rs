//! Lognormal component fragility curves, in-state probabilities, class
//! mixtures and their exposure-driven bias and spread.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imputation::{class_key, ClassLabel, ExposureClassDistribution};
use crate::stats::normal_cdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragilityCurve {
    pub component: String,
    /// Attribute values this curve applies to. A curve matches an asset
    /// class when every entry agrees; the most specific match wins.
    #[serde(rename = "class")]
    pub class_ref: ClassLabel,
    /// Median IM (g) per damage state threshold, state 1 first.
    pub medians: Vec<f64>,
    /// Logarithmic standard deviation per threshold.
    pub dispersions: Vec<f64>,
}

impl FragilityCurve {
    pub fn new(component: &str, class_ref: ClassLabel, medians: Vec<f64>, dispersions: Vec<f64>) -> Result<Self> {
        let c = Self {
            component: component.to_string(),
            class_ref,
            medians,
            dispersions,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = || format!("fragility `{}` [{}]", self.component, class_key(&self.class_ref));
        if self.medians.is_empty() || self.medians.len() != self.dispersions.len() {
            return Err(Error::invalid(format!(
                "{}: need matching non-empty medians and dispersions",
                ctx()
            )));
        }
        if self
            .medians
            .iter()
            .chain(&self.dispersions)
            .any(|v| !(*v > 0.0 && v.is_finite()))
        {
            return Err(Error::invalid(format!(
                "{}: medians and dispersions must be positive",
                ctx()
            )));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.medians.len()
    }
}

fn check_im(im: f64) -> Result<()> {
    if im > 0.0 && im.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("intensity measure must be positive, got {im}")))
    }
}

/// `P(DS ≥ ds_k | IM = im)` for `k` in `1..=N_DS`.
pub fn exceedance(curve: &FragilityCurve, k: usize, im: f64) -> Result<f64> {
    check_im(im)?;
    if k == 0 || k > curve.n_states() {
        return Err(Error::invalid(format!(
            "damage state {k} outside 1..={}",
            curve.n_states()
        )));
    }
    Ok(exceedance_unchecked(curve, k, im))
}

fn exceedance_unchecked(curve: &FragilityCurve, k: usize, im: f64) -> f64 {
    normal_cdf((im.ln() - curve.medians[k - 1].ln()) / curve.dispersions[k - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DamageStateProbabilities {
    pub component: String,
    pub im: f64,
    /// `p_k` for `k` in `0..=N_DS`.
    pub in_state: Vec<f64>,
    /// Set when crossing curves produced negative differences that were
    /// clamped to zero before renormalising.
    #[serde(default)]
    pub clamped: bool,
}

impl DamageStateProbabilities {
    pub fn most_probable(&self) -> usize {
        most_probable_state(&self.in_state)
    }
}

/// Write `p_0..=p_N` into `out`; returns whether clamping was needed.
pub(crate) fn in_state_into(curve: &FragilityCurve, im: f64, out: &mut Vec<f64>) -> bool {
    let n = curve.n_states();
    out.clear();
    let mut prev = 1.0;
    for k in 1..=n {
        let exc = exceedance_unchecked(curve, k, im);
        out.push(prev - exc);
        prev = exc;
    }
    out.push(prev);
    if out.iter().any(|&p| p < 0.0) {
        for p in out.iter_mut() {
            *p = p.max(0.0);
        }
        let total: f64 = out.iter().sum();
        for p in out.iter_mut() {
            *p /= total;
        }
        true
    } else {
        false
    }
}

pub fn in_state(curve: &FragilityCurve, im: f64) -> Result<DamageStateProbabilities> {
    check_im(im)?;
    let mut p = Vec::with_capacity(curve.n_states() + 1);
    let clamped = in_state_into(curve, im, &mut p);
    Ok(DamageStateProbabilities {
        component: curve.component.clone(),
        im,
        in_state: p,
        clamped,
    })
}

fn check_aligned(per_class: &[DamageStateProbabilities], pi: &ExposureClassDistribution) -> Result<usize> {
    if per_class.len() != pi.len() || per_class.is_empty() {
        return Err(Error::invalid(format!(
            "{} class damage vectors for {} exposure classes",
            per_class.len(),
            pi.len()
        )));
    }
    let states = per_class[0].in_state.len();
    if per_class.iter().any(|d| d.in_state.len() != states) {
        return Err(Error::invalid("class damage vectors have different state counts"));
    }
    Ok(states)
}

/// `p̄_k = Σ_i π_i p_{k,i}`.
pub fn mixture_in_state(
    per_class: &[DamageStateProbabilities],
    pi: &ExposureClassDistribution,
) -> Result<DamageStateProbabilities> {
    let states = check_aligned(per_class, pi)?;
    let mut mix = vec![0.0; states];
    for (d, w) in per_class.iter().zip(pi.probabilities()) {
        for (m, p) in mix.iter_mut().zip(&d.in_state) {
            *m += w * p;
        }
    }
    Ok(DamageStateProbabilities {
        component: per_class[0].component.clone(),
        im: per_class[0].im,
        in_state: mix,
        clamped: per_class.iter().any(|d| d.clamped),
    })
}

/// Signed bias `p̄_k − p_{k,true}` per state.
pub fn damage_bias(mixture: &DamageStateProbabilities, truth: &DamageStateProbabilities) -> Result<Vec<f64>> {
    if mixture.in_state.len() != truth.in_state.len() {
        return Err(Error::invalid("mixture and truth have different state counts"));
    }
    Ok(mixture
        .in_state
        .iter()
        .zip(&truth.in_state)
        .map(|(m, t)| m - t)
        .collect())
}

/// Spread of the in-state probability across classes,
/// `sqrt(Σ_i π_i (p_{k,i} − p̄_k)²)`.
pub fn exposure_sd(per_class: &[DamageStateProbabilities], pi: &ExposureClassDistribution) -> Result<Vec<f64>> {
    let mix = mixture_in_state(per_class, pi)?;
    let mut var = vec![0.0; mix.in_state.len()];
    for (d, w) in per_class.iter().zip(pi.probabilities()) {
        for ((v, p), m) in var.iter_mut().zip(&d.in_state).zip(&mix.in_state) {
            *v += w * (p - m) * (p - m);
        }
    }
    Ok(var.into_iter().map(f64::sqrt).collect())
}

/// Argmax with lowest-state tie-break.
pub fn most_probable_state(in_state: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in in_state.iter().enumerate() {
        if p > in_state[best] {
            best = k;
        }
    }
    best
}

/// Categorical draw over `probs` using one uniform.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap above the last partial sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

pub fn sample_damage<R: Rng + ?Sized>(curve: &FragilityCurve, im: f64, rng: &mut R) -> Result<usize> {
    let d = in_state(curve, im)?;
    Ok(sample_categorical(&d.in_state, rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseTrigger {
    pub component: String,
    /// Damage state at or above which the bridge is irreparable;
    /// defaults to the component's terminal state.
    #[serde(default)]
    pub state: Option<usize>,
}

/// Collapse occurs when any present trigger component reaches its trigger
/// state. Triggers are treated as independent mechanisms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollapseRule {
    pub triggers: Vec<CollapseTrigger>,
}

impl CollapseRule {
    pub fn trigger_state(&self, trigger: &CollapseTrigger, curve: &FragilityCurve) -> Result<usize> {
        let k = trigger.state.unwrap_or(curve.n_states());
        if k == 0 || k > curve.n_states() {
            return Err(Error::invalid(format!(
                "collapse trigger `{}` state {k} outside 1..={}",
                trigger.component,
                curve.n_states()
            )));
        }
        Ok(k)
    }

    /// `p_c = 1 − Π (1 − P(DS_t ≥ ds_t))` over triggers with a curve.
    pub fn probability<'a>(
        &self,
        im: f64,
        mut curve_of: impl FnMut(&str) -> Option<&'a FragilityCurve>,
    ) -> Result<f64> {
        check_im(im)?;
        let mut survive = 1.0;
        for t in &self.triggers {
            if let Some(curve) = curve_of(&t.component) {
                let k = self.trigger_state(t, curve)?;
                survive *= 1.0 - exceedance_unchecked(curve, k, im);
            }
        }
        Ok(1.0 - survive)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FragilityDatabase {
    pub curves: Vec<FragilityCurve>,
    #[serde(default)]
    pub collapse: CollapseRule,
    #[serde(skip)]
    by_component: HashMap<String, Vec<usize>>,
}

impl FragilityDatabase {
    pub fn new(curves: Vec<FragilityCurve>, collapse: CollapseRule) -> Result<Self> {
        let mut by_component: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, c) in curves.iter().enumerate() {
            c.validate()?;
            by_component.entry(c.component.clone()).or_default().push(i);
        }
        for (component, idx) in &by_component {
            for (a, &i) in idx.iter().enumerate() {
                for &j in &idx[a + 1..] {
                    if curves[i].class_ref == curves[j].class_ref {
                        return Err(Error::invalid(format!(
                            "two fragility curves for `{component}` [{}]",
                            class_key(&curves[i].class_ref)
                        )));
                    }
                }
            }
        }
        Ok(Self {
            curves,
            collapse,
            by_component,
        })
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: FragilityDatabase =
            serde_json::from_str(&text).map_err(|e| Error::invalid(format!("fragility {}: {e}", path.display())))?;
        Self::new(raw.curves, raw.collapse)
    }

    /// Most specific curve for `component` whose class selector agrees with
    /// `attributes`.
    pub fn resolve(&self, attributes: &ClassLabel, component: &str) -> Result<&FragilityCurve> {
        let missing = || {
            Error::invalid(format!(
                "no fragility curve for `{component}` under [{}]",
                class_key(attributes)
            ))
        };
        let candidates = self.by_component.get(component).ok_or_else(missing)?;
        let mut best: Option<&FragilityCurve> = None;
        let mut ambiguous = false;
        for &i in candidates {
            let c = &self.curves[i];
            if !c.class_ref.iter().all(|(k, v)| attributes.get(k) == Some(v)) {
                continue;
            }
            match best {
                Some(b) if b.class_ref.len() == c.class_ref.len() => ambiguous = true,
                Some(b) if b.class_ref.len() > c.class_ref.len() => {}
                _ => {
                    best = Some(c);
                    ambiguous = false;
                }
            }
        }
        if ambiguous {
            return Err(Error::invalid(format!(
                "ambiguous fragility curves for `{component}` under [{}]",
                class_key(attributes)
            )));
        }
        best.ok_or_else(missing)
    }

    pub fn components(&self) -> impl Iterator<Item = &String> {
        self.by_component.keys()
    }
}

/// Exceedance curves over an IM grid as `(im, state, probability)` points.
pub fn fragility_fan(curve: &FragilityCurve, ims: &[f64]) -> Vec<(f64, usize, f64)> {
    ims.iter()
        .filter(|&&im| im > 0.0)
        .flat_map(|&im| (1..=curve.n_states()).map(move |k| (im, k, exceedance_unchecked(curve, k, im))))
        .collect()
}
