//! Classifier-chain composition into a joint exposure-class distribution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inventory::AttributeSchema;

use super::calibration::CalibratedDistribution;

/// Attribute name → category label for one exposure class.
pub type ClassLabel = BTreeMap<String, String>;

/// Canonical string form of a class label, e.g. `bent_type=MCB|n_col=2`.
pub fn class_key(label: &ClassLabel) -> String {
    let parts: Vec<String> = label.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.join("|")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureClass {
    pub label: ClassLabel,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureClassDistribution {
    pub asset_id: String,
    pub classes: Vec<ExposureClass>,
}

impl ExposureClassDistribution {
    pub fn one_hot(asset_id: impl Into<String>, label: ClassLabel) -> Self {
        Self {
            asset_id: asset_id.into(),
            classes: vec![ExposureClass {
                label,
                probability: 1.0,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.classes.iter().map(|c| c.probability)
    }

    /// Index of the most probable class; the earliest class wins ties.
    pub fn most_probable(&self) -> usize {
        let probs: Vec<f64> = self.probabilities().collect();
        super::calibration::argmax(&probs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::invalid(format!("`{}`: empty class distribution", self.asset_id)));
        }
        let total: f64 = self.probabilities().sum();
        if self.probabilities().any(|p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "`{}`: class probabilities must lie in [0,1] and sum to 1 (sum {total})",
                self.asset_id
            )));
        }
        let mut keys: Vec<String> = self.classes.iter().map(|c| class_key(&c.label)).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("`{}`: repeated class label", self.asset_id)));
        }
        Ok(())
    }
}

/// One stage of the chain: either an unconditional distribution or one
/// distribution per category of an upstream attribute.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainStage {
    Marginal(CalibratedDistribution),
    Conditional {
        attribute: String,
        upstream: String,
        table: BTreeMap<String, CalibratedDistribution>,
    },
}

impl ChainStage {
    pub fn attribute(&self) -> &str {
        match self {
            ChainStage::Marginal(d) => &d.attribute,
            ChainStage::Conditional { attribute, .. } => attribute,
        }
    }

    /// Point mass on one category of a known attribute.
    pub fn point_mass(schema: &AttributeSchema, attribute: &str, value: &str) -> Result<Self> {
        let spec = schema
            .get(attribute)
            .ok_or_else(|| Error::UnknownAttribute(attribute.to_string()))?;
        let idx = spec
            .index_of(value)
            .ok_or_else(|| Error::invalid(format!("value `{value}` not allowed for `{attribute}`")))?;
        let mut probs = vec![0.0; spec.values.len()];
        probs[idx] = 1.0;
        Ok(ChainStage::Marginal(CalibratedDistribution {
            attribute: attribute.to_string(),
            probs,
            temperature: 1.0,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeCondition {
    pub attribute: String,
    #[serde(rename = "in")]
    pub values: Vec<String>,
}

/// If the class takes one of `when.values` for `when.attribute`, it must take
/// one of `then.values` for `then.attribute`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRule {
    #[serde(rename = "if")]
    pub when: AttributeCondition,
    pub then: AttributeCondition,
}

impl ChainRule {
    pub fn allows(&self, label: &ClassLabel) -> bool {
        match (label.get(&self.when.attribute), label.get(&self.then.attribute)) {
            (Some(up), Some(down)) => !self.when.values.contains(up) || self.then.values.contains(down),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainConstraintSet {
    pub rules: Vec<ChainRule>,
}

impl ChainConstraintSet {
    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        for rule in &self.rules {
            for cond in [&rule.when, &rule.then] {
                for v in &cond.values {
                    schema.check_value(&cond.attribute, v)?;
                }
            }
        }
        Ok(())
    }

    pub fn allows(&self, label: &ClassLabel) -> bool {
        self.rules.iter().all(|r| r.allows(label))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// Probability mass removed by constraints before renormalisation.
    pub pruned_mass: f64,
    pub pruned_classes: usize,
}

/// Enumerate the joint categorical product of the chain, multiply the
/// chained probabilities, drop constraint-violating and zero-mass classes,
/// and renormalise.
pub fn compose_chain(
    asset_id: &str,
    schema: &AttributeSchema,
    stages: &[ChainStage],
    constraints: &ChainConstraintSet,
) -> Result<(ExposureClassDistribution, ChainDiagnostics)> {
    let mut seen = Vec::new();
    for stage in stages {
        let attr = stage.attribute();
        let spec = schema
            .get(attr)
            .ok_or_else(|| Error::UnknownAttribute(attr.to_string()))?;
        if seen.contains(&attr) {
            return Err(Error::invalid(format!(
                "attribute `{attr}` appears in two chain stages"
            )));
        }
        let check_len = |d: &CalibratedDistribution| {
            if d.probs.len() != spec.values.len() {
                Err(Error::invalid(format!(
                    "`{attr}`: {} probabilities for {} categories",
                    d.probs.len(),
                    spec.values.len()
                )))
            } else {
                Ok(())
            }
        };
        match stage {
            ChainStage::Marginal(d) => check_len(d)?,
            ChainStage::Conditional { upstream, table, .. } => {
                if !seen.contains(&upstream.as_str()) {
                    return Err(Error::invalid(format!(
                        "`{attr}` is conditioned on `{upstream}`, which is not an earlier stage"
                    )));
                }
                for (up_value, d) in table {
                    schema.check_value(upstream, up_value)?;
                    check_len(d)?;
                }
            }
        }
        seen.push(attr);
    }

    let mut partial: Vec<(ClassLabel, f64)> = vec![(ClassLabel::new(), 1.0)];
    for stage in stages {
        let attr = stage.attribute();
        let values = &schema.get(attr).expect("checked above").values;
        let mut next = Vec::with_capacity(partial.len() * values.len());
        for (label, p) in partial {
            let probs = match stage {
                ChainStage::Marginal(d) => &d.probs,
                ChainStage::Conditional { upstream, table, .. } => {
                    let up_value = &label[upstream];
                    &table
                        .get(up_value)
                        .ok_or_else(|| {
                            Error::invalid(format!(
                                "`{asset_id}`: no `{attr}` table for realizable `{upstream}={up_value}`"
                            ))
                        })?
                        .probs
                }
            };
            for (value, &q) in values.iter().zip(probs) {
                if q > 0.0 {
                    let mut l = label.clone();
                    l.insert(attr.to_string(), value.clone());
                    next.push((l, p * q));
                }
            }
        }
        partial = next;
    }

    let total: f64 = partial.iter().map(|(_, p)| p).sum();
    let mut diagnostics = ChainDiagnostics::default();
    let surviving: Vec<(ClassLabel, f64)> = partial
        .into_iter()
        .filter(|(label, p)| {
            let ok = constraints.allows(label);
            if !ok {
                diagnostics.pruned_mass += p / total;
                diagnostics.pruned_classes += 1;
            }
            ok
        })
        .collect();
    let kept: f64 = surviving.iter().map(|(_, p)| p).sum();
    if surviving.is_empty() || kept <= 0.0 {
        return Err(Error::invalid(format!(
            "`{asset_id}`: chain constraints remove every exposure class"
        )));
    }
    let classes = surviving
        .into_iter()
        .map(|(label, p)| ExposureClass {
            label,
            probability: p / kept,
        })
        .collect();
    Ok((
        ExposureClassDistribution {
            asset_id: asset_id.to_string(),
            classes,
        },
        diagnostics,
    ))
}
