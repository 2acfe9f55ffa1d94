//! Score/probability input file and per-asset class-distribution assembly.
//!
//! ```json
//! {
//!   "temperatures": { "bent_type": 1.4 },
//!   "validation": { "abutment_type": [ { "scores": [0.2, 1.3], "label": "S" } ] },
//!   "assets": {
//!     "B001": {
//!       "bent_type": { "scores": [0.1, 2.0, -1.0] },
//!       "abutment_type": { "probs": [0.3, 0.7] },
//!       "n_col": { "conditional_on": "bent_type",
//!                  "table": { "MCB": { "probs": [0.0, 0.1, 0.6, 0.3] },
//!                             "SCB": { "probs": [0.0, 1.0, 0.0, 0.0] } } }
//!     }
//!   }
//! }
//! ```
//!
//! Raw scores go through temperature-scaled softmax. An attribute's
//! temperature comes from `temperatures`, else from a fit on its
//! `validation` samples, else defaults to 1.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inventory::{AssetRecord, AttributeSchema};

use super::calibration::{fit_temperature, softmax, CalibratedDistribution, ScoreVector, TemperatureFit};
use super::chain::{
    compose_chain, ChainConstraintSet, ChainDiagnostics, ChainStage, ClassLabel, ExposureClassDistribution,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LeafInput {
    Scores { scores: Vec<f64> },
    Probs { probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StageInput {
    Conditional {
        conditional_on: String,
        table: BTreeMap<String, LeafInput>,
    },
    Leaf(LeafInput),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSample {
    pub scores: Vec<f64>,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreFile {
    #[serde(default)]
    pub temperatures: BTreeMap<String, f64>,
    #[serde(default)]
    pub validation: BTreeMap<String, Vec<ValidationSample>>,
    #[serde(default)]
    pub assets: BTreeMap<String, BTreeMap<String, StageInput>>,
}

impl ScoreFile {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("scores {}: {e}", path.display())))
    }

    /// Resolve one temperature per attribute. Explicit values win over fits.
    pub fn resolve_temperatures(
        &self,
        schema: &AttributeSchema,
    ) -> Result<(BTreeMap<String, f64>, BTreeMap<String, TemperatureFit>)> {
        let mut temps = self.temperatures.clone();
        let mut fits = BTreeMap::new();
        for (attr, samples) in &self.validation {
            if temps.contains_key(attr) {
                continue;
            }
            let spec = schema.get(attr).ok_or_else(|| Error::UnknownAttribute(attr.clone()))?;
            let data = samples
                .iter()
                .map(|s| {
                    let label = spec.index_of(&s.label).ok_or_else(|| {
                        Error::invalid(format!("validation label `{}` not allowed for `{attr}`", s.label))
                    })?;
                    Ok((ScoreVector::new(attr.clone(), s.scores.clone()), label))
                })
                .collect::<Result<Vec<_>>>()?;
            let fit = fit_temperature(&data)?;
            temps.insert(attr.clone(), fit.temperature);
            fits.insert(attr.clone(), fit);
        }
        for (attr, &t) in &temps {
            if !schema.contains(attr) {
                return Err(Error::UnknownAttribute(attr.clone()));
            }
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("temperature for `{attr}` must be positive")));
            }
        }
        Ok((temps, fits))
    }
}

fn calibrate(attr: &str, leaf: &LeafInput, temperature: f64) -> Result<CalibratedDistribution> {
    match leaf {
        LeafInput::Scores { scores } => softmax(&ScoreVector::new(attr, scores.clone()), temperature),
        LeafInput::Probs { probs } => CalibratedDistribution::from_probs(attr, probs.clone()),
    }
}

/// Build the chain stages for one asset over `class_attributes` (in chain
/// order) and compose them. Known attributes enter as point masses.
pub fn asset_class_distribution(
    asset: &AssetRecord,
    schema: &AttributeSchema,
    class_attributes: &[String],
    scores: &ScoreFile,
    temperatures: &BTreeMap<String, f64>,
    constraints: &ChainConstraintSet,
) -> Result<(ExposureClassDistribution, ChainDiagnostics)> {
    let asset_scores = scores.assets.get(&asset.asset_id);
    let mut stages = Vec::with_capacity(class_attributes.len());
    for attr in class_attributes {
        if let Some(value) = asset.known_attributes.get(attr) {
            stages.push(ChainStage::point_mass(schema, attr, value)?);
            continue;
        }
        let input = asset_scores.and_then(|m| m.get(attr)).ok_or_else(|| {
            Error::invalid(format!(
                "`{}`: attribute `{attr}` is missing and has no imputed distribution",
                asset.asset_id
            ))
        })?;
        let t = temperatures.get(attr).copied().unwrap_or(1.0);
        let stage = match input {
            StageInput::Leaf(leaf) => ChainStage::Marginal(calibrate(attr, leaf, t)?),
            StageInput::Conditional { conditional_on, table } => ChainStage::Conditional {
                attribute: attr.clone(),
                upstream: conditional_on.clone(),
                table: table
                    .iter()
                    .map(|(k, leaf)| Ok((k.clone(), calibrate(attr, leaf, t)?)))
                    .collect::<Result<_>>()?,
            },
        };
        stages.push(stage);
    }
    compose_chain(&asset.asset_id, schema, &stages, constraints)
}

/// Ground-truth class label: truth values, falling back to known attributes.
pub fn truth_label(asset: &AssetRecord, class_attributes: &[String]) -> Result<ClassLabel> {
    class_attributes
        .iter()
        .map(|attr| {
            let value = asset
                .ground_truth_attributes
                .as_ref()
                .and_then(|t| t.get(attr))
                .or_else(|| asset.known_attributes.get(attr))
                .ok_or_else(|| Error::invalid(format!("`{}`: no ground truth for `{attr}`", asset.asset_id)))?;
            Ok((attr.clone(), value.clone()))
        })
        .collect()
}
