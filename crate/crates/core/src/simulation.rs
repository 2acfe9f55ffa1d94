//! Monte Carlo propagation from ground motion through exposure class,
//! damage and cost to a [`RealizationLedger`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::RealizationLedger;
use crate::error::{Error, Result};
use crate::fragility::{sample_categorical, FragilityDatabase};
use crate::hazard::{median_field, sample_fields, GroundMotionFieldSet, ScenarioHazardInput};
use crate::imputation::{
    asset_class_distribution, class_key, truth_label, ChainConstraintSet, ChainDiagnostics, ClassLabel,
    ExposureClassDistribution, QuantityRules, ScoreFile,
};
use crate::inventory::{AssetRecord, Inventory};
use crate::loss::{resolve_class, sample_loss_at, LossModel, ResolvedClass, SampleOptions};
use crate::rng::{substream, Purpose, StreamKey};

/// Parsed inputs shared by every run over one portfolio.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub inventory: Inventory,
    /// Attributes defining an exposure class, in chain order.
    pub class_attributes: Vec<String>,
    pub scores: ScoreFile,
    pub constraints: ChainConstraintSet,
    pub fragility: FragilityDatabase,
    pub loss: LossModel,
    pub rules: QuantityRules,
    pub hazard: ScenarioHazardInput,
}

impl ModelInputs {
    /// Imputed class distributions for every asset, after temperature
    /// scaling and chain composition.
    pub fn imputed_distributions(&self) -> Result<Vec<(ExposureClassDistribution, ChainDiagnostics)>> {
        let (temps, _) = self.scores.resolve_temperatures(self.inventory.schema())?;
        self.inventory
            .assets()
            .iter()
            .map(|a| {
                asset_class_distribution(
                    a,
                    self.inventory.schema(),
                    &self.class_attributes,
                    &self.scores,
                    &temps,
                    &self.constraints,
                )
            })
            .collect()
    }

    /// One-hot distributions at each asset's ground-truth class.
    pub fn truth_distributions(&self) -> Result<Vec<ExposureClassDistribution>> {
        self.inventory
            .assets()
            .iter()
            .map(|a| {
                Ok(ExposureClassDistribution::one_hot(
                    a.asset_id.clone(),
                    truth_label(a, &self.class_attributes)?,
                ))
            })
            .collect()
    }
}

/// An asset with its class distribution resolved to loss models.
#[derive(Debug, Clone)]
pub struct AssetModel {
    pub distribution: ExposureClassDistribution,
    pub classes: Vec<ResolvedClass>,
    probs: Vec<f64>,
    site: usize,
}

impl AssetModel {
    pub fn asset_id(&self) -> &str {
        &self.distribution.asset_id
    }
}

#[derive(Debug, Clone)]
pub struct PortfolioModel {
    pub assets: Vec<AssetModel>,
    pub hazard: ScenarioHazardInput,
}

impl PortfolioModel {
    /// `distributions` must follow inventory order.
    pub fn new(inputs: &ModelInputs, distributions: Vec<ExposureClassDistribution>) -> Result<Self> {
        let records = inputs.inventory.assets();
        if distributions.len() != records.len() {
            return Err(Error::invalid("one class distribution per asset is required"));
        }
        let assets = records
            .par_iter()
            .zip(distributions)
            .map(|(asset, distribution)| asset_model(inputs, asset, distribution))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            assets,
            hazard: inputs.hazard.clone(),
        })
    }

    pub fn imputed(inputs: &ModelInputs) -> Result<Self> {
        let d = inputs.imputed_distributions()?.into_iter().map(|(d, _)| d).collect();
        Self::new(inputs, d)
    }

    pub fn truth(inputs: &ModelInputs) -> Result<Self> {
        Self::new(inputs, inputs.truth_distributions()?)
    }

    pub fn distributions(&self) -> Vec<ExposureClassDistribution> {
        self.assets.iter().map(|a| a.distribution.clone()).collect()
    }
}

fn asset_model(
    inputs: &ModelInputs,
    asset: &AssetRecord,
    distribution: ExposureClassDistribution,
) -> Result<AssetModel> {
    if distribution.asset_id != asset.asset_id {
        return Err(Error::invalid(format!(
            "class distribution for `{}` given in place of `{}`",
            distribution.asset_id, asset.asset_id
        )));
    }
    distribution.validate()?;
    let site = inputs
        .hazard
        .site_index(&asset.asset_id)
        .ok_or_else(|| Error::invalid(format!("hazard input has no site for `{}`", asset.asset_id)))?;
    let classes = distribution
        .classes
        .iter()
        .map(|c| resolve_class(asset, &c.label, &inputs.fragility, &inputs.loss, &inputs.rules))
        .collect::<Result<Vec<_>>>()?;
    Ok(AssetModel {
        probs: distribution.probabilities().collect(),
        distribution,
        classes,
        site,
    })
}

/// Sources of uncertainty held at their deterministic surrogate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frozen {
    /// Median field `exp(μ)` for every map.
    pub gmrf: bool,
    /// Most probable exposure class.
    pub exposure: bool,
    /// Most probable damage state; collapse iff its probability exceeds 0.5.
    pub damage: bool,
    /// Median unit and replacement costs.
    pub loss: bool,
}

impl Frozen {
    pub const NONE: Frozen = Frozen {
        gmrf: false,
        exposure: false,
        damage: false,
        loss: false,
    };
    pub const ALL: Frozen = Frozen {
        gmrf: true,
        exposure: true,
        damage: true,
        loss: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationSettings {
    pub n_maps: usize,
    pub realizations_per_map: usize,
    pub master_seed: u64,
    pub frozen: Frozen,
}

impl SimulationSettings {
    pub fn new(n_maps: usize, realizations_per_map: usize, master_seed: u64) -> Self {
        Self {
            n_maps,
            realizations_per_map,
            master_seed,
            frozen: Frozen::NONE,
        }
    }

    pub fn total_realizations(&self) -> usize {
        self.n_maps * self.realizations_per_map
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub ledger: RealizationLedger,
    pub fields: GroundMotionFieldSet,
    /// `(asset, map, class)` evaluations whose fragility curves crossed.
    pub clamped_evaluations: usize,
}

/// Realization `m·R + r` of asset `b` draws its class, damage and cost from
/// substreams keyed by `(b, m, r)`, so runs that differ only in class
/// distributions share every other random number.
pub fn simulate(model: &PortfolioModel, settings: &SimulationSettings) -> Result<Simulation> {
    if settings.n_maps == 0 {
        return Err(Error::Config("n_maps must be at least 1".into()));
    }
    if settings.realizations_per_map < 1 || settings.total_realizations() < 2 {
        return Err(Error::Config("need at least 2 realizations in total".into()));
    }
    let fields = if settings.frozen.gmrf {
        median_field(&model.hazard)
    } else {
        sample_fields(&model.hazard, settings.n_maps, settings.master_seed)?
    };
    let options = SampleOptions {
        stochastic_damage: !settings.frozen.damage,
        stochastic_cost: !settings.frozen.loss,
    };
    let per_asset = model
        .assets
        .par_iter()
        .enumerate()
        .map(|(b, asset)| simulate_asset(b, asset, &fields, settings, options))
        .collect::<Result<Vec<_>>>()?;

    let mut asset_ids = Vec::with_capacity(per_asset.len());
    let mut class_keys = Vec::with_capacity(per_asset.len());
    let mut classes = Vec::with_capacity(per_asset.len());
    let mut losses = Vec::with_capacity(per_asset.len());
    let mut clamped = 0;
    for (asset, (cls, ls, c)) in model.assets.iter().zip(per_asset) {
        asset_ids.push(asset.asset_id().to_string());
        class_keys.push(asset.classes.iter().map(|c| c.class_key.clone()).collect());
        classes.push(cls);
        losses.push(ls);
        clamped += c;
    }
    Ok(Simulation {
        ledger: RealizationLedger::new(asset_ids, class_keys, classes, losses)?,
        fields,
        clamped_evaluations: clamped,
    })
}

fn simulate_asset(
    b: usize,
    asset: &AssetModel,
    fields: &GroundMotionFieldSet,
    settings: &SimulationSettings,
    options: SampleOptions,
) -> Result<(Vec<u32>, Vec<f64>, usize)> {
    let r_per_map = settings.realizations_per_map;
    let total = settings.total_realizations();
    let mut classes = Vec::with_capacity(total);
    let mut losses = Vec::with_capacity(total);
    let mut clamped = 0;
    let most_probable = asset.distribution.most_probable() as u32;
    let mut damage = vec![None; asset.classes.len()];
    for m in 0..settings.n_maps {
        let im = fields.im(if settings.frozen.gmrf { 0 } else { m }, asset.site);
        damage.iter_mut().for_each(|d| *d = None);
        for r in 0..r_per_map {
            let key = StreamKey::new(b, m, r);
            let class = if settings.frozen.exposure {
                most_probable
            } else {
                let mut rng = substream(settings.master_seed, Purpose::ExposureClass, key);
                sample_categorical(&asset.probs, &mut rng) as u32
            };
            let ci = class as usize;
            if damage[ci].is_none() {
                let d = asset.classes[ci].damage_at(im)?;
                clamped += d.clamped as usize;
                damage[ci] = Some(d);
            }
            let d = damage[ci].as_ref().expect("evaluated above");
            let mut damage_rng = substream(settings.master_seed, Purpose::Damage, key);
            let mut cost_rng = substream(settings.master_seed, Purpose::UnitCost, key);
            let (rp, re) = sample_loss_at(&asset.classes[ci], d, options, &mut damage_rng, &mut cost_rng, None);
            classes.push(class);
            losses.push(rp + re);
        }
    }
    Ok((classes, losses, clamped))
}

/// Replace the class distribution of each selected asset by a point mass at
/// its ground-truth class.
pub fn what_if_inspect(
    inventory: &Inventory,
    distributions: &[ExposureClassDistribution],
    selection: &[String],
    class_attributes: &[String],
) -> Result<Vec<ExposureClassDistribution>> {
    for id in selection {
        if inventory.find(id).is_none() {
            return Err(Error::UnknownAsset(id.clone()));
        }
    }
    distributions
        .iter()
        .map(|d| {
            if !selection.contains(&d.asset_id) {
                return Ok(d.clone());
            }
            let (_, asset) = inventory
                .find(&d.asset_id)
                .ok_or_else(|| Error::UnknownAsset(d.asset_id.clone()))?;
            let label: ClassLabel = truth_label(asset, class_attributes)?;
            Ok(ExposureClassDistribution::one_hot(d.asset_id.clone(), label))
        })
        .collect()
}

/// Class key of the ground truth of `asset`, or `"unknown"`.
pub fn truth_class_key(asset: &AssetRecord, class_attributes: &[String]) -> String {
    truth_label(asset, class_attributes)
        .map(|l| class_key(&l))
        .unwrap_or_else(|_| "unknown".into())
}
