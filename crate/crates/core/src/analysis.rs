//! Inspection prioritization and one-way sensitivity runs.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decomposition::VarianceDecomposition;
use crate::error::{Error, Result};
use crate::simulation::{simulate, Frozen, PortfolioModel, SimulationSettings};
use crate::stats::{kahan_sum, quantile_sorted, sample_variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAsset {
    pub rank: usize,
    pub asset_id: String,
    pub exposure_contribution: f64,
    pub cumulative_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritizationResult {
    pub ranked: Vec<RankedAsset>,
    pub total_exposure_var: f64,
}

impl PrioritizationResult {
    /// The first `ceil(fraction · n)` ranked assets.
    pub fn selection(&self, fraction: f64) -> Result<Vec<String>> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Config(format!(
                "top fraction must lie in (0, 1], got {fraction}"
            )));
        }
        let n = ((fraction * self.ranked.len() as f64).ceil() as usize).clamp(1, self.ranked.len());
        Ok(self.ranked[..n].iter().map(|r| r.asset_id.clone()).collect())
    }

    /// Share of the total exposure variance carried by the selection.
    pub fn selected_share(&self, fraction: f64) -> Result<f64> {
        let n = self.selection(fraction)?.len();
        Ok(self.ranked[n - 1].cumulative_fraction)
    }

    /// `rank,asset_id,exposure_contribution,cumulative_fraction,selected`.
    pub fn write_csv<W: Write>(&self, writer: W, top_fraction: f64) -> Result<()> {
        let selected = self.selection(top_fraction)?.len();
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::invalid(format!("writing prioritization: {e}"));
        w.write_record([
            "rank",
            "asset_id",
            "exposure_contribution",
            "cumulative_fraction",
            "selected",
        ])
        .map_err(err)?;
        for r in &self.ranked {
            w.write_record([
                r.rank.to_string(),
                r.asset_id.clone(),
                r.exposure_contribution.to_string(),
                r.cumulative_fraction.to_string(),
                (r.rank <= selected).to_string(),
            ])
            .map_err(err)?;
        }
        w.flush()
            .map_err(|e| Error::invalid(format!("writing prioritization: {e}")))
    }
}

/// Rank bridges by their own exposure variance, largest first, ties broken
/// by asset id.
pub fn prioritize(per_bridge: &[VarianceDecomposition]) -> Result<PrioritizationResult> {
    if per_bridge.is_empty() {
        return Err(Error::invalid("nothing to prioritize"));
    }
    let mut items = Vec::with_capacity(per_bridge.len());
    for d in per_bridge {
        let id = d
            .asset_id()
            .ok_or_else(|| Error::invalid("prioritize expects bridge-level decompositions"))?;
        if !(d.exposure_var >= 0.0 && d.exposure_var.is_finite()) {
            return Err(Error::Numeric(format!("invalid exposure variance for `{id}`")));
        }
        items.push((id.to_string(), d.exposure_var));
    }
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let total = kahan_sum(items.iter().map(|i| i.1));
    let n = items.len();
    let mut running = crate::stats::KahanSum::new();
    let ranked = items
        .into_iter()
        .enumerate()
        .map(|(i, (asset_id, c))| {
            running.add(c);
            let cumulative_fraction = if i + 1 == n {
                1.0
            } else if total > 0.0 {
                (running.value() / total).min(1.0)
            } else {
                (i + 1) as f64 / n as f64
            };
            RankedAsset {
                rank: i + 1,
                asset_id,
                exposure_contribution: c,
                cumulative_fraction,
            }
        })
        .collect();
    Ok(PrioritizationResult {
        ranked,
        total_exposure_var: total,
    })
}

/// Share of exposure variance among selected assets grouped by their
/// ground-truth class key (`"unknown"` when no truth is available).
pub fn attribution_by_class(
    prioritization: &PrioritizationResult,
    selection: &[String],
    truth_keys: &BTreeMap<String, String>,
) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let total: f64 = kahan_sum(
        prioritization
            .ranked
            .iter()
            .filter(|r| selection.contains(&r.asset_id))
            .map(|r| r.exposure_contribution),
    );
    for r in prioritization.ranked.iter().filter(|r| selection.contains(&r.asset_id)) {
        let key = truth_keys.get(&r.asset_id).cloned().unwrap_or_else(|| "unknown".into());
        let share = if total > 0.0 {
            r.exposure_contribution / total
        } else {
            0.0
        };
        *out.entry(key).or_insert(0.0) += share;
    }
    out
}

/// Which source of uncertainty a sensitivity run keeps stochastic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivitySource {
    /// Every source stochastic; the reference for variance shares.
    All,
    Gmrf,
    Damage,
    #[serde(alias = "exposure_information")]
    Exposure,
    Loss,
    /// Every source frozen.
    Control,
}

impl SensitivitySource {
    pub const ONE_WAY: [SensitivitySource; 4] = [Self::Gmrf, Self::Damage, Self::Exposure, Self::Loss];

    pub fn frozen(self) -> Frozen {
        let only = |f: fn(&mut Frozen)| {
            let mut fr = Frozen::ALL;
            f(&mut fr);
            fr
        };
        match self {
            Self::All => Frozen::NONE,
            Self::Control => Frozen::ALL,
            Self::Gmrf => only(|f| f.gmrf = false),
            Self::Damage => only(|f| f.damage = false),
            Self::Exposure => only(|f| f.exposure = false),
            Self::Loss => only(|f| f.loss = false),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::All => "all",
            Self::Gmrf => "gmrf",
            Self::Damage => "damage",
            Self::Exposure => "exposure",
            Self::Loss => "loss",
            Self::Control => "control",
        }
    }
}

impl FromStr for SensitivitySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Self::All,
            "gmrf" => Self::Gmrf,
            "damage" => Self::Damage,
            "exposure" | "exposure_information" => Self::Exposure,
            "loss" => Self::Loss,
            "control" => Self::Control,
            other => return Err(Error::Config(format!("unknown sensitivity source `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRun {
    pub source: SensitivitySource,
    pub mean: f64,
    pub variance: f64,
    /// Regional loss at probabilities 0.05, 0.25, 0.5, 0.75, 0.95.
    pub quantiles: [f64; 5],
    /// Variance relative to the all-sources run, when that run is available
    /// and has positive variance.
    pub share_of_all: Option<f64>,
}

pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

pub fn summarize_regional(source: SensitivitySource, regional: &[f64]) -> SensitivityRun {
    let mut sorted = regional.to_vec();
    sorted.sort_by(f64::total_cmp);
    SensitivityRun {
        source,
        mean: kahan_sum(regional.iter().copied()) / regional.len() as f64,
        variance: sample_variance(regional),
        quantiles: QUANTILE_LEVELS.map(|q| quantile_sorted(&sorted, q)),
        share_of_all: None,
    }
}

pub fn one_way_sensitivity(
    model: &PortfolioModel,
    settings: &SimulationSettings,
    source: SensitivitySource,
) -> Result<SensitivityRun> {
    let settings = SimulationSettings {
        frozen: source.frozen(),
        ..*settings
    };
    let sim = simulate(model, &settings)?;
    Ok(summarize_regional(source, sim.ledger.regional()))
}

/// The all-sources run followed by each requested source, with variance
/// shares filled in.
pub fn sensitivity_table(
    model: &PortfolioModel,
    settings: &SimulationSettings,
    sources: &[SensitivitySource],
) -> Result<Vec<SensitivityRun>> {
    let all = one_way_sensitivity(model, settings, SensitivitySource::All)?;
    let mut runs = vec![all.clone()];
    for &s in sources.iter().filter(|s| **s != SensitivitySource::All) {
        let mut run = one_way_sensitivity(model, settings, s)?;
        run.share_of_all = (all.variance > 0.0).then(|| run.variance / all.variance);
        runs.push(run);
    }
    runs[0].share_of_all = (all.variance > 0.0).then_some(1.0);
    Ok(runs)
}

/// `source,mean,variance,q05,q25,q50,q75,q95,share_of_all`.
pub fn write_sensitivity_csv<W: Write>(runs: &[SensitivityRun], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::invalid(format!("writing sensitivity table: {e}"));
    w.write_record([
        "source",
        "mean",
        "variance",
        "q05",
        "q25",
        "q50",
        "q75",
        "q95",
        "share_of_all",
    ])
    .map_err(err)?;
    for r in runs {
        let mut row = vec![r.source.name().to_string(), r.mean.to_string(), r.variance.to_string()];
        row.extend(r.quantiles.iter().map(|q| q.to_string()));
        row.push(r.share_of_all.map(|s| s.to_string()).unwrap_or_default());
        w.write_record(row).map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("writing sensitivity table: {e}")))
}
