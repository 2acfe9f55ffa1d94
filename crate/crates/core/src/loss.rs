//! Repair-cost model: replacement on collapse plus component repair costs,
//! as an analytical expectation or one sampled realization.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragility::{in_state_into, most_probable_state, sample_categorical, FragilityCurve, FragilityDatabase};
use crate::imputation::{class_key, derive_quantities, ClassLabel, QuantityRules};
use crate::inventory::AssetRecord;

/// Lognormal cost with the given median; zero dispersion is a point value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostDistribution {
    pub median: f64,
    #[serde(default)]
    pub dispersion: f64,
}

impl CostDistribution {
    pub fn point(value: f64) -> Self {
        Self {
            median: value,
            dispersion: 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.median * (0.5 * self.dispersion * self.dispersion).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.dispersion == 0.0 {
            return self.median;
        }
        let z: f64 = StandardNormal.sample(rng);
        self.median * (self.dispersion * z).exp()
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.median >= 0.0 && self.median.is_finite() && self.dispersion >= 0.0 && self.dispersion.is_finite()) {
            return Err(Error::invalid(format!("{what}: cost must be non-negative and finite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCostRecord {
    pub component: String,
    pub state: usize,
    #[serde(flatten)]
    pub cost: CostDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ReplacementCostRule {
    Flat {
        value: f64,
    },
    PerDeckArea {
        rate: f64,
        #[serde(default = "default_area_column")]
        column: String,
    },
}

fn default_area_column() -> String {
    "deck_area".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub unit_costs: Vec<UnitCostRecord>,
    pub replacement_cost: ReplacementCostRule,
    /// Lognormal dispersion applied around the replacement cost.
    #[serde(default)]
    pub replacement_dispersion: f64,
    #[serde(skip)]
    index: HashMap<(String, usize), usize>,
}

impl LossModel {
    pub fn new(
        unit_costs: Vec<UnitCostRecord>,
        replacement_cost: ReplacementCostRule,
        replacement_dispersion: f64,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, r) in unit_costs.iter().enumerate() {
            if r.state == 0 {
                return Err(Error::invalid(format!("`{}`: unit cost for state 0", r.component)));
            }
            r.cost
                .validate(&format!("unit cost `{}` state {}", r.component, r.state))?;
            if index.insert((r.component.clone(), r.state), i).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate unit cost for `{}` state {}",
                    r.component, r.state
                )));
            }
        }
        CostDistribution {
            median: 1.0,
            dispersion: replacement_dispersion,
        }
        .validate("replacement dispersion")?;
        match &replacement_cost {
            ReplacementCostRule::Flat { value: v } | ReplacementCostRule::PerDeckArea { rate: v, .. } => {
                CostDistribution::point(*v).validate("replacement cost")?
            }
        }
        Ok(Self {
            unit_costs,
            replacement_cost,
            replacement_dispersion,
            index,
        })
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: LossModel =
            serde_json::from_str(&text).map_err(|e| Error::invalid(format!("loss model {}: {e}", path.display())))?;
        Self::new(raw.unit_costs, raw.replacement_cost, raw.replacement_dispersion)
    }

    pub fn unit_cost(&self, component: &str, state: usize) -> Option<&CostDistribution> {
        self.index
            .get(&(component.to_string(), state))
            .map(|&i| &self.unit_costs[i].cost)
    }

    /// Median replacement cost: the asset's own `rpc` if recorded, else the rule.
    pub fn replacement_median(&self, asset: &AssetRecord) -> Result<f64> {
        if let Some(rpc) = asset.replacement_cost {
            return Ok(rpc);
        }
        match &self.replacement_cost {
            ReplacementCostRule::Flat { value } => Ok(*value),
            ReplacementCostRule::PerDeckArea { rate, column } => asset
                .numeric
                .get(column)
                .map(|area| rate * area)
                .ok_or_else(|| Error::invalid(format!("`{}`: no `{column}` for replacement cost", asset.asset_id))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedComponent {
    pub name: String,
    pub count: u32,
    pub curve: FragilityCurve,
    /// Unit cost per damage state, state 1 first.
    pub costs: Vec<CostDistribution>,
}

/// Everything needed to evaluate one asset under one exposure class.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedClass {
    pub class_key: String,
    pub attributes: ClassLabel,
    pub replacement: CostDistribution,
    pub components: Vec<ResolvedComponent>,
    /// `(component index, trigger state)` for collapse triggers present on the asset.
    pub collapse_triggers: Vec<(usize, usize)>,
}

pub fn resolve_class(
    asset: &AssetRecord,
    label: &ClassLabel,
    fragilities: &FragilityDatabase,
    model: &LossModel,
    rules: &QuantityRules,
) -> Result<ResolvedClass> {
    let mut attributes = asset.known_attributes.clone();
    attributes.extend(label.iter().map(|(k, v)| (k.clone(), v.clone())));
    let quantities = derive_quantities(asset, label, rules)?;
    let mut components = Vec::new();
    for (name, &count) in &quantities.components {
        if count == 0 {
            continue;
        }
        let curve = fragilities
            .resolve(&attributes, name)
            .map_err(|e| Error::invalid(format!("`{}`: {e}", asset.asset_id)))?
            .clone();
        let costs = (1..=curve.n_states())
            .map(|k| {
                model
                    .unit_cost(name, k)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("no unit cost for `{name}` state {k}")))
            })
            .collect::<Result<Vec<_>>>()?;
        components.push(ResolvedComponent {
            name: name.clone(),
            count,
            curve,
            costs,
        });
    }
    let mut collapse_triggers = Vec::new();
    for t in &fragilities.collapse.triggers {
        if let Some(i) = components.iter().position(|c| c.name == t.component) {
            let k = fragilities.collapse.trigger_state(t, &components[i].curve)?;
            collapse_triggers.push((i, k));
        }
    }
    Ok(ResolvedClass {
        class_key: class_key(label),
        attributes,
        replacement: CostDistribution {
            median: model.replacement_median(asset)?,
            dispersion: model.replacement_dispersion,
        },
        components,
        collapse_triggers,
    })
}

/// Damage probabilities of every component of a resolved class at one IM.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageAtIm {
    pub collapse: f64,
    pub in_state: Vec<Vec<f64>>,
    pub clamped: bool,
}

impl ResolvedClass {
    pub fn damage_at(&self, im: f64) -> Result<DamageAtIm> {
        if !(im > 0.0 && im.is_finite()) {
            return Err(Error::invalid(format!("intensity measure must be positive, got {im}")));
        }
        let mut clamped = false;
        let in_state = self
            .components
            .iter()
            .map(|c| {
                let mut p = Vec::with_capacity(c.curve.n_states() + 1);
                clamped |= in_state_into(&c.curve, im, &mut p);
                p
            })
            .collect::<Vec<_>>();
        let survive: f64 = self
            .collapse_triggers
            .iter()
            .map(|&(i, k)| {
                let exceed: f64 = in_state[i][k..].iter().sum();
                1.0 - exceed
            })
            .product();
        Ok(DamageAtIm {
            collapse: 1.0 - survive,
            in_state,
            clamped,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub replacement: f64,
    pub repairable: f64,
    pub per_component: BTreeMap<String, f64>,
}

/// Expected loss given precomputed damage probabilities.
pub fn expected_loss_at(class: &ResolvedClass, damage: &DamageAtIm) -> LossBreakdown {
    let p_c = damage.collapse;
    let replacement = class.replacement.mean() * p_c;
    let mut per_component = BTreeMap::new();
    let mut repairable = 0.0;
    for (c, p) in class.components.iter().zip(&damage.in_state) {
        // p_0 + Σ_{k≥1} p_k, which is 1 for exhaustive states
        let norm: f64 = p[1..].iter().sum::<f64>() + p[0];
        let cost: f64 = c
            .costs
            .iter()
            .zip(&p[1..])
            .map(|(uc, pk)| c.count as f64 * uc.mean() * pk / norm)
            .sum::<f64>()
            * (1.0 - p_c);
        repairable += cost;
        per_component.insert(c.name.clone(), cost);
    }
    LossBreakdown {
        total: replacement + repairable,
        replacement,
        repairable,
        per_component,
    }
}

/// `L(im) = RPC·p_c + Σ_j Σ_k n_j E[UC_jk] p_jk / (Σ_k p_jk + p_j0) · (1 − p_c)`.
pub fn expected_loss(
    asset: &AssetRecord,
    label: &ClassLabel,
    im: f64,
    model: &LossModel,
    fragilities: &FragilityDatabase,
    rules: &QuantityRules,
) -> Result<LossBreakdown> {
    let class = resolve_class(asset, label, fragilities, model, rules)?;
    Ok(expected_loss_at(&class, &class.damage_at(im)?))
}

/// Which sampling steps draw random numbers; frozen steps use the most
/// probable damage state (collapse iff `p_c > 0.5`) or the median cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    pub stochastic_damage: bool,
    pub stochastic_cost: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            stochastic_damage: true,
            stochastic_cost: true,
        }
    }
}

/// Replacement and repairable parts of one sampled realization, plus the
/// per-component costs when `per_component` is provided.
pub fn sample_loss_at<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    class: &ResolvedClass,
    damage: &DamageAtIm,
    options: SampleOptions,
    damage_rng: &mut R1,
    cost_rng: &mut R2,
    mut per_component: Option<&mut BTreeMap<String, f64>>,
) -> (f64, f64) {
    let collapsed = if options.stochastic_damage {
        damage_rng.random::<f64>() < damage.collapse
    } else {
        damage.collapse > 0.5
    };
    let draw = |cost: &CostDistribution, rng: &mut R2| {
        if options.stochastic_cost {
            cost.sample(rng)
        } else {
            cost.median
        }
    };
    if collapsed {
        return (draw(&class.replacement, cost_rng), 0.0);
    }
    let mut repairable = 0.0;
    for (c, p) in class.components.iter().zip(&damage.in_state) {
        let state = if options.stochastic_damage {
            sample_categorical(p, damage_rng)
        } else {
            most_probable_state(p)
        };
        let cost = if state == 0 {
            0.0
        } else {
            c.count as f64 * draw(&c.costs[state - 1], cost_rng)
        };
        repairable += cost;
        if let Some(map) = per_component.as_deref_mut() {
            map.insert(c.name.clone(), cost);
        }
    }
    (0.0, repairable)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeLossSample {
    pub asset_id: String,
    pub map_id: usize,
    pub realization_id: usize,
    pub class_label: String,
    pub total: f64,
    pub replacement_part: f64,
    pub repairable_part: f64,
    pub per_component: BTreeMap<String, f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn sample_loss<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    asset: &AssetRecord,
    class: &ResolvedClass,
    im: f64,
    map_id: usize,
    realization_id: usize,
    options: SampleOptions,
    damage_rng: &mut R1,
    cost_rng: &mut R2,
) -> Result<BridgeLossSample> {
    let damage = class.damage_at(im)?;
    let mut per_component = BTreeMap::new();
    let (rp, re) = sample_loss_at(class, &damage, options, damage_rng, cost_rng, Some(&mut per_component));
    Ok(BridgeLossSample {
        asset_id: asset.asset_id.clone(),
        map_id,
        realization_id,
        class_label: class.class_key.clone(),
        total: rp + re,
        replacement_part: rp,
        repairable_part: re,
        per_component,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragility::{CollapseRule, CollapseTrigger};
    use crate::inventory::Site;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn label(pairs: &[(&str, &str)]) -> ClassLabel {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    /// 2-span MCB bridge with `n_col` columns per bent and a seat/diaphragm abutment.
    fn setup(column_medians: Vec<f64>, collapse: bool, costs: &[f64]) -> (AssetRecord, FragilityDatabase, LossModel) {
        let asset = AssetRecord::new("B1", Site::new(34.0, -118.0).unwrap()).with_attribute("n_spans", "2");
        let n = column_medians.len();
        let mut curves = vec![FragilityCurve::new("column", ClassLabel::new(), column_medians, vec![0.5; n]).unwrap()];
        for seat in ["joint_seal", "bearing", "abutment_seat"] {
            curves.push(FragilityCurve::new(seat, ClassLabel::new(), vec![0.3], vec![0.6]).unwrap());
        }
        let triggers = if collapse {
            vec![CollapseTrigger {
                component: "column".into(),
                state: None,
            }]
        } else {
            vec![]
        };
        let db = FragilityDatabase::new(curves, CollapseRule { triggers }).unwrap();
        let mut unit_costs: Vec<UnitCostRecord> = costs
            .iter()
            .enumerate()
            .map(|(k, &c)| UnitCostRecord {
                component: "column".into(),
                state: k + 1,
                cost: CostDistribution::point(c),
            })
            .collect();
        for seat in ["joint_seal", "bearing", "abutment_seat"] {
            unit_costs.push(UnitCostRecord {
                component: seat.into(),
                state: 1,
                cost: CostDistribution::point(10.0),
            });
        }
        let model = LossModel::new(unit_costs, ReplacementCostRule::Flat { value: 1000.0 }, 0.0).unwrap();
        (asset, db, model)
    }

    fn mcb(ncol: &str, abut: &str) -> ClassLabel {
        label(&[("bent_type", "MCB"), ("n_col", ncol), ("abutment_type", abut)])
    }

    #[test]
    fn repairable_only_hand_evaluation() {
        // one state, im at its median => p = 0.5; n = 2 columns; UC = 100
        let (asset, db, model) = setup(vec![0.4], false, &[100.0]);
        let l = expected_loss(&asset, &mcb("2", "D"), 0.4, &model, &db, &QuantityRules::default()).unwrap();
        assert!((l.repairable - 100.0).abs() < 1e-12);
        assert_eq!(l.replacement, 0.0);
        assert!((l.total - 100.0).abs() < 1e-12);
    }

    #[test]
    fn certain_collapse_is_replacement_cost() {
        let (asset, db, model) = setup(vec![1e-6], true, &[100.0]);
        let l = expected_loss(&asset, &mcb("2", "D"), 5.0, &model, &db, &QuantityRules::default()).unwrap();
        assert_eq!(l.replacement, 1000.0);
        assert_eq!(l.repairable, 0.0);
        assert_eq!(l.total, 1000.0);
    }

    #[test]
    fn vanishing_intensity_means_no_loss() {
        let (asset, db, model) = setup(vec![0.3, 0.6], true, &[100.0, 500.0]);
        let l = expected_loss(&asset, &mcb("3", "S"), 1e-8, &model, &db, &QuantityRules::default()).unwrap();
        assert!(l.total.abs() < 1000.0 * 1e-9);
        assert_eq!(l.total, l.replacement + l.repairable);
    }

    #[test]
    fn deterministic_sample_equals_expectation() {
        // damage fixed at state 1 by an extremely low median
        let (asset, db, model) = setup(vec![1e-9], false, &[100.0]);
        let class = resolve_class(&asset, &mcb("2", "D"), &db, &model, &QuantityRules::default()).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        let s = sample_loss(&asset, &class, 0.5, 0, 0, SampleOptions::default(), &mut r1, &mut r2).unwrap();
        let e = expected_loss_at(&class, &class.damage_at(0.5).unwrap());
        assert_eq!(s.total, e.total);
        assert_eq!(s.total, s.replacement_part + s.repairable_part);
    }

    #[test]
    fn sampled_mean_converges() {
        let (asset, db, model) = setup(vec![0.4], false, &[100.0]);
        let class = resolve_class(&asset, &mcb("2", "D"), &db, &model, &QuantityRules::default()).unwrap();
        let damage = class.damage_at(0.4).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let total: f64 = (0..n)
            .map(|_| {
                let (a, b) = sample_loss_at(&class, &damage, SampleOptions::default(), &mut r1, &mut r2, None);
                a + b
            })
            .sum();
        assert!((total / n as f64 / 100.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn seat_components_only_for_seat_abutments() {
        let (asset, db, model) = setup(vec![0.4], false, &[100.0]);
        let rules = QuantityRules::default();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        let seat = resolve_class(&asset, &mcb("2", "S"), &db, &model, &rules).unwrap();
        let s = sample_loss(&asset, &seat, 0.5, 0, 0, SampleOptions::default(), &mut r1, &mut r2).unwrap();
        for k in ["joint_seal", "bearing", "abutment_seat"] {
            assert!(s.per_component.contains_key(k), "{k}");
        }
        let diaphragm = resolve_class(&asset, &mcb("2", "D"), &db, &model, &rules).unwrap();
        let s = sample_loss(
            &asset,
            &diaphragm,
            0.5,
            0,
            0,
            SampleOptions::default(),
            &mut r1,
            &mut r2,
        )
        .unwrap();
        for k in ["joint_seal", "bearing", "abutment_seat"] {
            assert!(!s.per_component.contains_key(k), "{k}");
        }
    }

    #[test]
    fn missing_cost_entry_is_an_error() {
        let (asset, db, model) = setup(vec![0.3, 0.6], false, &[100.0]);
        assert!(resolve_class(&asset, &mcb("2", "D"), &db, &model, &QuantityRules::default()).is_err());
    }

    #[test]
    fn lognormal_cost_mean() {
        let c = CostDistribution {
            median: 100.0,
            dispersion: 0.4,
        };
        assert!((c.mean() - 100.0 * 0.08f64.exp()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| c.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m / c.mean() - 1.0).abs() < 0.01);
    }

    #[test]
    fn replacement_rules() {
        let mut asset = AssetRecord::new("B1", Site::new(0.0, 0.0).unwrap());
        asset.numeric.insert("deck_area".into(), 200.0);
        let m = LossModel::new(
            vec![],
            ReplacementCostRule::PerDeckArea {
                rate: 3.0,
                column: "deck_area".into(),
            },
            0.0,
        )
        .unwrap();
        assert_eq!(m.replacement_median(&asset).unwrap(), 600.0);
        asset.replacement_cost = Some(50.0);
        assert_eq!(m.replacement_median(&asset).unwrap(), 50.0);
    }
}
