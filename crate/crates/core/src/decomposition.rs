//! Law-of-total-variance estimators over a realization ledger, for single
//! bridges and for the regional sum.
//!
//! Bridge level: classes are grouped, and
//! `σ²_base = Σ π̂_i σ̂²_i`, `σ²_e = Σ π̂_i (μ̂_i − μ̂)²`, `σ²_total = σ²_base + σ²_e`.
//!
//! Regional level supports three routes that estimate the same quantities:
//!
//! * [`RegionalRoute::Pairwise`] sums bridge terms and, for every bridge
//!   pair, the conditional covariances over joint class cells. `O(B²R)`.
//! * [`RegionalRoute::JointClass`] treats the whole per-realization class
//!   vector as one joint class and applies the bridge estimator to the
//!   regional loss. Only meaningful while joint cells stay populated.
//! * [`RegionalRoute::Factorized`] uses per-bridge conditional means.
//!   Its exposure term is algebraically the pairwise one; its baseline
//!   cross terms centre each bridge on its own class mean, which matches
//!   the pairwise estimand when classes are drawn independently across
//!   bridges. `O(BR)`.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{kahan_sum, KahanSum, RunningCovariance, RunningMoments};

/// Bridges above this count default to an `O(BR)` route.
pub const PAIRWISE_MAX_ASSETS: usize = 200;
/// Mean realizations per joint class required before the joint-class route
/// is chosen automatically.
pub const JOINT_MIN_OCCUPANCY: f64 = 10.0;

/// Per-realization class assignments and losses for every asset.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationLedger {
    asset_ids: Vec<String>,
    class_keys: Vec<Vec<String>>,
    classes: Vec<Vec<u32>>,
    losses: Vec<Vec<f64>>,
    regional: Vec<f64>,
}

impl RealizationLedger {
    /// `classes[b][r]` indexes into `class_keys[b]`; `losses[b][r]` is the
    /// loss of asset `b` in realization `r`.
    pub fn new(
        asset_ids: Vec<String>,
        class_keys: Vec<Vec<String>>,
        classes: Vec<Vec<u32>>,
        losses: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let b = asset_ids.len();
        if b == 0 {
            return Err(Error::invalid("ledger has no assets"));
        }
        if class_keys.len() != b || classes.len() != b || losses.len() != b {
            return Err(Error::invalid("ledger column mismatch"));
        }
        let r = losses[0].len();
        if r < 2 {
            return Err(Error::invalid(format!("ledger needs at least 2 realizations, got {r}")));
        }
        for i in 0..b {
            if classes[i].len() != r || losses[i].len() != r {
                return Err(Error::invalid(format!("ledger column mismatch for `{}`", asset_ids[i])));
            }
            if classes[i].iter().any(|&c| c as usize >= class_keys[i].len()) {
                return Err(Error::invalid(format!(
                    "class index out of range for `{}`",
                    asset_ids[i]
                )));
            }
            if losses[i].iter().any(|l| !l.is_finite()) {
                return Err(Error::Numeric(format!("non-finite loss for `{}`", asset_ids[i])));
            }
        }
        let mut seen = BTreeSet::new();
        for id in &asset_ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateAsset(id.clone()));
            }
        }
        let regional = (0..r).map(|j| kahan_sum(losses.iter().map(|l| l[j]))).collect();
        Ok(Self {
            asset_ids,
            class_keys,
            classes,
            losses,
            regional,
        })
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn n_assets(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn n_realizations(&self) -> usize {
        self.regional.len()
    }

    pub fn asset_index(&self, asset_id: &str) -> Option<usize> {
        self.asset_ids.iter().position(|a| a == asset_id)
    }

    pub fn classes(&self, asset: usize) -> &[u32] {
        &self.classes[asset]
    }

    pub fn class_keys(&self, asset: usize) -> &[String] {
        &self.class_keys[asset]
    }

    pub fn losses(&self, asset: usize) -> &[f64] {
        &self.losses[asset]
    }

    pub fn regional(&self) -> &[f64] {
        &self.regional
    }

    /// Realizations `range` as a new ledger.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(
            self.asset_ids.clone(),
            self.class_keys.clone(),
            self.classes.iter().map(|c| c[range.clone()].to_vec()).collect(),
            self.losses.iter().map(|l| l[range.clone()].to_vec()).collect(),
        )
    }

    /// Reorder realizations so that new realization `i` is old `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        Self::new(
            self.asset_ids.clone(),
            self.class_keys.clone(),
            self.classes
                .iter()
                .map(|c| order.iter().map(|&i| c[i]).collect())
                .collect(),
            self.losses
                .iter()
                .map(|l| order.iter().map(|&i| l[i]).collect())
                .collect(),
        )
    }

    /// Columnar audit CSV: `realization_id,asset_id,class_hash,loss`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::invalid(format!("writing ledger: {e}"));
        w.write_record(["realization_id", "asset_id", "class_hash", "loss"])
            .map_err(err)?;
        let hashes: Vec<Vec<String>> = self
            .class_keys
            .iter()
            .map(|keys| keys.iter().map(|k| class_hash(k)).collect())
            .collect();
        for r in 0..self.n_realizations() {
            for (b, id) in self.asset_ids.iter().enumerate() {
                let c = self.classes[b][r] as usize;
                w.write_record([&r.to_string(), id, &hashes[b][c], &self.losses[b][r].to_string()])
                    .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::invalid(format!("writing ledger: {e}")))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            realization_id: usize,
            asset_id: String,
            class_hash: String,
            loss: f64,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut order: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut cells: Vec<HashMap<usize, (String, f64)>> = Vec::new();
        let mut max_r = 0;
        for (line, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::invalid(format!("ledger line {}: {e}", line + 2)))?;
            let b = *index.entry(row.asset_id.clone()).or_insert_with(|| {
                order.push(row.asset_id.clone());
                cells.push(HashMap::new());
                order.len() - 1
            });
            max_r = max_r.max(row.realization_id);
            if cells[b]
                .insert(row.realization_id, (row.class_hash, row.loss))
                .is_some()
            {
                return Err(Error::invalid(format!(
                    "ledger repeats realization {} for `{}`",
                    row.realization_id, row.asset_id
                )));
            }
        }
        if order.is_empty() {
            return Err(Error::invalid("empty ledger"));
        }
        let r = max_r + 1;
        let mut class_keys = Vec::new();
        let mut classes = Vec::new();
        let mut losses = Vec::new();
        for (b, id) in order.iter().enumerate() {
            if cells[b].len() != r {
                return Err(Error::invalid(format!(
                    "ledger column mismatch: `{id}` lacks realizations"
                )));
            }
            let mut keys: Vec<String> = Vec::new();
            let mut key_index: HashMap<String, u32> = HashMap::new();
            let mut cls = Vec::with_capacity(r);
            let mut ls = Vec::with_capacity(r);
            for j in 0..r {
                let (key, loss) = &cells[b][&j];
                let c = *key_index.entry(key.clone()).or_insert_with(|| {
                    keys.push(key.clone());
                    keys.len() as u32 - 1
                });
                cls.push(c);
                ls.push(*loss);
            }
            class_keys.push(keys);
            classes.push(cls);
            losses.push(ls);
        }
        Self::new(order, class_keys, classes, losses)
    }
}

/// 64-bit FNV-1a of a class key, as 16 hex digits.
pub fn class_hash(key: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in key.bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scope {
    Bridge { asset_id: String },
    Regional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStat {
    pub class: String,
    pub count: usize,
    pub probability: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    pub scope: Scope,
    pub realizations: usize,
    pub mean: f64,
    pub baseline_var: f64,
    pub exposure_var: f64,
    pub total_var: f64,
    #[serde(default)]
    pub bias: Option<f64>,
    pub class_stats: Vec<ClassStat>,
    /// Classes observed exactly once; their conditional variance is taken as 0.
    pub singleton_classes: usize,
}

impl VarianceDecomposition {
    pub fn asset_id(&self) -> Option<&str> {
        match &self.scope {
            Scope::Bridge { asset_id } => Some(asset_id),
            Scope::Regional => None,
        }
    }

    fn cv(&self, var: f64) -> f64 {
        if self.mean == 0.0 {
            0.0
        } else {
            var.sqrt() / self.mean
        }
    }

    pub fn cv_total(&self) -> f64 {
        self.cv(self.total_var)
    }

    pub fn cv_baseline(&self) -> f64 {
        self.cv(self.baseline_var)
    }

    pub fn cv_exposure(&self) -> f64 {
        self.cv(self.exposure_var)
    }
}

/// Algorithm-1 estimator on one series of `(class, value)` realizations.
pub fn decompose_series(
    scope: Scope,
    classes: &[u32],
    values: &[f64],
    class_keys: &[String],
) -> Result<VarianceDecomposition> {
    let r = values.len();
    if r < 2 {
        return Err(Error::invalid(format!("need at least 2 realizations, got {r}")));
    }
    if classes.len() != r {
        return Err(Error::invalid("class and value series differ in length"));
    }
    let n_classes = classes.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut moments = vec![RunningMoments::default(); n_classes];
    for (&c, &v) in classes.iter().zip(values) {
        moments[c as usize].push(v);
    }
    let stats: Vec<ClassStat> = moments
        .iter()
        .enumerate()
        .filter(|(_, m)| m.count() > 0)
        .map(|(i, m)| ClassStat {
            class: class_keys.get(i).cloned().unwrap_or_else(|| i.to_string()),
            count: m.count(),
            probability: m.count() as f64 / r as f64,
            mean: m.mean(),
            variance: m.sample_variance(),
        })
        .collect();
    Ok(from_class_stats(scope, r, stats))
}

fn from_class_stats(scope: Scope, r: usize, class_stats: Vec<ClassStat>) -> VarianceDecomposition {
    let mean = kahan_sum(class_stats.iter().map(|s| s.probability * s.mean));
    let baseline_var = kahan_sum(class_stats.iter().map(|s| s.probability * s.variance));
    let exposure_var = kahan_sum(
        class_stats
            .iter()
            .map(|s| s.probability * (s.mean - mean) * (s.mean - mean)),
    );
    VarianceDecomposition {
        scope,
        realizations: r,
        mean,
        baseline_var,
        exposure_var,
        total_var: baseline_var + exposure_var,
        bias: None,
        singleton_classes: class_stats.iter().filter(|s| s.count == 1).count(),
        class_stats,
    }
}

pub fn decompose_bridge(ledger: &RealizationLedger, asset_id: &str) -> Result<VarianceDecomposition> {
    let b = ledger
        .asset_index(asset_id)
        .ok_or_else(|| Error::UnknownAsset(asset_id.to_string()))?;
    decompose_index(ledger, b)
}

fn decompose_index(ledger: &RealizationLedger, b: usize) -> Result<VarianceDecomposition> {
    decompose_series(
        Scope::Bridge {
            asset_id: ledger.asset_ids[b].clone(),
        },
        &ledger.classes[b],
        &ledger.losses[b],
        &ledger.class_keys[b],
    )
}

/// Bridge decompositions for every asset, in ledger order.
pub fn decompose_all(ledger: &RealizationLedger) -> Result<Vec<VarianceDecomposition>> {
    (0..ledger.n_assets())
        .into_par_iter()
        .map(|b| decompose_index(ledger, b))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionalRoute {
    #[default]
    Auto,
    Pairwise,
    JointClass,
    Factorized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalReport {
    pub decomposition: VarianceDecomposition,
    pub route: RegionalRoute,
    /// `Σ_b σ̂²_base,b`.
    pub sum_bridge_baseline: f64,
    /// `2 Σ_{b<b'} Ê[Cov(L_b, L_b' | classes)]`.
    pub cross_baseline: f64,
    /// `Σ_b σ̂²_e,b`.
    pub sum_bridge_exposure: f64,
    /// `2 Σ_{b<b'} Cov(μ̂_b|·, μ̂_b'|·)`.
    pub cross_exposure: f64,
    /// Joint cells (pairwise) or joint classes with at most one realization.
    pub small_cells: usize,
    pub joint_classes: Option<usize>,
}

fn joint_class_ids(ledger: &RealizationLedger) -> (Vec<u32>, usize) {
    let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
    let ids = (0..ledger.n_realizations())
        .map(|r| {
            let key: Vec<u32> = ledger.classes.iter().map(|c| c[r]).collect();
            let next = index.len() as u32;
            *index.entry(key).or_insert(next)
        })
        .collect();
    (ids, index.len())
}

pub fn decompose_regional(ledger: &RealizationLedger, route: RegionalRoute) -> Result<RegionalReport> {
    let bridges = decompose_all(ledger)?;
    let sum_base = kahan_sum(bridges.iter().map(|d| d.baseline_var));
    let sum_exp = kahan_sum(bridges.iter().map(|d| d.exposure_var));
    let r = ledger.n_realizations();

    if ledger.n_assets() == 1 {
        let mut d = bridges.into_iter().next().expect("one asset");
        d.scope = Scope::Regional;
        return Ok(RegionalReport {
            route,
            sum_bridge_baseline: d.baseline_var,
            cross_baseline: 0.0,
            sum_bridge_exposure: d.exposure_var,
            cross_exposure: 0.0,
            small_cells: d.singleton_classes,
            joint_classes: None,
            decomposition: d,
        });
    }

    let mut joint = None;
    let route = match route {
        RegionalRoute::Auto if ledger.n_assets() <= PAIRWISE_MAX_ASSETS => RegionalRoute::Pairwise,
        RegionalRoute::Auto => {
            let (ids, n) = joint_class_ids(ledger);
            let occupancy = r as f64 / n as f64;
            joint = Some((ids, n));
            if occupancy >= JOINT_MIN_OCCUPANCY {
                RegionalRoute::JointClass
            } else {
                RegionalRoute::Factorized
            }
        }
        other => other,
    };

    match route {
        RegionalRoute::JointClass => {
            let (ids, n) = joint.unwrap_or_else(|| joint_class_ids(ledger));
            let keys: Vec<String> = (0..n).map(|i| format!("joint#{i}")).collect();
            let mut d = decompose_series(Scope::Regional, &ids, &ledger.regional, &keys)?;
            if n > 256 {
                d.class_stats.clear();
            }
            Ok(RegionalReport {
                route,
                sum_bridge_baseline: sum_base,
                cross_baseline: d.baseline_var - sum_base,
                sum_bridge_exposure: sum_exp,
                cross_exposure: d.exposure_var - sum_exp,
                small_cells: d.singleton_classes,
                joint_classes: Some(n),
                decomposition: d,
            })
        }
        RegionalRoute::Pairwise => pairwise(ledger, &bridges, sum_base, sum_exp),
        RegionalRoute::Factorized => factorized(ledger, &bridges, sum_base, sum_exp),
        RegionalRoute::Auto => unreachable!("resolved above"),
    }
}

fn conditional_means(ledger: &RealizationLedger, d: &[VarianceDecomposition], b: usize) -> Vec<f64> {
    let mut means = vec![0.0; ledger.class_keys[b].len()];
    for s in &d[b].class_stats {
        if let Some(i) = ledger.class_keys[b].iter().position(|k| *k == s.class) {
            means[i] = s.mean;
        }
    }
    means
}

fn regional_from_parts(
    ledger: &RealizationLedger,
    bridges: &[VarianceDecomposition],
    route: RegionalRoute,
    parts: [f64; 4],
    small_cells: usize,
) -> RegionalReport {
    let [sum_base, cross_base, sum_exp, cross_exp] = parts;
    let baseline_var = (sum_base + cross_base).max(0.0);
    let exposure_var = (sum_exp + cross_exp).max(0.0);
    RegionalReport {
        decomposition: VarianceDecomposition {
            scope: Scope::Regional,
            realizations: ledger.n_realizations(),
            mean: kahan_sum(bridges.iter().map(|d| d.mean)),
            baseline_var,
            exposure_var,
            total_var: baseline_var + exposure_var,
            bias: None,
            class_stats: Vec::new(),
            singleton_classes: small_cells,
        },
        route,
        sum_bridge_baseline: sum_base,
        cross_baseline: cross_base,
        sum_bridge_exposure: sum_exp,
        cross_exposure: cross_exp,
        small_cells,
        joint_classes: None,
    }
}

fn pairwise(
    ledger: &RealizationLedger,
    bridges: &[VarianceDecomposition],
    sum_base: f64,
    sum_exp: f64,
) -> Result<RegionalReport> {
    let n = ledger.n_assets();
    let r = ledger.n_realizations() as f64;
    let means: Vec<Vec<f64>> = (0..n).map(|b| conditional_means(ledger, bridges, b)).collect();
    let per_bridge: Vec<(f64, f64, usize)> = (0..n)
        .into_par_iter()
        .map(|b| {
            let nb = ledger.class_keys[b].len();
            let mut base = KahanSum::new();
            let mut exp = KahanSum::new();
            let mut small = 0;
            for b2 in b + 1..n {
                let nb2 = ledger.class_keys[b2].len();
                let mut cells = vec![RunningCovariance::default(); nb * nb2];
                for ((&ci, &cj), (&x, &y)) in ledger.classes[b]
                    .iter()
                    .zip(&ledger.classes[b2])
                    .zip(ledger.losses[b].iter().zip(&ledger.losses[b2]))
                {
                    cells[ci as usize * nb2 + cj as usize].push(x, y);
                }
                for (idx, cell) in cells.iter().enumerate() {
                    if cell.count() == 0 {
                        continue;
                    }
                    if cell.count() == 1 {
                        small += 1;
                    }
                    let weight = cell.count() as f64 / r;
                    let (i, j) = (idx / nb2, idx % nb2);
                    base.add(weight * cell.sample_covariance());
                    exp.add(weight * (means[b][i] - bridges[b].mean) * (means[b2][j] - bridges[b2].mean));
                }
            }
            (base.value(), exp.value(), small)
        })
        .collect();
    let cross_base = 2.0 * kahan_sum(per_bridge.iter().map(|p| p.0));
    let cross_exp = 2.0 * kahan_sum(per_bridge.iter().map(|p| p.1));
    let small = per_bridge.iter().map(|p| p.2).sum();
    Ok(regional_from_parts(
        ledger,
        bridges,
        RegionalRoute::Pairwise,
        [sum_base, cross_base, sum_exp, cross_exp],
        small,
    ))
}

fn factorized(
    ledger: &RealizationLedger,
    bridges: &[VarianceDecomposition],
    sum_base: f64,
    sum_exp: f64,
) -> Result<RegionalReport> {
    let n = ledger.n_assets();
    let r = ledger.n_realizations();
    let means: Vec<Vec<f64>> = (0..n).map(|b| conditional_means(ledger, bridges, b)).collect();
    let mut cross_base = KahanSum::new();
    let mut cross_exp = KahanSum::new();
    for j in 0..r {
        let mut sum_d = KahanSum::new();
        let mut sum_e = KahanSum::new();
        let mut sq_d = KahanSum::new();
        let mut sq_e = KahanSum::new();
        for b in 0..n {
            let cm = means[b][ledger.classes[b][j] as usize];
            let d = cm - bridges[b].mean;
            let e = ledger.losses[b][j] - cm;
            sum_d.add(d);
            sum_e.add(e);
            sq_d.add(d * d);
            sq_e.add(e * e);
        }
        cross_exp.add(sum_d.value() * sum_d.value() - sq_d.value());
        cross_base.add(sum_e.value() * sum_e.value() - sq_e.value());
    }
    let small = bridges.iter().map(|d| d.singleton_classes).sum();
    Ok(regional_from_parts(
        ledger,
        bridges,
        RegionalRoute::Factorized,
        [
            sum_base,
            cross_base.value() / (r - 1) as f64,
            sum_exp,
            cross_exp.value() / r as f64,
        ],
        small,
    ))
}

/// Standard errors of the regional mean, baseline and exposure variance
/// from `batches` contiguous batches of realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchStandardErrors {
    pub mean: f64,
    pub baseline_var: f64,
    pub exposure_var: f64,
    pub total_var: f64,
}

pub fn batch_standard_errors(
    ledger: &RealizationLedger,
    route: RegionalRoute,
    batches: usize,
) -> Result<BatchStandardErrors> {
    let r = ledger.n_realizations();
    if batches < 2 || r / batches < 2 {
        return Err(Error::invalid("need at least 2 batches of at least 2 realizations"));
    }
    let size = r / batches;
    let reports = (0..batches)
        .map(|k| decompose_regional(&ledger.slice(k * size..(k + 1) * size)?, route))
        .collect::<Result<Vec<_>>>()?;
    let se = |f: &dyn Fn(&VarianceDecomposition) -> f64| {
        let xs: Vec<f64> = reports.iter().map(|rep| f(&rep.decomposition)).collect();
        // batch estimates scale as 1/size; rescale to the full ledger
        (crate::stats::sample_variance(&xs) / batches as f64).sqrt()
    };
    Ok(BatchStandardErrors {
        mean: se(&|d| d.mean),
        baseline_var: se(&|d| d.baseline_var),
        exposure_var: se(&|d| d.exposure_var),
        total_var: se(&|d| d.total_var),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanBias {
    pub scope: String,
    pub mean_imputed: f64,
    pub mean_truth: f64,
    pub bias: f64,
    /// Bias as a percentage of the ground-truth mean (0 when that mean is 0).
    pub percent: f64,
}

impl MeanBias {
    fn new(scope: String, imputed: &[f64], truth: &[f64]) -> Self {
        let mi = kahan_sum(imputed.iter().copied()) / imputed.len() as f64;
        let mt = kahan_sum(truth.iter().copied()) / truth.len() as f64;
        let bias = mi - mt;
        Self {
            scope,
            mean_imputed: mi,
            mean_truth: mt,
            bias,
            percent: if mt == 0.0 { 0.0 } else { 100.0 * bias / mt },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub per_asset: Vec<MeanBias>,
    pub regional: MeanBias,
}

/// Signed mean bias of the imputed run relative to the ground-truth run.
pub fn bias_report(imputed: &RealizationLedger, truth: &RealizationLedger) -> Result<BiasReport> {
    if imputed.asset_ids != truth.asset_ids {
        return Err(Error::invalid("imputed and truth ledgers cover different assets"));
    }
    if imputed.n_realizations() != truth.n_realizations() {
        return Err(Error::invalid(
            "imputed and truth ledgers have different realization counts",
        ));
    }
    let per_asset = imputed
        .asset_ids
        .iter()
        .enumerate()
        .map(|(b, id)| MeanBias::new(id.clone(), &imputed.losses[b], &truth.losses[b]))
        .collect();
    Ok(BiasReport {
        per_asset,
        regional: MeanBias::new("regional".into(), &imputed.regional, &truth.regional),
    })
}
