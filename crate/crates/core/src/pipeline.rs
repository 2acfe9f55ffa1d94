//! Configuration, validation and the end-to-end run that writes artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    attribution_by_class, prioritize, sensitivity_table, write_sensitivity_csv, PrioritizationResult, SensitivityRun,
    SensitivitySource,
};
use crate::decomposition::{
    batch_standard_errors, bias_report, decompose_all, decompose_regional, BatchStandardErrors, BiasReport,
    RealizationLedger, RegionalReport, RegionalRoute, VarianceDecomposition,
};
use crate::error::{Error, Result};
use crate::fragility::{fragility_fan, FragilityDatabase};
use crate::hazard::HazardFile;
use crate::imputation::{
    class_key, derive_quantities, ChainConstraintSet, ChainDiagnostics, ExposureClassDistribution, QuantityRules,
    ScoreFile, TemperatureFit,
};
use crate::inventory::{load_inventory, AttributeSchema};
use crate::loss::LossModel;
use crate::simulation::{simulate, truth_class_key, what_if_inspect, ModelInputs, PortfolioModel, SimulationSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub inventory: PathBuf,
    pub schema: PathBuf,
    pub scores: PathBuf,
    #[serde(default)]
    pub constraints: Option<PathBuf>,
    pub fragility: PathBuf,
    pub loss_model: PathBuf,
    pub hazard: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Imputed,
    Truth,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_maps")]
    pub n_maps: usize,
    pub realizations_per_map: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub mode: RunMode,
}

fn default_maps() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureConfig {
    /// Attributes that define an exposure class, in chain order.
    pub class_attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub decompose: bool,
    pub route: RegionalRoute,
    pub top_fraction: f64,
    pub sensitivity: Vec<SensitivitySource>,
    /// `"top"` inspects the prioritized selection; anything else is a file
    /// of asset ids, one per line.
    pub what_if: Option<String>,
    pub plot_data: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            decompose: true,
            route: RegionalRoute::Auto,
            top_fraction: 0.1,
            sensitivity: Vec::new(),
            what_if: None,
            plot_data: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub simulation: SimulationConfig,
    pub exposure: ExposureConfig,
    #[serde(default)]
    pub rules: QuantityRules,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// TOML, or JSON when the extension is `.json`. Relative paths are taken
    /// relative to the config file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        config.rebase(base);
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        for p in [
            &mut paths.inventory,
            &mut paths.schema,
            &mut paths.scores,
            &mut paths.fragility,
            &mut paths.loss_model,
            &mut paths.hazard,
            &mut self.output.dir,
        ] {
            fix(p);
        }
        if let Some(p) = paths.constraints.as_mut() {
            fix(p);
        }
        if let Some(w) = self.analysis.what_if.as_mut() {
            if w != "top" && Path::new(w).is_relative() {
                *w = base.join(&*w).to_string_lossy().into_owned();
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        let s = &self.simulation;
        if s.n_maps < 1 {
            return Err(Error::Config("simulation.n_maps must be at least 1".into()));
        }
        if s.realizations_per_map < 2 {
            return Err(Error::Config(
                "simulation.realizations_per_map must be at least 2".into(),
            ));
        }
        let t = self.analysis.top_fraction;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Config(format!(
                "analysis.top_fraction must lie in (0, 1], got {t}"
            )));
        }
        if self.exposure.class_attributes.is_empty() {
            return Err(Error::Config("exposure.class_attributes is empty".into()));
        }
        Ok(())
    }

    pub fn settings(&self) -> SimulationSettings {
        SimulationSettings::new(
            self.simulation.n_maps,
            self.simulation.realizations_per_map,
            self.simulation.master_seed,
        )
    }
}

/// Parse every input named by `config`.
pub fn load_inputs(config: &RunConfig) -> Result<ModelInputs> {
    config.check()?;
    let p = &config.paths;
    for path in [
        &p.inventory,
        &p.schema,
        &p.scores,
        &p.fragility,
        &p.loss_model,
        &p.hazard,
    ]
    .into_iter()
    .chain(p.constraints.as_ref())
    {
        if !path.exists() {
            return Err(Error::Config(format!("input file not found: {}", path.display())));
        }
    }
    let schema = AttributeSchema::from_json_file(&p.schema)?;
    for attr in &config.exposure.class_attributes {
        if !schema.contains(attr) {
            return Err(Error::UnknownAttribute(attr.clone()));
        }
    }
    let inventory = load_inventory(&p.inventory, schema)?;
    let constraints = match &p.constraints {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let set: ChainConstraintSet = serde_json::from_str(&text)
                .map_err(|e| Error::invalid(format!("constraints {}: {e}", path.display())))?;
            set.validate(inventory.schema())?;
            set
        }
        None => ChainConstraintSet::default(),
    };
    let hazard = HazardFile::from_json_file(&p.hazard)?.resolve(&inventory)?;
    Ok(ModelInputs {
        scores: ScoreFile::from_json_file(&p.scores)?,
        fragility: FragilityDatabase::from_json_file(&p.fragility)?,
        loss: LossModel::from_json_file(&p.loss_model)?,
        rules: config.rules.clone(),
        class_attributes: config.exposure.class_attributes.clone(),
        constraints,
        hazard,
        inventory,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub subject: String,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

/// Coverage check without simulation: every class reachable by any asset
/// must have a fragility curve and unit costs for each of its components.
pub fn validate(config: &RunConfig) -> Vec<Finding> {
    let inputs = match load_inputs(config) {
        Ok(i) => i,
        Err(e) => {
            return vec![Finding {
                subject: "config".into(),
                message: e.to_string(),
            }]
        }
    };
    let mut findings = BTreeSet::new();
    let mut note = |subject: String, message: String| {
        findings.insert(Finding { subject, message });
    };
    let mode = config.simulation.mode;
    let mut reachable: Vec<Vec<ExposureClassDistribution>> = Vec::new();
    if mode != RunMode::Truth {
        match inputs.imputed_distributions() {
            Ok(d) => reachable.push(d.into_iter().map(|(d, _)| d).collect()),
            Err(e) => note("imputation".into(), e.to_string()),
        }
    }
    if mode != RunMode::Imputed {
        match inputs.truth_distributions() {
            Ok(d) => reachable.push(d),
            Err(e) => note("ground truth".into(), e.to_string()),
        }
    }
    for set in &reachable {
        for dist in set {
            let (_, asset) = inputs
                .inventory
                .find(&dist.asset_id)
                .expect("distribution of a known asset");
            if inputs.hazard.site_index(&asset.asset_id).is_none() {
                note(asset.asset_id.clone(), "no hazard site".into());
            }
            if let Err(e) = inputs.loss.replacement_median(asset) {
                note(asset.asset_id.clone(), e.to_string());
            }
            for class in &dist.classes {
                let key = class_key(&class.label);
                let quantities = match derive_quantities(asset, &class.label, &inputs.rules) {
                    Ok(q) => q,
                    Err(e) => {
                        note(format!("{} [{key}]", asset.asset_id), e.to_string());
                        continue;
                    }
                };
                let mut attributes = asset.known_attributes.clone();
                attributes.extend(class.label.clone());
                for (component, &count) in &quantities.components {
                    if count == 0 {
                        continue;
                    }
                    match inputs.fragility.resolve(&attributes, component) {
                        Ok(curve) => {
                            for k in 1..=curve.n_states() {
                                if inputs.loss.unit_cost(component, k).is_none() {
                                    note(
                                        format!("({key}, {component})"),
                                        format!("no unit cost for damage state {k}"),
                                    );
                                }
                            }
                        }
                        Err(_) => note(format!("({key}, {component})"), "no fragility curve".into()),
                    }
                }
            }
        }
    }
    findings.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub mode: String,
    pub n_maps: usize,
    pub realizations_per_map: usize,
    pub master_seed: u64,
    pub regional: RegionalReport,
    /// Batch-means standard errors of the regional terms; absent when the
    /// ledger is too short to batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard_errors: Option<BatchStandardErrors>,
    pub bridges: Vec<VarianceDecomposition>,
}

/// Number of contiguous batches behind reported standard errors.
pub const SE_BATCHES: usize = 20;

impl DecompositionReport {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("report {}: {e}", path.display())))
    }
}

/// Bridge and regional decompositions of one ledger.
pub fn decompose_ledger(
    ledger: &RealizationLedger,
    route: RegionalRoute,
) -> Result<(RegionalReport, Vec<VarianceDecomposition>)> {
    Ok((decompose_regional(ledger, route)?, decompose_all(ledger)?))
}

/// Standard errors over [`SE_BATCHES`] batches, or `None` for short ledgers.
pub fn ledger_standard_errors(ledger: &RealizationLedger, route: RegionalRoute) -> Option<BatchStandardErrors> {
    if ledger.n_realizations() < 2 * SE_BATCHES {
        return None;
    }
    batch_standard_errors(ledger, route, SE_BATCHES).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfReport {
    pub selection: Vec<String>,
    pub before: VarianceDecomposition,
    pub after: VarianceDecomposition,
    pub exposure_cv_change_percent: f64,
    pub total_cv_change_percent: f64,
    /// Regional mean bias against the ground-truth run, before and after.
    pub bias_before: Option<f64>,
    pub bias_after: Option<f64>,
}

fn percent_change(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        0.0
    } else {
        100.0 * (after - before) / before
    }
}

#[derive(Debug, Clone, Serialize)]
struct ImputationReport<'a> {
    temperatures: BTreeMap<String, f64>,
    fits: BTreeMap<String, TemperatureFit>,
    assets: Vec<AssetImputation<'a>>,
}

#[derive(Debug, Clone, Serialize)]
struct AssetImputation<'a> {
    distribution: &'a ExposureClassDistribution,
    diagnostics: &'a ChainDiagnostics,
}

/// What a completed run wrote and its headline numbers.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub artifacts: Vec<String>,
    pub regional: VarianceDecomposition,
    pub bias: Option<BiasReport>,
    pub prioritization: Option<PrioritizationResult>,
    pub sensitivity: Vec<SensitivityRun>,
}

struct Staging {
    dir: PathBuf,
    files: Vec<String>,
}

impl Staging {
    fn new(out: &Path) -> Result<Self> {
        let name = out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into());
        let dir = out.with_file_name(format!(".{name}.partial-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<std::io::BufWriter<fs::File>> {
        let path = self.dir.join(name);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(std::io::BufWriter::new(f))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Error::invalid(format!("serializing {name}: {e}")))?;
        text.push('\n');
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn commit(self, out: &Path) -> Result<Vec<String>> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        for f in &self.files {
            let target = out.join(f);
            fs::rename(self.dir.join(f), &target).map_err(|e| Error::io(&target, e))?;
        }
        fs::remove_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let mut files = self.files;
        files.sort();
        Ok(files)
    }
}

/// Execute the configured pipeline. Artifacts are staged next to the output
/// directory and moved in only after every step succeeded.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let inputs = load_inputs(config)?;
    let mut staging = Staging::new(&config.output.dir)?;
    match run_into(config, &inputs, &mut staging) {
        Ok(mut summary) => {
            summary.artifacts = staging.commit(&config.output.dir)?;
            Ok(summary)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging.dir);
            Err(e)
        }
    }
}

fn write_csv_with<F>(staging: &mut Staging, name: &str, f: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<fs::File>) -> Result<()>,
{
    let mut w = staging.create(name)?;
    f(&mut w)?;
    std::io::Write::flush(&mut w).map_err(|e| Error::io(name, e))
}

fn run_into(config: &RunConfig, inputs: &ModelInputs, staging: &mut Staging) -> Result<RunSummary> {
    let settings = config.settings();
    let mode = config.simulation.mode;
    let route = config.analysis.route;

    let imputed = if mode == RunMode::Truth {
        None
    } else {
        let d = inputs.imputed_distributions()?;
        let (temperatures, fits) = inputs.scores.resolve_temperatures(inputs.inventory.schema())?;
        staging.json(
            "imputation.json",
            &ImputationReport {
                temperatures,
                fits,
                assets: d
                    .iter()
                    .map(|(distribution, diagnostics)| AssetImputation {
                        distribution,
                        diagnostics,
                    })
                    .collect(),
            },
        )?;
        Some(PortfolioModel::new(inputs, d.into_iter().map(|(d, _)| d).collect())?)
    };
    let truth = if mode == RunMode::Imputed {
        None
    } else {
        Some(PortfolioModel::truth(inputs)?)
    };
    let primary = imputed.as_ref().or(truth.as_ref()).expect("at least one model");
    let primary_sim = simulate(primary, &settings)?;
    let truth_sim = match (&imputed, &truth) {
        (Some(_), Some(t)) => Some(simulate(t, &settings)?),
        _ => None,
    };

    write_csv_with(staging, "ground_motion.csv", |w| primary_sim.fields.write_csv(w))?;
    write_csv_with(staging, "ledger.csv", |w| primary_sim.ledger.write_csv(w))?;
    let bias = match &truth_sim {
        Some(t) => {
            write_csv_with(staging, "ledger_truth.csv", |w| t.ledger.write_csv(w))?;
            let b = bias_report(&primary_sim.ledger, &t.ledger)?;
            staging.json("bias_report.json", &b)?;
            Some(b)
        }
        None => None,
    };

    let mut summary = RunSummary {
        out_dir: config.output.dir.clone(),
        artifacts: Vec::new(),
        regional: crate::decomposition::decompose_series(
            crate::decomposition::Scope::Regional,
            &vec![0; primary_sim.ledger.n_realizations()],
            primary_sim.ledger.regional(),
            &["all".to_string()],
        )?,
        bias: bias.clone(),
        prioritization: None,
        sensitivity: Vec::new(),
    };

    if config.analysis.decompose {
        let (mut regional, mut bridges) = decompose_ledger(&primary_sim.ledger, route)?;
        if let Some(b) = &bias {
            regional.decomposition.bias = Some(b.regional.bias);
            for (d, m) in bridges.iter_mut().zip(&b.per_asset) {
                d.bias = Some(m.bias);
            }
        }
        let report = DecompositionReport {
            mode: if imputed.is_some() { "imputed" } else { "truth" }.into(),
            n_maps: settings.n_maps,
            realizations_per_map: settings.realizations_per_map,
            master_seed: settings.master_seed,
            regional: regional.clone(),
            standard_errors: ledger_standard_errors(&primary_sim.ledger, route),
            bridges: bridges.clone(),
        };
        staging.json("decomposition.json", &report)?;
        write_csv_with(staging, "bridges.csv", |w| write_bridges_csv(inputs, &bridges, w))?;
        if let Some(t) = &truth_sim {
            let (regional, bridges) = decompose_ledger(&t.ledger, route)?;
            staging.json(
                "decomposition_truth.json",
                &DecompositionReport {
                    mode: "truth".into(),
                    regional,
                    standard_errors: ledger_standard_errors(&t.ledger, route),
                    bridges,
                    ..report.clone()
                },
            )?;
        }

        let prioritization = prioritize(&bridges)?;
        let top = config.analysis.top_fraction;
        write_csv_with(staging, "prioritization.csv", |w| prioritization.write_csv(w, top))?;
        let selection = prioritization.selection(top)?;
        if config.analysis.plot_data {
            write_csv_with(staging, "cumulative_curve.csv", |w| {
                write_cumulative_curve(&prioritization, w)
            })?;
        }
        let truth_keys: BTreeMap<String, String> = inputs
            .inventory
            .assets()
            .iter()
            .map(|a| (a.asset_id.clone(), truth_class_key(a, &inputs.class_attributes)))
            .collect();
        staging.json(
            "top_attribution.json",
            &attribution_by_class(&prioritization, &selection, &truth_keys),
        )?;

        if let (Some(what_if), Some(model)) = (&config.analysis.what_if, &imputed) {
            let chosen = if what_if == "top" {
                selection.clone()
            } else {
                read_selection(Path::new(what_if))?
            };
            let inspected = what_if_inspect(
                &inputs.inventory,
                &model.distributions(),
                &chosen,
                &inputs.class_attributes,
            )?;
            let after_model = PortfolioModel::new(inputs, inspected)?;
            let after_sim = simulate(&after_model, &settings)?;
            let after = decompose_regional(&after_sim.ledger, route)?.decomposition;
            let before = regional.decomposition.clone();
            let bias_after = match &truth_sim {
                Some(t) => Some(bias_report(&after_sim.ledger, &t.ledger)?.regional.bias),
                None => None,
            };
            staging.json(
                "what_if.json",
                &WhatIfReport {
                    selection: chosen,
                    exposure_cv_change_percent: percent_change(before.cv_exposure(), after.cv_exposure()),
                    total_cv_change_percent: percent_change(before.cv_total(), after.cv_total()),
                    bias_before: bias.as_ref().map(|b| b.regional.bias),
                    bias_after,
                    before,
                    after,
                },
            )?;
        }
        summary.regional = regional.decomposition;
        summary.prioritization = Some(prioritization);
    }

    if !config.analysis.sensitivity.is_empty() {
        let runs = sensitivity_table(primary, &settings, &config.analysis.sensitivity)?;
        write_csv_with(staging, "sensitivity.csv", |w| write_sensitivity_csv(&runs, w))?;
        summary.sensitivity = runs;
    }

    if config.analysis.plot_data {
        write_csv_with(staging, "fragility_fans.csv", |w| {
            write_fragility_fans(&inputs.fragility, w)
        })?;
    }
    Ok(summary)
}

/// Asset ids, one per line; blank lines and `#` comments are ignored.
pub fn read_selection(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

/// Per-bridge table keyed by location, usable as map plot data.
fn write_bridges_csv<W: std::io::Write>(inputs: &ModelInputs, bridges: &[VarianceDecomposition], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::invalid(format!("writing bridges: {e}"));
    w.write_record([
        "asset_id",
        "lat",
        "lon",
        "mean",
        "baseline_var",
        "exposure_var",
        "total_var",
        "cv_total",
        "cv_baseline",
        "cv_exposure",
        "exposure_share",
        "bias",
        "singleton_classes",
    ])
    .map_err(err)?;
    for d in bridges {
        let id = d.asset_id().unwrap_or_default();
        let (_, asset) = inputs
            .inventory
            .find(id)
            .ok_or_else(|| Error::UnknownAsset(id.into()))?;
        let share = if d.total_var > 0.0 {
            d.exposure_var / d.total_var
        } else {
            0.0
        };
        w.write_record([
            id.to_string(),
            asset.site.lat.to_string(),
            asset.site.lon.to_string(),
            d.mean.to_string(),
            d.baseline_var.to_string(),
            d.exposure_var.to_string(),
            d.total_var.to_string(),
            d.cv_total().to_string(),
            d.cv_baseline().to_string(),
            d.cv_exposure().to_string(),
            share.to_string(),
            d.bias.map(|b| b.to_string()).unwrap_or_default(),
            d.singleton_classes.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::invalid(format!("writing bridges: {e}")))
}

fn write_cumulative_curve<W: std::io::Write>(p: &PrioritizationResult, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::invalid(format!("writing cumulative curve: {e}"));
    w.write_record(["fraction_of_bridges", "fraction_of_exposure_var"])
        .map_err(err)?;
    w.write_record(["0", "0"]).map_err(err)?;
    let n = p.ranked.len() as f64;
    for r in &p.ranked {
        w.write_record([(r.rank as f64 / n).to_string(), r.cumulative_fraction.to_string()])
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("writing cumulative curve: {e}")))
}

fn write_fragility_fans<W: std::io::Write>(db: &FragilityDatabase, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::invalid(format!("writing fragility fans: {e}"));
    w.write_record(["component", "class", "im", "state", "exceedance"])
        .map_err(err)?;
    for curve in &db.curves {
        let lo = curve.medians.iter().copied().fold(f64::INFINITY, f64::min) / 10.0;
        let hi = curve.medians.iter().copied().fold(0.0, f64::max) * 10.0;
        let n = 60;
        let ims: Vec<f64> = (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect();
        let class = class_key(&curve.class_ref);
        for (im, k, p) in fragility_fan(curve, &ims) {
            w.write_record([
                curve.component.clone(),
                class.clone(),
                im.to_string(),
                k.to_string(),
                p.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("writing fragility fans: {e}")))
}

/// One-way sensitivity for `source` (plus the all-sources reference) using
/// the configured mode's primary model.
pub fn run_sensitivity(config: &RunConfig, source: SensitivitySource) -> Result<Vec<SensitivityRun>> {
    let inputs = load_inputs(config)?;
    let model = match config.simulation.mode {
        RunMode::Truth => PortfolioModel::truth(&inputs)?,
        _ => PortfolioModel::imputed(&inputs)?,
    };
    sensitivity_table(&model, &config.settings(), &[source])
}

pub fn write_sensitivity_file(runs: &[SensitivityRun], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_sensitivity_csv(runs, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}
