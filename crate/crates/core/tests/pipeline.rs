use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use exposure_uq::analysis::{one_way_sensitivity, prioritize, SensitivitySource};
use exposure_uq::decomposition::{
    batch_standard_errors, decompose_all, decompose_regional, RealizationLedger, RegionalRoute,
};
use exposure_uq::pipeline::{load_inputs, run, validate, RunConfig, RunMode};
use exposure_uq::simulation::{simulate, what_if_inspect, PortfolioModel, SimulationSettings};
use exposure_uq::Error;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/five_bridge")
}

/// Copy the fixture into a scratch directory so tests can edit inputs.
fn scratch_fixture() -> (TempDir, RunConfig) {
    let tmp = TempDir::new().unwrap();
    for entry in fs::read_dir(fixture_dir()).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            fs::copy(entry.path(), tmp.path().join(entry.file_name())).unwrap();
        }
    }
    let mut config = RunConfig::from_file(tmp.path().join("config.toml")).unwrap();
    config.output.dir = tmp.path().join("out");
    (tmp, config)
}

fn edit_json(path: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

fn column_means(path: &Path) -> Vec<(String, f64)> {
    let ledger = RealizationLedger::read_csv(fs::File::open(path).unwrap()).unwrap();
    ledger
        .asset_ids()
        .iter()
        .enumerate()
        .map(|(b, id)| {
            let l = ledger.losses(b);
            (id.clone(), l.iter().sum::<f64>() / l.len() as f64)
        })
        .collect()
}

#[test]
fn fixture_bias_report_matches_golden_and_ledgers() {
    let (_tmp, config) = scratch_fixture();
    let summary = run(&config).unwrap();
    let out = &summary.out_dir;
    let got: Value = serde_json::from_str(&fs::read_to_string(out.join("bias_report.json")).unwrap()).unwrap();
    let golden: Value =
        serde_json::from_str(&fs::read_to_string(fixture_dir().join("golden/bias_report.json")).unwrap()).unwrap();
    assert_eq!(got, golden);

    // audit the golden values against the ledgers they summarize
    let imputed = column_means(&out.join("ledger.csv"));
    let truth = column_means(&out.join("ledger_truth.csv"));
    let per_asset = golden["per_asset"].as_array().unwrap();
    let mut bias_sum = 0.0;
    for ((row, (id, mi)), (_, mt)) in per_asset.iter().zip(&imputed).zip(&truth) {
        assert_eq!(row["scope"], id.as_str());
        let (gi, gt, gb) = (
            row["mean_imputed"].as_f64().unwrap(),
            row["mean_truth"].as_f64().unwrap(),
            row["bias"].as_f64().unwrap(),
        );
        assert!((gi - mi).abs() <= 1e-9 * mi.abs());
        assert!((gt - mt).abs() <= 1e-9 * mt.abs());
        assert!((gb - (gi - gt)).abs() <= 1e-6);
        bias_sum += gb;
    }
    assert!((golden["regional"]["bias"].as_f64().unwrap() - bias_sum).abs() < 1e-6 * bias_sum.abs().max(1.0));
    // B05 has every class attribute known, so both runs draw the same losses
    assert_eq!(per_asset[4]["bias"].as_f64().unwrap(), 0.0);
}

#[test]
fn fixture_run_is_byte_identical_across_runs() {
    let (tmp, mut config) = scratch_fixture();
    let a = run(&config).unwrap();
    config.output.dir = tmp.path().join("again");
    let b = run(&config).unwrap();
    assert_eq!(a.artifacts, b.artifacts);
    for f in &a.artifacts {
        assert_eq!(
            fs::read(a.out_dir.join(f)).unwrap(),
            fs::read(b.out_dir.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let rows = fs::read_to_string(a.out_dir.join("ledger.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(rows, 5 * 20 * 50);
}

#[test]
fn truth_mode_has_no_exposure_variance() {
    let (_tmp, mut config) = scratch_fixture();
    config.simulation.mode = RunMode::Truth;
    config.analysis.what_if = None;
    config.analysis.sensitivity.clear();
    let summary = run(&config).unwrap();
    assert_eq!(summary.regional.exposure_var, 0.0);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(summary.out_dir.join("decomposition.json")).unwrap()).unwrap();
    for b in report["bridges"].as_array().unwrap() {
        assert_eq!(b["exposure_var"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn validate_accepts_complete_fixture() {
    let (_tmp, config) = scratch_fixture();
    assert_eq!(validate(&config), vec![]);
}

#[test]
fn validate_names_class_and_component_for_a_missing_curve() {
    let (tmp, config) = scratch_fixture();
    edit_json(&tmp.path().join("fragility.json"), |v| {
        let curves = v["curves"].as_array_mut().unwrap();
        curves.retain(|c| !(c["component"] == "column" && c["class"]["bent_type"] == "MCB"));
    });
    let findings = validate(&config);
    assert!(!findings.is_empty());
    for f in &findings {
        assert!(
            f.subject.contains("bent_type=MCB") && f.subject.ends_with(", column)"),
            "{f:?}"
        );
        assert_eq!(f.message, "no fragility curve");
    }
}

#[test]
fn validate_reports_missing_damage_state_cost() {
    let (tmp, config) = scratch_fixture();
    edit_json(&tmp.path().join("loss_model.json"), |v| {
        let costs = v["unit_costs"].as_array_mut().unwrap();
        costs.retain(|c| !(c["component"] == "bearing" && c["state"] == 3));
    });
    let findings = validate(&config);
    assert!(!findings.is_empty());
    assert!(findings
        .iter()
        .all(|f| f.subject.ends_with(", bearing)") && f.message == "no unit cost for damage state 3"));
}

#[test]
fn failed_run_leaves_no_partial_output() {
    let (tmp, mut config) = scratch_fixture();
    config.analysis.what_if = Some(tmp.path().join("no_such_selection.txt").display().to_string());
    let err = run(&config).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
    assert!(!config.output.dir.exists());
    let leftovers: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".partial-"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn simulation_does_not_depend_on_worker_count() {
    let (_tmp, config) = scratch_fixture();
    let inputs = load_inputs(&config).unwrap();
    let model = PortfolioModel::imputed(&inputs).unwrap();
    let settings = SimulationSettings::new(8, 25, 99);
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| simulate(&model, &settings)).unwrap();
    let three = pool(3).install(|| simulate(&model, &settings)).unwrap();
    assert_eq!(one.ledger, three.ledger);
    assert_eq!(one.fields, three.fields);
}

#[test]
fn inspecting_top_bridges_leaves_others_untouched() {
    let (_tmp, config) = scratch_fixture();
    let inputs = load_inputs(&config).unwrap();
    let model = PortfolioModel::imputed(&inputs).unwrap();
    let settings = SimulationSettings::new(40, 100, 2024);
    let before = simulate(&model, &settings).unwrap().ledger;
    let ranking = prioritize(&decompose_all(&before).unwrap()).unwrap();
    let selection = ranking.selection(0.4).unwrap();
    assert_eq!(selection.len(), 2);

    let inspected = what_if_inspect(
        &inputs.inventory,
        &model.distributions(),
        &selection,
        &inputs.class_attributes,
    )
    .unwrap();
    let after = simulate(&PortfolioModel::new(&inputs, inspected).unwrap(), &settings)
        .unwrap()
        .ledger;
    let after_bridges = decompose_all(&after).unwrap();
    for (b, id) in before.asset_ids().iter().enumerate() {
        if selection.contains(id) {
            assert_eq!(after_bridges[b].exposure_var, 0.0);
        } else {
            assert_eq!(before.losses(b), after.losses(b), "{id}");
            assert_eq!(before.classes(b), after.classes(b), "{id}");
        }
    }

    // oracle: regional exposure of the bridges left uninspected
    let keep: Vec<usize> = (0..before.n_assets())
        .filter(|b| !selection.contains(&before.asset_ids()[*b]))
        .collect();
    let restricted = RealizationLedger::new(
        keep.iter().map(|&b| before.asset_ids()[b].clone()).collect(),
        keep.iter().map(|&b| before.class_keys(b).to_vec()).collect(),
        keep.iter().map(|&b| before.classes(b).to_vec()).collect(),
        keep.iter().map(|&b| before.losses(b).to_vec()).collect(),
    )
    .unwrap();
    let oracle = decompose_regional(&restricted, RegionalRoute::Pairwise)
        .unwrap()
        .decomposition;
    let got = decompose_regional(&after, RegionalRoute::Pairwise)
        .unwrap()
        .decomposition;
    let before_regional = decompose_regional(&before, RegionalRoute::Pairwise)
        .unwrap()
        .decomposition;
    let se = batch_standard_errors(&after, RegionalRoute::Pairwise, 20).unwrap();
    assert!(
        (got.exposure_var - oracle.exposure_var).abs() <= 3.0 * se.exposure_var,
        "{} vs {} (se {})",
        got.exposure_var,
        oracle.exposure_var,
        se.exposure_var
    );
    assert!(got.exposure_var < before_regional.exposure_var);
}

/// One bridge whose two equally likely classes lose exactly 10 or 20.
fn write_two_point_case(dir: &Path) -> RunConfig {
    let files = [
        (
            "schema.json",
            r#"{"attributes": [
                {"name": "n_spans", "kind": "discrete_count", "values": ["1","2"]},
                {"name": "bent_type", "kind": "categorical", "values": ["SCB","MCB"]},
                {"name": "n_col", "kind": "discrete_count", "values": ["1","2"]},
                {"name": "abutment_type", "kind": "categorical", "values": ["D","S"]}
            ]}"#,
        ),
        (
            "inventory.csv",
            "asset_id,lat,lon,n_spans,bent_type,n_col,abutment_type\nX1,34.0,-118.2,2,,,D\n",
        ),
        (
            "scores.json",
            r#"{"assets": {"X1": {
                "bent_type": {"probs": [0.5, 0.5]},
                "n_col": {"conditional_on": "bent_type", "table": {"SCB": {"probs": [1, 0]}, "MCB": {"probs": [0, 1]}}}
            }}}"#,
        ),
        (
            "fragility.json",
            r#"{"curves": [{"component": "column", "class": {}, "medians": [1e-6], "dispersions": [0.1]}],
                "collapse": {"triggers": []}}"#,
        ),
        (
            "loss_model.json",
            r#"{"unit_costs": [{"component": "column", "state": 1, "median": 10, "dispersion": 0}],
                "replacement_cost": {"rule": "flat", "value": 1000000}}"#,
        ),
        (
            "hazard.json",
            r#"{"attenuation": {"magnitude": 6.5, "source_lat": 34.1, "source_lon": -118.3, "a0": -2.0, "a1": 0.8, "a2": -1.1, "c": 10.0},
                "tau": 0.3, "phi": 0.5, "correlation_range_km": 20.0}"#,
        ),
        (
            "config.toml",
            r#"[paths]
inventory = "inventory.csv"
schema = "schema.json"
scores = "scores.json"
fragility = "fragility.json"
loss_model = "loss_model.json"
hazard = "hazard.json"

[simulation]
n_maps = 10
realizations_per_map = 400
master_seed = 5

[exposure]
class_attributes = ["bent_type", "n_col"]

[output]
dir = "out"
"#,
        ),
    ];
    for (name, text) in files {
        fs::write(dir.join(name), text).unwrap();
    }
    RunConfig::from_file(dir.join("config.toml")).unwrap()
}

#[test]
fn exposure_only_sensitivity_on_a_two_point_loss() {
    let tmp = TempDir::new().unwrap();
    let config = write_two_point_case(tmp.path());
    assert_eq!(validate(&config), vec![]);
    let inputs = load_inputs(&config).unwrap();
    let model = PortfolioModel::imputed(&inputs).unwrap();
    let settings = config.settings();
    let run = one_way_sensitivity(&model, &settings, SensitivitySource::Exposure).unwrap();
    assert_eq!(run.quantiles[0], 10.0);
    assert_eq!(run.quantiles[4], 20.0);

    // exact variance of the realized 10/20 sample
    let mut frozen = settings;
    frozen.frozen = SensitivitySource::Exposure.frozen();
    let ledger = simulate(&model, &frozen).unwrap().ledger;
    let values = ledger.regional();
    assert!(values.iter().all(|v| *v == 10.0 || *v == 20.0));
    let n = values.len() as f64;
    let p = values.iter().filter(|v| **v == 20.0).count() as f64 / n;
    let exact = 100.0 * p * (1.0 - p) * n / (n - 1.0);
    assert!((run.variance - exact).abs() < 1e-9);
    assert!((run.variance - 25.0).abs() < 1.5, "{}", run.variance);

    let control = one_way_sensitivity(&model, &settings, SensitivitySource::Control).unwrap();
    assert_eq!(control.variance, 0.0);
}
