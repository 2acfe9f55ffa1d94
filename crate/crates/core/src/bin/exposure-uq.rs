use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use exposure_uq::analysis::{prioritize, SensitivitySource};
use exposure_uq::decomposition::{RealizationLedger, RegionalRoute};
use exposure_uq::pipeline::{
    decompose_ledger, ledger_standard_errors, run, run_sensitivity, validate, write_sensitivity_file,
    DecompositionReport, RunConfig,
};
use exposure_uq::{Error, Result};

#[derive(Parser)]
#[command(
    name = "exposure-uq",
    version,
    about = "Exposure-uncertainty risk engine for bridge portfolios"
)]
struct Cli {
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write every artifact.
    Run { config: PathBuf },
    /// Check inputs and class/component coverage without simulating.
    Validate { config: PathBuf },
    /// Decompose a ledger CSV into bridge and regional variances.
    Decompose {
        ledger: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        route: Route,
    },
    /// Rank bridges of a decomposition report by exposure variance.
    Prioritize {
        report: PathBuf,
        #[arg(long, default_value_t = 0.10)]
        top: f64,
    },
    /// One-way sensitivity run for a single source of uncertainty.
    Sensitivity {
        config: PathBuf,
        #[arg(long)]
        source: String,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Route {
    Auto,
    Pairwise,
    JointClass,
    Factorized,
}

fn load_config(cli: &Cli, path: &PathBuf) -> Result<RunConfig> {
    let mut config = RunConfig::from_file(path)?;
    if let Some(seed) = cli.seed {
        config.simulation.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    Ok(config)
}

fn write_or_print(cli: &Cli, name: &str, content: &[u8]) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", String::from_utf8_lossy(content)),
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let config = load_config(cli, config)?;
            let summary = run(&config)?;
            let r = &summary.regional;
            println!("output: {}", summary.out_dir.display());
            println!("regional mean loss: {}", r.mean);
            println!(
                "variance: total {} = baseline {} + exposure {}",
                r.total_var, r.baseline_var, r.exposure_var
            );
            if let Some(b) = &summary.bias {
                println!(
                    "regional bias vs ground truth: {} ({:.2}%)",
                    b.regional.bias, b.regional.percent
                );
            }
            for a in &summary.artifacts {
                println!("  {a}");
            }
        }
        Command::Validate { config } => {
            let config = load_config(cli, config)?;
            let findings = validate(&config);
            if findings.is_empty() {
                println!("ok");
            } else {
                for f in &findings {
                    println!("{f}");
                }
                return Err(Error::InvalidInput(format!("{} finding(s)", findings.len())));
            }
        }
        Command::Decompose { ledger, route } => {
            let file = std::fs::File::open(ledger).map_err(|e| Error::io(ledger, e))?;
            let ledger = RealizationLedger::read_csv(std::io::BufReader::new(file))?;
            let route = match route {
                Route::Auto => RegionalRoute::Auto,
                Route::Pairwise => RegionalRoute::Pairwise,
                Route::JointClass => RegionalRoute::JointClass,
                Route::Factorized => RegionalRoute::Factorized,
            };
            let (regional, bridges) = decompose_ledger(&ledger, route)?;
            let report = DecompositionReport {
                mode: "ledger".into(),
                n_maps: 0,
                realizations_per_map: ledger.n_realizations(),
                master_seed: 0,
                standard_errors: ledger_standard_errors(&ledger, route),
                regional,
                bridges,
            };
            let mut text = serde_json::to_string_pretty(&report).map_err(|e| Error::InvalidInput(e.to_string()))?;
            text.push('\n');
            write_or_print(cli, "decomposition.json", text.as_bytes())?;
        }
        Command::Prioritize { report, top } => {
            let report = DecompositionReport::from_json_file(report)?;
            let p = prioritize(&report.bridges)?;
            let mut buf = Vec::new();
            p.write_csv(&mut buf, *top)?;
            write_or_print(cli, "prioritization.csv", &buf)?;
        }
        Command::Sensitivity { config, source } => {
            let config = load_config(cli, config)?;
            let source: SensitivitySource = source.parse()?;
            let runs = run_sensitivity(&config, source)?;
            let dir = &config.output.dir;
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(format!("sensitivity_{}.csv", source.name()));
            write_sensitivity_file(&runs, &path)?;
            for r in &runs {
                println!(
                    "{:<8} mean {:.6e} var {:.6e} q05 {:.6e} q50 {:.6e} q95 {:.6e}",
                    r.source.name(),
                    r.mean,
                    r.variance,
                    r.quantiles[0],
                    r.quantiles[2],
                    r.quantiles[4]
                );
            }
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
