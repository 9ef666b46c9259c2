use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qcorr::analyze::{analyze, default_output_dir, parse_axis, parse_bins, AnalyzeRequest};
use qcorr::config::ScenarioConfig;
use qcorr::correlator_norm;
use qcorr::manifest::verify_bundle;
use qcorr::scenarios::run_scenario;
use qcorr::CliError;
use qcorr_core::correlator::TransverseGates;
use qcorr_core::RngSpec;

/// Event-level simulator and estimator suite for second-order coherence
/// experiments.
#[derive(Parser)]
#[command(name = "qcorr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named scenario from a JSON config and write its artifact
    /// bundle.
    Run {
        /// Path to the run configuration (JSON).
        config: PathBuf,
        /// Also evaluate the scenario's acceptance assertions.
        #[arg(long)]
        check: bool,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate g² (and the classicality verdict) from an event CSV.
    Analyze {
        /// Path to an event CSV (`shot_id,x_mm,y_mm,t_ns`).
        events: PathBuf,
        /// Separation axis: dx, dy, dt or r (transverse radius).
        #[arg(long)]
        axis: String,
        /// Linear bins LO:HI:N.
        #[arg(long)]
        bins: String,
        /// Normalization: mixed (shot-mixed) or singles.
        #[arg(long, default_value = "mixed")]
        norm: String,
        /// Shots mixed with each shot under --norm mixed.
        #[arg(long, default_value_t = 8)]
        partners: usize,
        /// Transverse gate half-widths.
        #[arg(long)]
        gate_x: Option<f64>,
        #[arg(long)]
        gate_y: Option<f64>,
        #[arg(long)]
        gate_t: Option<f64>,
        /// Output directory (default: alongside the events file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Shuffle events across shots first (null test; uses this seed).
        #[arg(long)]
        shuffle_seed: Option<u64>,
    },
    /// Verify the digests of a previously written artifact bundle.
    Verify {
        /// Bundle directory containing manifest.json.
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    qcorr::init_thread_pool();
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            check,
            out,
            seed,
        } => {
            let bytes = std::fs::read(&config)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
            let mut scenario_config = ScenarioConfig::from_json(&bytes)?;
            if let Some(seed) = seed {
                scenario_config.rng = RngSpec::new(seed, scenario_config.rng.stream_id);
            }
            let outdir = out
                .or_else(|| scenario_config.output_dir.clone().map(PathBuf::from))
                .ok_or_else(|| {
                    CliError::Config("no output directory (set output_dir or pass --out)".into())
                })?;
            let report = run_scenario(&scenario_config, &outdir, check)?;
            println!(
                "wrote {} outputs to {}",
                report.manifest.outputs.len(),
                report.output_dir.display()
            );
            let mut failed = 0;
            for check in &report.checks {
                let status = if check.pass { "PASS" } else { "FAIL" };
                println!("{status}: {} — {}", check.name, check.detail);
                if !check.pass {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(CliError::ChecksFailed { failed });
            }
            Ok(())
        }
        Command::Analyze {
            events,
            axis,
            bins,
            norm,
            partners,
            gate_x,
            gate_y,
            gate_t,
            out,
            shuffle_seed,
        } => {
            let request = AnalyzeRequest {
                output_dir: out.unwrap_or_else(|| default_output_dir(&events)),
                events_path: events,
                axis: parse_axis(&axis)?,
                bins: parse_bins(&bins)?,
                normalization: correlator_norm(&norm, partners)?,
                gates: TransverseGates {
                    x: gate_x,
                    y: gate_y,
                    t: gate_t,
                },
                shuffle: shuffle_seed.map(|s| RngSpec::new(s, 0)),
            };
            let output = analyze(&request)?;
            println!(
                "analyzed {} events in {} shots -> {} and {}",
                output.n_events,
                output.n_shots,
                output.curve_path.display(),
                output.verdict_path.display()
            );
            Ok(())
        }
        Command::Verify { dir } => {
            let manifest = verify_bundle(&dir)?;
            println!(
                "verified {} outputs of scenario {}",
                manifest.outputs.len(),
                manifest.scenario
            );
            Ok(())
        }
    }
}
