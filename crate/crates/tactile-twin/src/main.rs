//! Thin command-line front end over the library: synthesize raw traces, fit
//! calibration bundles, decode recorded CSVs, replay scripted scenarios
//! through the full pipeline, and run the validation suite.
//!
//! Exit codes: 0 all assertions passed, 1 assertion failure, 2 usage or I/O
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};

use tactile_twin::calibration::{
    export_sweeps, fit_from_sweeps, generate_calibration, read_sweep_csv, write_sweep_csv,
    CalibrationGridSpec, CalibrationSet,
};
use tactile_twin::checks::{run_all, run_check, CHECK_NAMES};
use tactile_twin::error::{Result, TwinError};
use tactile_twin::params::SensorParams;
use tactile_twin::scenario::{
    decode_trace, gen_scenario, simulate_scenario, run_scenario, Scenario, ScenarioKind,
    ScenarioOverrides, SCENARIO_NAMES,
};
use tactile_twin::trace::{load_trace, write_trace_csv};

#[derive(Parser)]
#[command(name = "tactile-twin", version, about = "Multi-layer tactile sensor twin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the raw channel trace of a scripted scenario
    Simulate(SimulateArgs),
    /// Fit a calibration bundle from parameters or recorded sweeps
    Calibrate(CalibrateArgs),
    /// Decode a raw trace CSV with a calibration bundle
    Decode(DecodeArgs),
    /// Run a scripted scenario through the full decode/control pipeline
    Replay(ReplayArgs),
    /// Run validation checks and report one verdict line each
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario script to synthesize
    #[arg(long, value_parser = PossibleValuesParser::new(SCENARIO_NAMES))]
    scenario: String,
    /// Sensor parameter file; the scenario's built-in set when absent
    #[arg(long)]
    params: Option<PathBuf>,
    /// Noise RNG seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Sample-rate override, Hz
    #[arg(long)]
    rate: Option<f64>,
    /// Pin the scripted temperature to a constant, degC
    #[arg(long = "const-temp")]
    const_temp: Option<f64>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Sensor parameter file; built-in defaults when absent
    #[arg(long, conflicts_with = "sweeps")]
    params: Option<PathBuf>,
    /// Fit from a recorded sweep CSV instead of synthetic sweeps
    #[arg(long)]
    sweeps: Option<PathBuf>,
    /// Force-channel reference temperature for sweep-file fits, degC
    #[arg(long, default_value_t = 25.0)]
    t_ref: f64,
    /// Size the grid for a scenario (and default to its parameter set)
    #[arg(long, conflicts_with = "sweeps", value_parser = PossibleValuesParser::new(SCENARIO_NAMES))]
    scenario: Option<String>,
    /// Also write the synthetic sweeps behind the fit to this CSV
    #[arg(long, conflicts_with = "sweeps")]
    export_sweeps: Option<PathBuf>,
    /// Output bundle path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Trace CSV with raw channel columns
    input: PathBuf,
    /// Calibration bundle; fitted from built-in defaults when absent
    #[arg(long)]
    cal: Option<PathBuf>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Scenario script to replay
    #[arg(long, value_parser = PossibleValuesParser::new(SCENARIO_NAMES))]
    scenario: String,
    /// Sensor parameter file; the scenario's built-in set when absent
    #[arg(long)]
    params: Option<PathBuf>,
    /// Calibration bundle; fitted for the scenario when absent
    #[arg(long)]
    cal: Option<PathBuf>,
    /// Noise RNG seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Sample-rate override, Hz
    #[arg(long)]
    rate: Option<f64>,
    /// Pin the scripted temperature to a constant, degC
    #[arg(long = "const-temp")]
    const_temp: Option<f64>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Run one named check; the whole suite when absent
    #[arg(long, value_parser = PossibleValuesParser::new(CHECK_NAMES))]
    check: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Decode(args) => decode(args),
        Command::Replay(args) => replay(args),
        Command::Validate(args) => validate(args),
    }
}

/// Model and assertion failures exit 1; bad inputs and I/O exit 2.
fn exit_code_for(e: &TwinError) -> ExitCode {
    match e {
        TwinError::AtSample { .. }
        | TwinError::RangeExceeded { .. }
        | TwinError::FitToleranceExceeded { .. }
        | TwinError::DegenerateFit(_)
        | TwinError::DegenerateGain { .. } => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

/// Writes to the path when given, stdout otherwise.
fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(TwinError::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Without a file the base stands as-is; with one, the file overlays it, so
/// a scenario replay can tweak noise or a single constant without restating
/// the whole build.
fn load_params(path: Option<&Path>, base: impl FnOnce() -> SensorParams) -> Result<SensorParams> {
    match path {
        Some(p) => SensorParams::from_text_with_base(&fs::read_to_string(p)?, base()),
        None => Ok(base()),
    }
}

fn scenario_setup(
    name: &str,
    params_path: Option<&Path>,
    seed: Option<u64>,
    rate: Option<f64>,
    const_temp: Option<f64>,
) -> Result<(ScenarioKind, Scenario, SensorParams)> {
    let kind = ScenarioKind::from_name(name)?;
    let mut params = load_params(params_path, || kind.params())?;
    if let Some(s) = seed {
        params.rng_seed = s;
    }
    let overrides = ScenarioOverrides {
        sample_rate_hz: rate,
        constant_temperature_c: const_temp,
    };
    Ok((kind, gen_scenario(kind, &overrides), params))
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let (_, scn, params) = scenario_setup(
        &args.scenario,
        args.params.as_deref(),
        args.seed,
        args.rate,
        args.const_temp,
    )?;
    let trace = simulate_scenario(&scn, &params)?;
    emit(&write_trace_csv(&trace), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn calibrate(args: CalibrateArgs) -> Result<ExitCode> {
    let cal = match &args.sweeps {
        Some(path) => {
            let sweeps = read_sweep_csv(&fs::read_to_string(path)?)?;
            fit_from_sweeps(&sweeps, args.t_ref)?
        }
        None => {
            let kind = args
                .scenario
                .as_deref()
                .map(ScenarioKind::from_name)
                .transpose()?;
            let params = load_params(args.params.as_deref(), || {
                kind.map_or_else(SensorParams::default, |k| k.params())
            })?;
            let grid = match kind {
                Some(k) => k.grid_for(&params),
                None => CalibrationGridSpec::for_params(&params),
            };
            if let Some(path) = &args.export_sweeps {
                fs::write(path, write_sweep_csv(&export_sweeps(&params, &grid)?))?;
            }
            generate_calibration(&params, &grid)?
        }
    };
    emit(&cal.to_json(), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn decode(args: DecodeArgs) -> Result<ExitCode> {
    let trace = load_trace(&args.input)?;
    let cal = match &args.cal {
        Some(path) => CalibrationSet::load(path)?,
        None => {
            let params = SensorParams::default();
            generate_calibration(&params, &CalibrationGridSpec::for_params(&params))?
        }
    };
    let decoded = decode_trace(&trace, &cal)?;
    emit(&write_trace_csv(&decoded), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn replay(args: ReplayArgs) -> Result<ExitCode> {
    let (kind, scn, params) = scenario_setup(
        &args.scenario,
        args.params.as_deref(),
        args.seed,
        args.rate,
        args.const_temp,
    )?;
    let cal = match &args.cal {
        Some(path) => CalibrationSet::load(path)?,
        // Auto-calibration stands in for a bench procedure: same build,
        // noise off, so noisy replays still get a clean reference map.
        None => {
            let mut bench = params;
            bench.noise_current_ua = 0.0;
            bench.noise_freq_hz = 0.0;
            bench.noise_field_ut = 0.0;
            generate_calibration(&bench, &kind.grid_for(&bench))?
        }
    };
    let grip = kind.grip();
    let trace = run_scenario(&scn, &params, &cal, grip.as_ref())?;
    for e in &trace.handovers {
        eprintln!(
            "handover at {:.3} s (latency {:.3} s, confidence {:.2})",
            e.t_s, e.latency_s, e.confidence
        );
    }
    emit(&write_trace_csv(&trace), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let reports = match &args.check {
        Some(name) => {
            let report = run_check(name).ok_or_else(|| {
                TwinError::InvalidInput(format!(
                    "unknown check '{name}'; valid: {}",
                    CHECK_NAMES.join(", ")
                ))
            })?;
            vec![report]
        }
        None => run_all(),
    };
    let mut all_passed = true;
    for report in &reports {
        println!("{report}");
        all_passed &= report.passed;
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
