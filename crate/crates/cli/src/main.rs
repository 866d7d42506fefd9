// Copyright 2026 QSDC Contributors
// SPDX-License-Identifier: Apache-2.0

//! `qsdc` command-line runner.
//!
//! Exit codes: 0 success, 1 invalid input, 2 a run that could not finish.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsdc::consensus::Backend;
use qsdc::measurement::Readout;
use qsdc::microgrid::PlantKind;
use qsdc::scenario::{self, OutputFormat, Overrides, RunOutput, ScenarioError, ScenarioKind};

const OUT_ENV: &str = "QSDC_OUT_DIR";

#[derive(Parser)]
#[command(name = "qsdc", version, about = "Quantum-secured distributed control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Consensus run on a communication graph
    Consensus(RunArgs),
    /// AC microgrid with frequency restoration
    Ac(RunArgs),
    /// DC microgrid with bus voltage restoration
    Dc(RunArgs),
    /// What an eavesdropper learns from intercepted qubits
    Eve(RunArgs),
    /// Guaranteed convergence rate of a graph
    Rate(RunArgs),
    /// Print the JSON Schema of scenario files
    Schema,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Full,
    Bloch,
    Phase,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Sampled readout with this many shots per basis
    #[arg(long, conflicts_with = "exact")]
    shots: Option<u64>,
    /// Exact expectations instead of sampled counts
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory (QSDC_OUT_DIR takes precedence)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Initial deviation bound for `rate`
    #[arg(long)]
    epsilon: Option<f64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            backend: self.backend.map(|b| match b {
                BackendArg::Full => Backend::Full,
                BackendArg::Bloch => Backend::Bloch,
                BackendArg::Phase => Backend::Phase,
            }),
            readout: match (self.shots, self.exact) {
                (Some(n), _) => Some(Readout::Shots(n)),
                (None, true) => Some(Readout::Exact),
                (None, false) => None,
            },
            seed: self.seed,
            dt: self.dt,
            epsilon: self.epsilon,
        }
    }

    fn out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.out.clone(),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), ScenarioError> {
    fs::write(path, text).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn headline(out: &RunOutput) -> String {
    match out {
        RunOutput::Consensus(_, s) => {
            let settle = s
                .summary
                .settling_time
                .map_or("never".into(), |t| format!("{t:.2}"));
            format!(
                "consensus: settled at t = {settle}, steady error {:.3e}, fitted rate {}",
                s.summary.steady_max_error,
                s.summary
                    .fitted_decay_rate
                    .map_or("n/a".into(), |r| format!("{r:.4}"))
            )
        }
        RunOutput::Plant(_, s) => {
            let settle = s.settling_time_s.map_or("never".into(), |t| format!("{t:.2} s"));
            let (what, v) = match (s.steady_freq_hz, s.steady_vbus_v) {
                (Some(f), _) => ("frequency", format!("{f:.4} Hz")),
                (_, Some(v)) => ("bus voltage", format!("{v:.4} V")),
                _ => ("output", "n/a".into()),
            };
            let plant = match s.plant {
                PlantKind::Ac => "ac",
                PlantKind::Dc => "dc",
            };
            format!(
                "{plant}: steady {what} {v}, settled {settle} after the last event, sharing spread {:.3}%",
                s.sharing_spread_pct
            )
        }
        RunOutput::Eve(e) => format!(
            "eve: naive estimate {:.4} rad against φ = {:.4}, informed {:.4}",
            e.report.naive_phi, e.phi, e.report.informed_phi
        ),
        RunOutput::Rate(r) => format!("μ = {:.4} at ε = {:.4}", r.mu, r.epsilon),
    }
}

fn run(what: ScenarioKind, args: &RunArgs) -> Result<(), ScenarioError> {
    let mut sc = scenario::parse_scenario(&args.scenario)?;
    sc.apply_overrides(&args.overrides())?;
    let out = scenario::run_scenario(&sc, what)?;
    if let RunOutput::Plant(_, s) = &out {
        if s.clamped_pinners > 0 {
            log::warn!("{} pinner values were clamped into [0, π/2]", s.clamped_pinners);
        }
    }
    let format = match args.format {
        Some(FormatArg::Csv) => OutputFormat::Csv,
        Some(FormatArg::Json) => OutputFormat::Json,
        Some(FormatArg::Both) => OutputFormat::Both,
        None => sc.outputs.format,
    };
    let stem = match (&sc.outputs.stem, what == sc.kind) {
        (Some(s), true) => s.clone(),
        (Some(s), false) => format!("{s}_{what}"),
        (None, _) => args
            .scenario
            .file_stem()
            .map_or("run".into(), |s| s.to_string_lossy().into_owned()),
    };
    let dir = args.out_dir();
    fs::create_dir_all(&dir).map_err(|e| ScenarioError::Io {
        path: dir.display().to_string(),
        msg: e.to_string(),
    })?;
    if format.csv() {
        if let Some(csv) = out.csv() {
            write(&dir.join(format!("{stem}.csv")), &csv)?;
        }
    }
    // runs without a series always get their summary
    if format.json() || out.csv().is_none() {
        write(&dir.join(format!("{stem}.json")), &out.summary_json())?;
    }
    println!("{}", headline(&out));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (what, args) = match &cli.command {
        Command::Consensus(a) => (ScenarioKind::Consensus, a),
        Command::Ac(a) => (ScenarioKind::Ac, a),
        Command::Dc(a) => (ScenarioKind::Dc, a),
        Command::Eve(a) => (ScenarioKind::Eve, a),
        Command::Rate(a) => (ScenarioKind::Rate, a),
        Command::Schema => {
            print!("{}", scenario::json_schema());
            return ExitCode::SUCCESS;
        }
    };
    match run(what, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
