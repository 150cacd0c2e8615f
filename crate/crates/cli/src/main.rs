mod config;
mod experiments;
mod output;
mod reproduce;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::Value;

use config::{apply_file, sweep_value, Config, Experiment};
use experiments::{run_point, Dim, Numerical, Table, UnitSystem};
use output::{write_json, write_table};
use reproduce::{reproduce, Figure};

#[derive(Parser)]
#[command(name = "epqed", version, about = "Emitter-cavity QED at chiral exceptional points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral density J(ω) of the chiral cavity.
    Ldos(RunArgs),
    /// Fit a Lorentzian to a two-column (ω, J) CSV.
    Fit(RunArgs),
    /// Single-excitation population dynamics.
    Dynamics(RunArgs),
    /// Spontaneous-emission spectrum.
    Spectrum(RunArgs),
    /// Eigenmodes of the coupling matrix.
    Eigen(RunArgs),
    /// Two-emitter concurrence.
    Concurrence(RunArgs),
    /// Driven steady-state g²(0).
    Blockade(RunArgs),
    /// Long-time trapped populations.
    Trapping(RunArgs),
    /// Run a canned figure pipeline and check it.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file: `key = value` lines or a flat JSON object.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Sweep one parameter: name=start:stop:count.
    #[arg(long)]
    sweep: Option<String>,
    /// Input data (same as `--set input=PATH`).
    #[arg(long)]
    input: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweeps (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    figure: Figure,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

enum Failure {
    Config(String),
    Numerical(Numerical),
    Acceptance,
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Acceptance => 4,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reproduce(a) => run_reproduce(a),
        Command::Ldos(a) => run(Experiment::Ldos, a),
        Command::Fit(a) => run(Experiment::Fit, a),
        Command::Dynamics(a) => run(Experiment::Dynamics, a),
        Command::Spectrum(a) => run(Experiment::Spectrum, a),
        Command::Eigen(a) => run(Experiment::Eigen, a),
        Command::Concurrence(a) => run(Experiment::Concurrence, a),
        Command::Blockade(a) => run(Experiment::Blockade, a),
        Command::Trapping(a) => run(Experiment::Trapping, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Numerical(e) => eprintln!("numerical failure: {e}"),
                Failure::Acceptance => eprintln!("acceptance checks failed"),
                Failure::Io(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn init_workers(n: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::Config("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.into()))?;
    }
    Ok(())
}

fn run_reproduce(a: ReproduceArgs) -> Result<(), Failure> {
    init_workers(a.workers)?;
    match reproduce(a.figure, &a.out) {
        Ok(true) => Ok(()),
        Ok(false) => Err(Failure::Acceptance),
        Err(e) => Err(Failure::Numerical(e)),
    }
}

fn resolve(exp: Experiment, a: &RunArgs) -> Result<Config, Failure> {
    let mut cfg = Config::default();
    if let Some(path) = &a.config {
        let named = apply_file(&mut cfg, path).map_err(|e| Failure::Config(e.to_string()))?;
        if let Some(named) = named.filter(|n| *n != exp) {
            return Err(Failure::Config(format!(
                "{}: config is for experiment '{named}', not '{exp}'",
                path.display()
            )));
        }
    }
    for s in &a.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set {s}: expected KEY=VALUE")))?;
        cfg.set(k.trim(), v)
            .map_err(|e| Failure::Config(format!("--set {s}: {e}")))?;
    }
    if let Some(s) = &a.sweep {
        cfg.sweep = Some(s.clone());
    }
    if let Some(i) = &a.input {
        cfg.input = Some(i.clone());
    }
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

fn sweep_dim(name: &str) -> Dim {
    match name {
        "omega_c" | "gamma" | "kappa" | "g" | "delta_0c" | "detuning" | "drive_amplitude" | "omega_min"
        | "omega_max" => Dim::Rate,
        "t_max" | "step" => Dim::Time,
        _ => Dim::One,
    }
}

fn run(exp: Experiment, a: RunArgs) -> Result<(), Failure> {
    init_workers(a.workers)?;
    let cfg = resolve(exp, &a)?;
    let units = UnitSystem::from_config(&cfg).map_err(Failure::Numerical)?;
    let tables = match cfg.sweep().map_err(Failure::Config)? {
        None => run_point(exp, &cfg).map_err(Failure::Numerical)?,
        Some(sweep) => {
            let points: Vec<Config> = sweep
                .values()
                .into_iter()
                .map(|v| {
                    let mut c = cfg.clone();
                    c.set_value(&sweep.name, sweep_value(v)).map(|_| c)
                })
                .collect::<Result<_, _>>()
                .map_err(Failure::Config)?;
            let results: Vec<_> = points
                .par_iter()
                .map(|c| {
                    run_point(exp, c).map_err(|e| {
                        Numerical(e.0.context(format!(
                            "at {} = {}",
                            sweep.name,
                            c.get_f64(&sweep.name).unwrap_or(f64::NAN)
                        )))
                    })
                })
                .collect();
            let per_point = results
                .into_iter()
                .collect::<Result<Vec<_>, _>>()
                .map_err(Failure::Numerical)?;
            stack(&sweep.name, &points, per_point)
        }
    };
    let mut files = Vec::new();
    for t in &tables {
        let path = write_table(&a.out, t, &units).map_err(Failure::Io)?;
        files.push(Value::from(file_name(&path)));
    }
    let mut sidecar = cfg.resolved(exp);
    if let Value::Object(m) = &mut sidecar {
        m.insert("outputs".into(), Value::Array(files));
    }
    write_json(&a.out.join(format!("{exp}.json")), &sidecar).map_err(Failure::Io)?;
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().unwrap_or_default().to_string_lossy().into_owned()
}

/// Concatenates per-point tables in axis order, prefixing the swept value
/// unless the table already reports it.
fn stack(name: &str, points: &[Config], per_point: Vec<Vec<Table>>) -> Vec<Table> {
    let mut out: Vec<Table> = Vec::new();
    for (cfg, tables) in points.iter().zip(per_point) {
        let v = cfg.get_f64(name).unwrap_or(f64::NAN);
        for (k, mut t) in tables.into_iter().enumerate() {
            if !t.has_column(name) {
                t.columns.insert(0, (name.to_string(), sweep_dim(name)));
                for row in &mut t.rows {
                    row.insert(0, v);
                }
            }
            match out.get_mut(k) {
                Some(acc) => acc.rows.extend(t.rows),
                None => out.push(t),
            }
        }
    }
    out
}
