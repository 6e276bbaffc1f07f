//! `driven-lattice`: reproducible runs of the driven-lattice simulator.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;
use crate::config::RunConfig;

/// Environment variable that overrides `output.directory`.
pub const OUTPUT_DIR_ENV: &str = "DRIVEN_LATTICE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "driven-lattice", version, about = "Driven-dissipative tight-binding chain simulator")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config and the environment).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write tables as JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Hopping amplitude γ.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Field strength Ω.
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Bath coupling Γ.
    #[arg(long, global = true)]
    gamma_coupling: Option<f64>,
    /// Inverse temperature β.
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    n_k: Option<usize>,
    /// Bath levels of the finite-bath oracle.
    #[arg(long, global = true)]
    n_b: Option<usize>,
    /// Bandwidth W of the finite bath.
    #[arg(long, global = true)]
    bandwidth: Option<f64>,
    #[arg(long, global = true)]
    oracle_dt: Option<f64>,
    /// Oracle profiles are read at burn_factor/Γ.
    #[arg(long, global = true)]
    burn_factor: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// n_k(t) from the master equation, its long-time form and optionally the oracle.
    NkTrace {
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Initial occupation of the diagonal start.
        #[arg(long)]
        n0: Option<f64>,
        #[arg(long)]
        with_oracle: bool,
    },
    /// Long-time momentum profiles n(k_m) for several fields.
    NkmProfile {
        /// Comma-separated field values.
        #[arg(long, value_delimiter = ',')]
        omegas: Option<Vec<f64>>,
        #[arg(long)]
        with_oracle: bool,
    },
    /// DC current against field for each coupling in the grid.
    CurrentSweep {
        #[arg(long, value_delimiter = ',')]
        omegas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    /// Relative L1 distance between master-equation and oracle profiles over (Ω, Γ).
    NormHeatmap {
        #[arg(long, value_delimiter = ',')]
        omegas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    /// Kraus operators of the propagated channel at one momentum and time.
    KrausDump {
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Exact simulation and finite-shot tomography of the dilation circuit.
    CircuitVerify {
        #[arg(long)]
        n_target: Option<f64>,
        /// zero, plus, rx-pi-4 or custom:a,re_b,im_b
        #[arg(long)]
        init: Option<String>,
        #[arg(long)]
        shots: Option<u64>,
        /// JSON file holding a 2×2 column-stochastic confusion matrix.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
            RunConfig::from_json(&text).map_err(CliError::Validation)?
        }
        None => RunConfig::default(),
    };
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.output.directory = dir.into();
        }
    }
    if let Some(d) = &common.output_dir {
        cfg.output.directory = d.clone();
    }
    if common.json {
        cfg.output.format = config::OutputFormat::Json;
    }
    set(&mut cfg.seed, common.seed);
    set(&mut cfg.model.gamma, common.gamma);
    set(&mut cfg.model.omega, common.omega);
    set(&mut cfg.model.big_gamma, common.gamma_coupling);
    set(&mut cfg.model.beta, common.beta);
    set(&mut cfg.grid.n_k, common.n_k);
    set(&mut cfg.oracle.n_b, common.n_b);
    set(&mut cfg.oracle.w, common.bandwidth);
    if common.oracle_dt.is_some() {
        cfg.oracle.dt = common.oracle_dt;
    }
    set(&mut cfg.oracle.t_burn_factor, common.burn_factor);
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_command_overrides(cfg: &mut RunConfig, command: &Command) -> Result<(), CliError> {
    match command {
        Command::NkTrace { k, t_final, dt, n0, with_oracle } => {
            set(&mut cfg.trace.k, *k);
            if t_final.is_some() {
                cfg.trace.t_final = *t_final;
            }
            if dt.is_some() {
                cfg.trace.dt = *dt;
            }
            set(&mut cfg.trace.n0, *n0);
            cfg.trace.with_oracle |= *with_oracle;
        }
        Command::NkmProfile { omegas, .. } => set(&mut cfg.grid.profile_omegas, omegas.clone()),
        Command::CurrentSweep { omegas, gammas } => {
            set(&mut cfg.grid.omega_grid, omegas.clone());
            set(&mut cfg.grid.gamma_grid, gammas.clone());
        }
        Command::NormHeatmap { omegas, gammas } => {
            set(&mut cfg.grid.heatmap_omega, omegas.clone());
            set(&mut cfg.grid.heatmap_gamma, gammas.clone());
        }
        Command::KrausDump { k, t, dt } => {
            set(&mut cfg.channel.k, *k);
            if t.is_some() {
                cfg.channel.t = *t;
            }
            set(&mut cfg.channel.dt, *dt);
        }
        Command::CircuitVerify { n_target, init, shots, calibration } => {
            if let Some(n) = n_target {
                cfg.circuit.n_targets = vec![*n];
            }
            if let Some(s) = init {
                cfg.circuit.inits = vec![s.clone()];
            }
            set(&mut cfg.circuit.shots, *shots);
            if let Some(path) = calibration {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("reading {}: {e}", path.display())))?;
                let cal: [[f64; 2]; 2] = serde_json::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("calibration {}: {e}", path.display())))?;
                cfg.circuit.calibration = Some(cal);
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = load_config(&cli.common)?;
    apply_command_overrides(&mut cfg, &cli.command)?;
    cfg.validate().map_err(CliError::Validation)?;
    if let Some(jobs) = cli.common.jobs {
        if jobs == 0 {
            return Err(CliError::Validation("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::NkTrace { .. } => commands::nk_trace(&cfg),
        Command::NkmProfile { with_oracle, .. } => commands::nkm_profile(&cfg, with_oracle),
        Command::CurrentSweep { .. } => commands::current_sweep(&cfg),
        Command::NormHeatmap { .. } => commands::norm_heatmap(&cfg),
        Command::KrausDump { .. } => commands::kraus_dump(&cfg),
        Command::CircuitVerify { .. } => commands::circuit_verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
