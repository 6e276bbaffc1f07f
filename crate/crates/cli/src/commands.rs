//! Subcommand implementations. Each writes one file into the output
//! directory and returns its path.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use driven_lattice::channel::{self, choi_from_map, kraus_from_choi, longtime_kraus, propagate_map};
use driven_lattice::circuit::{self, BASES};
use driven_lattice::io::CsvWriter;
use driven_lattice::master::{self, EvolveOptions, QubitState};
use driven_lattice::model::CoefficientSeries;
use driven_lattice::observables;
use driven_lattice::oracle::{self, TraceOptions};
use driven_lattice::{Complex64, Error};
use nalgebra::Matrix2;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{parse_init, InitState, OutputFormat, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Parameter(_) => CliError::Validation(e.to_string()),
            Error::IntegrationFailure(_) | Error::NotCompletelyPositive { .. } | Error::Singular(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CmdResult = Result<Vec<PathBuf>, CliError>;

fn header(cfg: &RunConfig, command: &str) -> String {
    let resolved = serde_json::to_string_pretty(cfg).expect("config serialises");
    format!("driven-lattice {VERSION} {command}\nconfig:\n{resolved}")
}

fn output_path(cfg: &RunConfig, stem: &str, ext: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.output.directory)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", cfg.output.directory.display())))?;
    Ok(cfg.output.directory.join(format!("{stem}.{ext}")))
}

fn write_json(cfg: &RunConfig, stem: &str, value: &Value) -> CmdResult {
    let path = output_path(cfg, stem, "json")?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(vec![path])
}

/// Writes a numeric table as CSV or JSON according to `output.format`.
fn write_table(
    cfg: &RunConfig,
    command: &str,
    stem: &str,
    columns: &[&str],
    rows: &[Vec<f64>],
    notes: &[String],
) -> CmdResult {
    let mut comment = header(cfg, command);
    for n in notes {
        comment.push('\n');
        comment.push_str(n);
    }
    match cfg.output.format {
        OutputFormat::Csv => {
            let path = output_path(cfg, stem, "csv")?;
            let mut w = CsvWriter::new(BufWriter::new(File::create(&path)?), &comment, columns)?;
            for r in rows {
                w.row(r)?;
            }
            w.finish()?;
            Ok(vec![path])
        }
        OutputFormat::Json => {
            let rows: Vec<Vec<Value>> =
                rows.iter().map(|r| r.iter().map(|&v| if v.is_finite() { json!(v) } else { Value::Null }).collect()).collect();
            let value = json!({
                "version": VERSION,
                "command": command,
                "config": cfg,
                "notes": notes,
                "columns": columns,
                "rows": rows,
            });
            write_json(cfg, stem, &value)
        }
    }
}

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Row-major `[[re, im], ...]`.
fn matrix2(m: &driven_lattice::ops::Mat2) -> Value {
    Value::Array((0..2).flat_map(|i| (0..2).map(move |j| complex(m[(i, j)]))).collect())
}

pub fn nk_trace(cfg: &RunConfig) -> CmdResult {
    let p = cfg.params();
    p.validate()?;
    let tc = &cfg.trace;
    let series = CoefficientSeries::new(&p, tc.k)?;
    let tb = p.bloch_period();
    let t_final = match tc.t_final {
        Some(t) => t,
        None => {
            let t = if p.big_gamma > 0.0 { 10.0 / p.big_gamma + tb } else { 2.0 * tb };
            (t / tc.record_interval).ceil() * tc.record_interval
        }
    };
    let dt = tc.dt.unwrap_or_else(|| master::recommended_dt(&series));
    let every = record_stride("trace.dt", tc.record_interval, dt)?;
    let rho0 = QubitState::from_amplitudes(1.0 - tc.n0, Complex64::new(0.0, 0.0))?;
    let opts = EvolveOptions { record_every: every, ..EvolveOptions::new(t_final, dt) };
    let me = master::evolve_density_matrix_with(&series, &rho0, &opts)?;

    let mut notes = vec![format!("k = {}, t_final = {t_final}, dt = {dt}, rho0 = diag({}, {})", tc.k, 1.0 - tc.n0, tc.n0)];
    let exact = if tc.with_oracle {
        let oc = cfg.oracle.to_config();
        oc.validate()?;
        let odt = oc.step(&p);
        let oevery = record_stride("oracle.dt", tc.record_interval, odt)?;
        let bath = oc.bath_for(&p, t_final)?;
        let tr = oracle::exact_occupation_trace(
            &p,
            tc.k,
            &bath,
            &TraceOptions { n0: tc.n0, t_final, dt: odt, record_every: oevery },
        )?;
        if tr.record.len() != me.len()
            || tr.record.times.iter().zip(&me.times).any(|(a, b)| (a - b).abs() > 1e-6 * tc.record_interval)
        {
            return Err(CliError::Validation(format!(
                "oracle and master-equation time grids differ (dt {odt} vs {dt}); adjust trace.t_final"
            )));
        }
        notes.push(format!(
            "oracle: n_b = {}, w = {}, dt = {odt}, unitarity residual = {:e}, particle drift = {:e}",
            bath.n_b, bath.w, tr.unitarity_residual, tr.particle_drift
        ));
        Some(tr.record.occupations)
    } else {
        None
    };

    let mut columns = vec!["t", "n_master", "n_longtime"];
    if exact.is_some() {
        columns.push("n_oracle");
    }
    let rows: Vec<Vec<f64>> = me
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let closed = if p.big_gamma > 0.0 { master::steady_state_occupation(&series, t) } else { f64::NAN };
            let mut r = vec![t, me.occupations[i], closed];
            if let Some(e) = &exact {
                r.push(e[i]);
            }
            r
        })
        .collect();
    write_table(cfg, "nk-trace", "nk_trace", &columns, &rows, &notes)
}

fn record_stride(field: &str, interval: f64, dt: f64) -> Result<usize, CliError> {
    let stride = (interval / dt).round();
    if stride < 1.0 || ((stride * dt - interval).abs() > 1e-9 * interval) {
        return Err(CliError::Validation(format!(
            "trace.record_interval {interval} is not a whole multiple of {field} {dt}"
        )));
    }
    Ok(stride as usize)
}

pub fn nkm_profile(cfg: &RunConfig, with_oracle: bool) -> CmdResult {
    let base = cfg.params();
    let oc = cfg.oracle.to_config();
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &omega in &cfg.grid.profile_omegas {
        let p = base.with_omega(omega);
        let prof = observables::steady_state_profile(&p, cfg.grid.n_k)?;
        let exact = if with_oracle {
            let ex = oracle::exact_momentum_profile(&p, &oc, cfg.grid.n_k)?;
            notes.push(format!("omega = {omega}: norm = {:.6e}", observables::accuracy_norm(&prof, &ex)?));
            Some(ex.n)
        } else {
            None
        };
        for (i, (&km, &n)) in prof.km.iter().zip(&prof.n).enumerate() {
            let mut r = vec![omega, km, n];
            if let Some(e) = &exact {
                r.push(e[i]);
            }
            rows.push(r);
        }
    }
    let mut columns = vec!["omega", "km", "n"];
    if with_oracle {
        columns.push("n_oracle");
    }
    write_table(cfg, "nkm-profile", "nkm_profile", &columns, &rows, &notes)
}

pub fn current_sweep(cfg: &RunConfig) -> CmdResult {
    let base = cfg.params();
    let curves = cfg
        .grid
        .gamma_grid
        .par_iter()
        .map(|&g| observables::current_vs_field(&base.with_big_gamma(g), &cfg.grid.omega_grid))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<f64>> =
        curves.iter().flatten().map(|c| vec![c.omega, c.big_gamma, c.current]).collect();
    write_table(cfg, "current-sweep", "current_sweep", &["omega", "gamma", "J"], &rows, &[])
}

pub fn norm_heatmap(cfg: &RunConfig) -> CmdResult {
    let cells = observables::norm_heatmap(
        &cfg.params(),
        &cfg.grid.heatmap_omega,
        &cfg.grid.heatmap_gamma,
        &cfg.oracle.to_config(),
        cfg.grid.heatmap_n_k,
    )?;
    let notes: Vec<String> = cells
        .iter()
        .filter_map(|c| c.failure.as_ref().map(|f| format!("failed: omega = {}, gamma = {}: {f}", c.omega, c.big_gamma)))
        .collect();
    for n in &notes {
        eprintln!("{n}");
    }
    let rows: Vec<Vec<f64>> = cells.iter().map(|c| vec![c.omega, c.big_gamma, c.norm]).collect();
    write_table(cfg, "norm-heatmap", "norm_heatmap", &["omega", "gamma", "norm"], &rows, &notes)
}

pub fn kraus_dump(cfg: &RunConfig) -> CmdResult {
    let p = cfg.params();
    p.validate()?;
    let cc = &cfg.channel;
    let t = match cc.t {
        Some(t) => t,
        None if p.big_gamma > 0.0 => 20.0 / p.big_gamma,
        None => return Err(CliError::Validation("channel.t is required when big_gamma = 0".into())),
    };
    let series = CoefficientSeries::new(&p, cc.k)?;
    let f = propagate_map(&series, 0.0, t, cc.dt)?;
    let choi = choi_from_map(&f);
    let set = kraus_from_choi(&choi, cc.kraus_tol)?;
    let n = if p.big_gamma > 0.0 { master::steady_state_occupation(&series, t) } else { f64::NAN };
    let longtime_distance = if (0.0..=1.0).contains(&n) {
        json!(choi.distance(&longtime_kraus(n)?.choi()))
    } else {
        Value::Null
    };
    let value = json!({
        "version": VERSION,
        "config": cfg,
        "k": cc.k,
        "t": t,
        "n": n,
        "n_map": channel::apply_map(&f, &driven_lattice::ops::ket_bra(0, 0))[(1, 1)].re,
        "eigenvalues": choi.eigenvalues(),
        "kraus": set.operators.iter().map(matrix2).collect::<Vec<_>>(),
        "kraus_eigenvalues": set.eigenvalues,
        "clipped_eigenvalues": set.clipped,
        "completeness_residual": set.completeness_residual(),
        "longtime_choi_distance": longtime_distance,
    });
    write_json(cfg, "kraus", &value)
}

fn initial_state(init: InitState) -> Result<QubitState, CliError> {
    Ok(match init {
        InitState::Zero => QubitState::empty(),
        InitState::Plus => circuit::plus_state(),
        InitState::RxPi4 => circuit::rx_state(std::f64::consts::FRAC_PI_4),
        InitState::Custom { a, b_re, b_im } => QubitState::from_amplitudes(a, Complex64::new(b_re, b_im))?,
    })
}

pub fn circuit_verify(cfg: &RunConfig) -> CmdResult {
    let cc = &cfg.circuit;
    let confusion = cc.calibration.map(|c| Matrix2::new(c[0][0], c[0][1], c[1][0], c[1][1]));
    let mut runs = Vec::new();
    let mut checks = Vec::new();
    let mut index = 0u64;
    for &n in &cc.n_targets {
        let theta = circuit::theta_for_occupation(n)?;
        let u = circuit::build_unitary_final(theta);
        let kraus_choi = longtime_kraus(n)?.choi();
        checks.push(json!({
            "n_target": n,
            "theta": theta,
            "unitarity_residual": driven_lattice::ops::unitarity_residual(&u),
            "choi_distance_to_longtime_kraus": circuit::circuit_choi(&u).distance(&kraus_choi),
            "choi_distance_fig6": circuit::circuit_choi(&circuit::build_circuit_fig6(theta)).distance(&kraus_choi),
            "choi_distance_fig7": circuit::circuit_choi(&circuit::build_circuit_fig7(theta)).distance(&kraus_choi),
        }));
        for init in &cc.inits {
            let rho0 = initial_state(parse_init(init).map_err(CliError::Validation)?)?;
            let seed = cfg.seed.wrapping_add(index);
            index += 1;
            let res = match &confusion {
                Some(m) => circuit::simulate_tomography_with_readout(&u, &rho0, cc.shots, seed, m)?,
                None => circuit::simulate_tomography(&u, &rho0, cc.shots, seed)?,
            };
            let counts: serde_json::Map<String, Value> =
                BASES.iter().zip(res.counts).map(|(b, c)| (b.to_string(), json!(c))).collect();
            let mitigated = match &confusion {
                Some(m) => {
                    let fixed = res.mitigated(m)?;
                    json!({ "rho": matrix2(&fixed.rho), "fidelity": fixed.fidelity, "clipped": fixed.clipped })
                }
                None => Value::Null,
            };
            runs.push(json!({
                "n_target": n,
                "init": init,
                "seed": seed,
                "shots": res.shots,
                "input_rho": matrix2(rho0.matrix()),
                "ideal_rho": matrix2(&res.target),
                "counts": counts,
                "rho": matrix2(&res.rho),
                "amplitudes": res.rho.iter().map(|z| z.norm()).collect::<Vec<_>>(),
                "fidelity": res.fidelity,
                "trace_distance": res.trace_distance(),
                "clipped": res.clipped,
                "mitigated": mitigated,
            }));
        }
    }
    let value = json!({
        "version": VERSION,
        "config": cfg,
        "checks": checks,
        "runs": runs,
    });
    write_json(cfg, "circuit_verify", &value)
}
