//! Run configuration: one JSON document, every field defaulted, unknown keys
//! rejected.

use std::f64::consts::PI;
use std::path::PathBuf;

use driven_lattice::model::ModelParams;
use driven_lattice::oracle::OracleConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub grid: GridBlock,
    pub oracle: OracleBlock,
    pub trace: TraceBlock,
    pub channel: ChannelBlock,
    pub circuit: CircuitBlock,
    pub output: OutputBlock,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelBlock::default(),
            grid: GridBlock::default(),
            oracle: OracleBlock::default(),
            trace: TraceBlock::default(),
            channel: ChannelBlock::default(),
            circuit: CircuitBlock::default(),
            output: OutputBlock::default(),
            seed: 20_200_101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    pub gamma: f64,
    pub omega: f64,
    pub big_gamma: f64,
    pub beta: f64,
}

impl Default for ModelBlock {
    fn default() -> Self {
        let p = ModelParams::default();
        Self { gamma: p.gamma, omega: p.omega, big_gamma: p.big_gamma, beta: p.beta }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridBlock {
    pub n_k: usize,
    /// Field values of the current sweep.
    pub omega_grid: Vec<f64>,
    /// Coupling values of the current sweep, one curve each.
    pub gamma_grid: Vec<f64>,
    /// Field values of the momentum profiles.
    pub profile_omegas: Vec<f64>,
    pub heatmap_omega: Vec<f64>,
    pub heatmap_gamma: Vec<f64>,
    pub heatmap_n_k: usize,
}

/// `n` points from `lo` to `hi`, equally spaced in `ln`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

impl Default for GridBlock {
    fn default() -> Self {
        Self {
            n_k: 256,
            omega_grid: (1..=120).map(|i| 0.05 * i as f64).collect(),
            gamma_grid: vec![0.05, 0.1, 0.2],
            profile_omegas: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            heatmap_omega: log_grid(0.1, 4.0, 8),
            heatmap_gamma: log_grid(0.02, 0.5, 8),
            heatmap_n_k: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleBlock {
    pub n_b: usize,
    pub w: f64,
    pub dt: Option<f64>,
    pub t_burn_factor: f64,
    pub n0: f64,
    pub auto_scale_bath: bool,
}

impl Default for OracleBlock {
    fn default() -> Self {
        let c = OracleConfig::default();
        Self { n_b: c.n_b, w: c.w, dt: c.dt, t_burn_factor: c.t_burn_factor, n0: c.n0, auto_scale_bath: c.auto_scale_bath }
    }
}

impl OracleBlock {
    pub fn to_config(&self) -> OracleConfig {
        OracleConfig {
            n_b: self.n_b,
            w: self.w,
            dt: self.dt,
            t_burn_factor: self.t_burn_factor,
            n0: self.n0,
            auto_scale_bath: self.auto_scale_bath,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceBlock {
    pub k: f64,
    /// Defaults to `10/Γ + T_B`, or `2 T_B` when `Γ = 0`.
    pub t_final: Option<f64>,
    /// Master-equation step; defaults to `min(0.01/γ, T_B/200)`.
    pub dt: Option<f64>,
    pub record_interval: f64,
    /// Initial occupation of the diagonal starting state.
    pub n0: f64,
    pub with_oracle: bool,
}

impl Default for TraceBlock {
    fn default() -> Self {
        Self { k: PI / 2.0 + 0.1, t_final: None, dt: None, record_interval: 0.1, n0: 0.5, with_oracle: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelBlock {
    pub k: f64,
    /// Defaults to `20/Γ`.
    pub t: Option<f64>,
    pub dt: f64,
    pub kraus_tol: f64,
}

impl Default for ChannelBlock {
    fn default() -> Self {
        Self { k: PI / 2.0 + 0.1, t: None, dt: 0.01, kraus_tol: driven_lattice::channel::KRAUS_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitBlock {
    pub n_targets: Vec<f64>,
    /// Any of `zero`, `plus`, `rx-pi-4`, `custom:a,re_b,im_b`.
    pub inits: Vec<String>,
    pub shots: u64,
    /// Column-stochastic readout confusion matrix `[[p(0|0), p(0|1)], [p(1|0), p(1|1)]]`.
    pub calibration: Option<[[f64; 2]; 2]>,
}

impl Default for CircuitBlock {
    fn default() -> Self {
        Self {
            n_targets: vec![0.1, 0.3, 0.5],
            inits: vec!["zero".into(), "plus".into(), "rx-pi-4".into()],
            shots: 1_000_000,
            calibration: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), format: OutputFormat::Csv }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            gamma: self.model.gamma,
            omega: self.model.omega,
            big_gamma: self.model.big_gamma,
            beta: self.model.beta,
        }
    }

    /// Checks every block and reports the first offending field path.
    pub fn validate(&self) -> Result<(), String> {
        let m = &self.model;
        positive("model.gamma", m.gamma)?;
        non_negative("model.omega", m.omega)?;
        non_negative("model.big_gamma", m.big_gamma)?;
        positive("model.beta", m.beta)?;

        let g = &self.grid;
        if g.n_k < driven_lattice::observables::MIN_GRID {
            return Err(format!("grid.n_k must be >= {}", driven_lattice::observables::MIN_GRID));
        }
        if g.heatmap_n_k < driven_lattice::observables::MIN_GRID {
            return Err(format!("grid.heatmap_n_k must be >= {}", driven_lattice::observables::MIN_GRID));
        }
        positive_list("grid.omega_grid", &g.omega_grid)?;
        if g.omega_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err("grid.omega_grid must be strictly increasing".into());
        }
        positive_list("grid.gamma_grid", &g.gamma_grid)?;
        positive_list("grid.profile_omegas", &g.profile_omegas)?;
        positive_list("grid.heatmap_omega", &g.heatmap_omega)?;
        positive_list("grid.heatmap_gamma", &g.heatmap_gamma)?;

        let o = &self.oracle;
        if o.n_b == 0 {
            return Err("oracle.n_b must be >= 1".into());
        }
        positive("oracle.w", o.w)?;
        if let Some(dt) = o.dt {
            positive("oracle.dt", dt)?;
        }
        positive("oracle.t_burn_factor", o.t_burn_factor)?;
        unit_interval("oracle.n0", o.n0)?;

        let t = &self.trace;
        finite("trace.k", t.k)?;
        if let Some(tf) = t.t_final {
            positive("trace.t_final", tf)?;
        }
        if let Some(dt) = t.dt {
            positive("trace.dt", dt)?;
        }
        positive("trace.record_interval", t.record_interval)?;
        unit_interval("trace.n0", t.n0)?;

        let c = &self.channel;
        finite("channel.k", c.k)?;
        if let Some(tc) = c.t {
            non_negative("channel.t", tc)?;
        }
        positive("channel.dt", c.dt)?;
        positive("channel.kraus_tol", c.kraus_tol)?;

        let q = &self.circuit;
        if q.n_targets.is_empty() {
            return Err("circuit.n_targets must be non-empty".into());
        }
        for &n in &q.n_targets {
            unit_interval("circuit.n_targets", n)?;
        }
        if q.inits.is_empty() {
            return Err("circuit.inits must be non-empty".into());
        }
        for s in &q.inits {
            parse_init(s).map_err(|e| format!("circuit.inits: {e}"))?;
        }
        if q.shots == 0 {
            return Err("circuit.shots must be >= 1".into());
        }
        if let Some(cal) = q.calibration {
            for j in 0..2 {
                let col = [cal[0][j], cal[1][j]];
                if col.iter().any(|v| !(0.0..=1.0).contains(v)) || (col[0] + col[1] - 1.0).abs() > 1e-12 {
                    return Err(format!("circuit.calibration column {j} is not stochastic"));
                }
            }
        }
        Ok(())
    }
}

/// Initial system state of a circuit run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitState {
    Zero,
    Plus,
    RxPi4,
    Custom { a: f64, b_re: f64, b_im: f64 },
}

pub fn parse_init(s: &str) -> Result<InitState, String> {
    match s {
        "zero" => Ok(InitState::Zero),
        "plus" => Ok(InitState::Plus),
        "rx-pi-4" => Ok(InitState::RxPi4),
        _ => {
            let body = s.strip_prefix("custom:").ok_or_else(|| format!("unknown initial state {s:?}"))?;
            let v: Vec<f64> = body
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|e| format!("{f:?}: {e}")))
                .collect::<Result<_, _>>()?;
            match v.as_slice() {
                &[a, b_re] => Ok(InitState::Custom { a, b_re, b_im: 0.0 }),
                &[a, b_re, b_im] => Ok(InitState::Custom { a, b_re, b_im }),
                _ => Err(format!("custom state needs a,re_b[,im_b], got {body:?}")),
            }
        }
    }
}

fn finite(field: &str, v: f64) -> Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("{field} must be finite, got {v}"))
    }
}

fn positive(field: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{field} must be > 0, got {v}"))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), String> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{field} must be >= 0, got {v}"))
    }
}

fn unit_interval(field: &str, v: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(format!("{field} must lie in [0, 1], got {v}"))
    }
}

fn positive_list(field: &str, v: &[f64]) -> Result<(), String> {
    if v.is_empty() {
        return Err(format!("{field} must be non-empty"));
    }
    for (i, &x) in v.iter().enumerate() {
        positive(&format!("{field}[{i}]"), x)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
        assert_eq!(RunConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn partial_blocks_keep_defaults() {
        let c = RunConfig::from_json(r#"{"model": {"omega": 2.0}, "seed": 5}"#).unwrap();
        assert_eq!(c.model.omega, 2.0);
        assert_eq!(c.model.gamma, 1.0);
        assert_eq!(c.seed, 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_json(r#"{"model": {"omegaa": 2.0}}"#).unwrap_err();
        assert!(err.contains("omegaa"), "{err}");
        assert!(RunConfig::from_json(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = RunConfig::default();
        c.model.beta = -1.0;
        assert!(c.validate().unwrap_err().starts_with("model.beta"));
        let mut c = RunConfig::default();
        c.grid.gamma_grid = vec![0.1, 0.0];
        assert!(c.validate().unwrap_err().starts_with("grid.gamma_grid[1]"));
        let mut c = RunConfig::default();
        c.circuit.calibration = Some([[0.9, 0.1], [0.2, 0.9]]);
        assert!(c.validate().unwrap_err().starts_with("circuit.calibration"));
    }

    #[test]
    fn initial_states() {
        assert_eq!(parse_init("plus").unwrap(), InitState::Plus);
        assert_eq!(parse_init("custom:0.42,0.1,0.2").unwrap(), InitState::Custom { a: 0.42, b_re: 0.1, b_im: 0.2 });
        assert!(parse_init("custom:1").is_err());
        assert!(parse_init("minus").is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.02, 0.5, 8);
        assert!((g[0] - 0.02).abs() < 1e-15 && (g[7] - 0.5).abs() < 1e-14);
    }
}
