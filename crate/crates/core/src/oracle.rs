//! Exact reference solution: one momentum mode coupled to a finite bath of
//! `N_b` levels spread uniformly over `[-W/2, W/2]`.
//!
//! The problem is quadratic, so the one-particle propagator `U(t)` of the
//! `(N_b + 1)`-dimensional Hamiltonian
//!
//! ```text
//! h_00 = -2γ cos(k + Ωt),   h_jj = ω_j,   h_0j = h_j0 = -g,   g² = ΓW/(πN_b)
//! ```
//!
//! determines the correlation matrix `C(t) = U C(0) U†` and the occupation
//! `n(t) = C_00(t) = Σ_m n_m(0) |U_0m(t)|²`.
//!
//! Each step of length `dt` is a symmetric split around the midpoint: half of
//! the diagonal phase, the exact exponential of the coupling star (a rotation
//! in the plane of the system mode and the uniform bath vector), then the other
//! half of the diagonal phase. Every factor is unitary and costs `O(N_b)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::master::TrajectoryRecord;
use crate::model::ModelParams;
use crate::observables::{momentum_grid, MomentumProfile};
use crate::specfun;

/// Accumulated non-unitarity that aborts a run.
pub const UNITARITY_LIMIT: f64 = 1e-6;

/// Uniform, flat-coupling discretisation of a wide-band reservoir.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteBathSpec {
    pub n_b: usize,
    pub w: f64,
    pub beta: f64,
    pub big_gamma: f64,
}

impl FiniteBathSpec {
    pub fn new(n_b: usize, w: f64, beta: f64, big_gamma: f64) -> Result<Self> {
        let spec = Self { n_b, w, beta, big_gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn for_model(params: &ModelParams, n_b: usize, w: f64) -> Result<Self> {
        Self::new(n_b, w, params.beta, params.big_gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_b == 0 {
            return Err(Error::Parameter("bath needs at least one mode".into()));
        }
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(Error::Parameter(format!("bandwidth must be > 0, got {}", self.w)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.big_gamma >= 0.0) || !self.big_gamma.is_finite() {
            return Err(Error::Parameter(format!("Gamma must be >= 0, got {}", self.big_gamma)));
        }
        Ok(())
    }

    /// Inside the regime the reference values were validated for (`N_b ≥ 200`, `W ≥ 10γ`).
    pub fn in_validated_regime(&self, gamma: f64) -> bool {
        self.n_b >= 200 && self.w >= 10.0 * gamma
    }

    /// Level energies at the cell midpoints `-W/2 + (j + 1/2) W/N_b`.
    pub fn energies(&self) -> Vec<f64> {
        let spacing = self.w / self.n_b as f64;
        (0..self.n_b).map(|j| -0.5 * self.w + (j as f64 + 0.5) * spacing).collect()
    }

    /// Flat coupling `g = sqrt(ΓW/(πN_b))`, so that `π g² (N_b/W) = Γ`.
    pub fn coupling(&self) -> f64 {
        (self.big_gamma * self.w / (PI * self.n_b as f64)).sqrt()
    }

    /// Thermal occupations `n_F(ω_j)`.
    pub fn occupations(&self) -> Result<Vec<f64>> {
        self.energies().iter().map(|&e| specfun::fermi(e, self.beta)).collect()
    }

    /// Revival time `2π/Δω = 2πN_b/W` of the discrete spectrum.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI * self.n_b as f64 / self.w
    }
}

/// Oracle settings shared by traces, profiles and heatmaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub n_b: usize,
    pub w: f64,
    /// `None` selects `min(0.05/W, 0.01/γ)`.
    pub dt: Option<f64>,
    /// Profiles are sampled at `t_burn_factor / Γ`.
    pub t_burn_factor: f64,
    /// Initial occupation of the system mode for profiles.
    pub n0: f64,
    /// Enlarge `N_b` so the revival time exceeds the sampled window by 10%.
    pub auto_scale_bath: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { n_b: 400, w: 20.0, dt: None, t_burn_factor: 10.0, n0: 0.5, auto_scale_bath: true }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_b == 0 {
            return Err(Error::Parameter("oracle.n_b must be >= 1".into()));
        }
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(Error::Parameter(format!("oracle.w must be > 0, got {}", self.w)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::Parameter(format!("oracle.dt must be > 0, got {dt}")));
            }
        }
        if !(self.t_burn_factor > 0.0) || !self.t_burn_factor.is_finite() {
            return Err(Error::Parameter(format!("oracle.t_burn_factor must be > 0, got {}", self.t_burn_factor)));
        }
        if !(0.0..=1.0).contains(&self.n0) {
            return Err(Error::Parameter(format!("oracle.n0 must lie in [0, 1], got {}", self.n0)));
        }
        Ok(())
    }

    pub fn step(&self, params: &ModelParams) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(params, self.w))
    }

    /// Bath for a run that must stay free of revivals up to `t_window`.
    pub fn bath_for(&self, params: &ModelParams, t_window: f64) -> Result<FiniteBathSpec> {
        let mut n_b = self.n_b;
        if self.auto_scale_bath {
            let needed = (1.1 * t_window * self.w / (2.0 * PI)).ceil();
            if needed > 1e7 {
                return Err(Error::Parameter(format!("window {t_window} needs an impractically fine bath")));
            }
            n_b = n_b.max(needed as usize);
        }
        FiniteBathSpec::for_model(params, n_b, self.w)
    }
}

/// `min(0.05/W, 0.01/γ)`.
pub fn default_dt(params: &ModelParams, w: f64) -> f64 {
    (0.05 / w).min(0.01 / params.gamma)
}

/// Time grid and precomputed phase factors of one split-step run.
struct Schedule {
    /// Merged system phases between coupling rotations, `steps + 1` entries.
    sys: Vec<Complex64>,
    half_re: Vec<f64>,
    half_im: Vec<f64>,
    full_re: Vec<f64>,
    full_im: Vec<f64>,
    cos_g: f64,
    sin_g: f64,
    b: f64,
}

impl Schedule {
    /// Forward schedule for `[0, steps·h]` at momentum `k`.
    fn forward(params: &ModelParams, bath: &FiniteBathSpec, k: f64, steps: usize, h: f64) -> Self {
        let level = |t: f64| params.dispersion(k + params.omega * t);
        let mid: Vec<f64> = (0..steps).map(|i| level((i as f64 + 0.5) * h)).collect();
        let mut sys = Vec::with_capacity(steps + 1);
        sys.push(Complex64::cis(-0.5 * h * mid[0]));
        for i in 1..steps {
            sys.push(Complex64::cis(-0.5 * h * (mid[i - 1] + mid[i])));
        }
        sys.push(Complex64::cis(-0.5 * h * mid[steps - 1]));

        let energies = bath.energies();
        let half: Vec<Complex64> = energies.iter().map(|&w| Complex64::cis(-0.5 * h * w)).collect();
        let full: Vec<Complex64> = energies.iter().map(|&w| Complex64::cis(-h * w)).collect();
        let big_g = bath.coupling() * (bath.n_b as f64).sqrt();
        Self {
            sys,
            half_re: half.iter().map(|z| z.re).collect(),
            half_im: half.iter().map(|z| z.im).collect(),
            full_re: full.iter().map(|z| z.re).collect(),
            full_im: full.iter().map(|z| z.im).collect(),
            cos_g: (big_g * h).cos(),
            sin_g: (big_g * h).sin(),
            b: 1.0 / (bath.n_b as f64).sqrt(),
        }
    }

    /// Schedule of `U†`: reversed, conjugated phases and the inverse rotation.
    fn adjoint(mut self) -> Self {
        self.sys.reverse();
        for z in &mut self.sys {
            *z = z.conj();
        }
        for v in self.half_im.iter_mut().chain(self.full_im.iter_mut()) {
            *v = -*v;
        }
        self.sin_g = -self.sin_g;
        self
    }

    fn steps(&self) -> usize {
        self.sys.len() - 1
    }

    /// Propagates `(v0, bath)` through the whole schedule, calling
    /// `on_step(i, v0)` after coupling rotation `i = 1..=steps`.
    fn run(&self, v0: &mut Complex64, re: &mut [f64], im: &mut [f64], mut on_step: impl FnMut(usize, Complex64)) {
        let (c, s, b) = (self.cos_g, self.sin_g, self.b);
        let i_unit = Complex64::new(0.0, 1.0);
        // coupling updates add the same amount to every bath level; it is kept
        // pending and folded into the next phase sweep
        let mut pending = Complex64::new(0.0, 0.0);
        for step in 0..self.steps() {
            let (pr, pi) = if step == 0 { (&self.half_re, &self.half_im) } else { (&self.full_re, &self.full_im) };
            let (mut sr, mut si) = (0.0, 0.0);
            for j in 0..re.len() {
                let x = re[j] + pending.re;
                let y = im[j] + pending.im;
                let nr = x * pr[j] - y * pi[j];
                let ni = x * pi[j] + y * pr[j];
                re[j] = nr;
                im[j] = ni;
                sr += nr;
                si += ni;
            }
            let z0 = *v0 * self.sys[step];
            let vb = Complex64::new(sr, si) * b;
            *v0 = z0 * c + i_unit * s * vb;
            pending = ((c - 1.0) * vb + i_unit * s * z0) * b;
            on_step(step + 1, *v0);
        }
        for j in 0..re.len() {
            let x = re[j] + pending.re;
            let y = im[j] + pending.im;
            re[j] = x * self.half_re[j] - y * self.half_im[j];
            im[j] = x * self.half_im[j] + y * self.half_re[j];
        }
        *v0 *= self.sys[self.steps()];
    }
}

fn step_count(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::Parameter(format!("t_final must be > 0, got {t_final}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Parameter(format!("dt must be > 0, got {dt}")));
    }
    let steps = (t_final / dt).round().max(1.0);
    if steps > 1e9 {
        return Err(Error::Parameter(format!("{steps} steps requested")));
    }
    Ok((steps as usize, t_final / steps))
}

/// Settings of a forward trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub n0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub record_every: usize,
}

/// Oracle trajectory with its conservation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrace {
    pub record: TrajectoryRecord,
    /// `max |U†U - 1|` at the final time.
    pub unitarity_residual: f64,
    /// `|Tr C(t_final) - Tr C(0)|`.
    pub particle_drift: f64,
    pub bath: FiniteBathSpec,
}

/// Forward propagation of every column of `U`, giving `n_k(t)` on the whole
/// time grid.
pub fn exact_occupation_trace(
    params: &ModelParams,
    k: f64,
    bath: &FiniteBathSpec,
    opts: &TraceOptions,
) -> Result<OracleTrace> {
    params.validate()?;
    bath.validate()?;
    if !(0.0..=1.0).contains(&opts.n0) {
        return Err(Error::Parameter(format!("initial occupation must lie in [0, 1], got {}", opts.n0)));
    }
    if opts.record_every == 0 {
        return Err(Error::Parameter("record_every must be >= 1".into()));
    }
    let (steps, h) = step_count(opts.t_final, opts.dt)?;
    let schedule = Schedule::forward(params, bath, k, steps, h);
    let n_bath = bath.occupations()?;
    let dim = bath.n_b + 1;
    let recorded: Vec<usize> = (0..=steps).filter(|&i| i % opts.record_every == 0 || i == steps).collect();
    let slot = |i: usize| if i == steps { recorded.len() - 1 } else { i / opts.record_every };

    // fixed-size column chunks keep the summation order independent of the pool
    const CHUNK: usize = 16;
    let chunks: Vec<(Vec<f64>, Vec<Vec<Complex64>>)> = (0..dim)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|cols| {
            let mut partial = vec![0.0; recorded.len()];
            let mut finals = Vec::with_capacity(cols.len());
            for &m in cols {
                let weight = if m == 0 { opts.n0 } else { n_bath[m - 1] };
                let mut v0 = Complex64::new(if m == 0 { 1.0 } else { 0.0 }, 0.0);
                let mut re = vec![0.0; bath.n_b];
                let mut im = vec![0.0; bath.n_b];
                if m > 0 {
                    re[m - 1] = 1.0;
                }
                partial[0] += weight * v0.norm_sqr();
                schedule.run(&mut v0, &mut re, &mut im, |i, z| {
                    if i % opts.record_every == 0 || i == steps {
                        partial[slot(i)] += weight * z.norm_sqr();
                    }
                });
                let mut col = Vec::with_capacity(dim);
                col.push(v0);
                col.extend(re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)));
                finals.push(col);
            }
            (partial, finals)
        })
        .collect();

    let mut occupations = vec![0.0; recorded.len()];
    let mut columns = Vec::with_capacity(dim);
    for (partial, finals) in chunks {
        for (o, p) in occupations.iter_mut().zip(partial) {
            *o += p;
        }
        columns.extend(finals);
    }

    let unitarity_residual = gram_residual(&columns);
    let weights = std::iter::once(opts.n0).chain(n_bath.iter().copied());
    let particle_drift = columns
        .iter()
        .zip(weights)
        .map(|(col, w)| w * (col.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0))
        .sum::<f64>()
        .abs();
    if !(unitarity_residual <= UNITARITY_LIMIT) {
        return Err(Error::IntegrationFailure(format!("propagator non-unitary: residual {unitarity_residual:e}")));
    }

    let times = recorded.iter().map(|&i| i as f64 * h).collect();
    let coherences = vec![Complex64::new(0.0, 0.0); recorded.len()];
    Ok(OracleTrace {
        record: TrajectoryRecord { times, occupations, coherences, snapshots: None },
        unitarity_residual,
        particle_drift,
        bath: *bath,
    })
}

/// `max |U†U - 1|` from the columns of `U`.
fn gram_residual(columns: &[Vec<Complex64>]) -> f64 {
    (0..columns.len())
        .into_par_iter()
        .map(|a| {
            let ca = &columns[a];
            (a..columns.len())
                .map(|b| {
                    let dot: Complex64 = ca.iter().zip(&columns[b]).map(|(x, y)| x.conj() * y).sum();
                    let target = if a == b { 1.0 } else { 0.0 };
                    (dot - target).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// `n_k(t)` at a single time from row 0 of `U(t)`, obtained by propagating
/// `e_0` backwards through the adjoint schedule.
pub fn exact_occupation_at(
    params: &ModelParams,
    k: f64,
    bath: &FiniteBathSpec,
    n0: f64,
    t: f64,
    dt: f64,
) -> Result<f64> {
    params.validate()?;
    bath.validate()?;
    if !(0.0..=1.0).contains(&n0) {
        return Err(Error::Parameter(format!("initial occupation must lie in [0, 1], got {n0}")));
    }
    let (steps, h) = step_count(t, dt)?;
    let schedule = Schedule::forward(params, bath, k, steps, h).adjoint();
    let mut v0 = Complex64::new(1.0, 0.0);
    let mut re = vec![0.0; bath.n_b];
    let mut im = vec![0.0; bath.n_b];
    schedule.run(&mut v0, &mut re, &mut im, |_, _| {});

    let norm = v0.norm_sqr() + re.iter().zip(&im).map(|(r, i)| r * r + i * i).sum::<f64>();
    if !((norm - 1.0).abs() <= UNITARITY_LIMIT) {
        return Err(Error::IntegrationFailure(format!("adjoint row norm drifted to {norm}")));
    }
    let n_bath = bath.occupations()?;
    let bath_part: f64 = n_bath.iter().zip(re.iter().zip(&im)).map(|(n, (r, i))| n * (r * r + i * i)).sum();
    Ok(n0 * v0.norm_sqr() + bath_part)
}

/// Oracle profile `n_ex(k_m)`: each grid point is run from `t = 0` with
/// `k = k_m - Ωt_s` and read at `t_s = t_burn_factor/Γ`, where `k + Ωt_s = k_m`.
pub fn exact_momentum_profile(params: &ModelParams, config: &OracleConfig, n_k: usize) -> Result<MomentumProfile> {
    params.validate()?;
    config.validate()?;
    if params.big_gamma <= 0.0 {
        return Err(Error::Parameter("oracle profile needs Gamma > 0 to relax".into()));
    }
    let km = momentum_grid(n_k)?;
    let t_s = config.t_burn_factor / params.big_gamma;
    let bath = config.bath_for(params, t_s)?;
    let dt = config.step(params);
    let n = km
        .par_iter()
        .map(|&k| exact_occupation_at(params, k - params.omega * t_s, &bath, config.n0, t_s, dt))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentumProfile { km, n, params: *params })
}
