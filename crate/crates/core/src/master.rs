//! Momentum-mode master equation: density-matrix evolution, the scalar
//! occupation equation, its integral solution and the steady-state profile.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::CoefficientSeries;
use crate::ops::{self, Mat2};

/// Allowed drift of `Tr ρ` before a trajectory is declared failed.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Density matrix of one momentum mode in the basis `|0⟩` (empty), `|1⟩` (occupied).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState(pub Mat2);

impl QubitState {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(rho: Mat2) -> Result<Self> {
        let state = Self(rho);
        state.validate()?;
        Ok(state)
    }

    /// `|0⟩⟨0|`.
    pub fn empty() -> Self {
        Self(ops::ket_bra(0, 0))
    }

    /// `|1⟩⟨1|`.
    pub fn occupied() -> Self {
        Self(ops::ket_bra(1, 1))
    }

    /// `[[a, b], [b*, 1 - a]]`.
    pub fn from_amplitudes(a: f64, b: Complex64) -> Result<Self> {
        Self::new(Mat2::new(Complex64::new(a, 0.0), b, b.conj(), Complex64::new(1.0 - a, 0.0)))
    }

    /// Projector on a normalised pure state `α|0⟩ + β|1⟩`.
    pub fn pure(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("pure state needs a nonzero finite vector".into()));
        }
        let v = nalgebra::Vector2::new(alpha / norm, beta / norm);
        Ok(Self(v * v.adjoint()))
    }

    pub fn validate(&self) -> Result<()> {
        let rho = &self.0;
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("density matrix has non-finite entries".into()));
        }
        if ops::max_abs(&(rho - rho.adjoint())) > 1e-12 {
            return Err(Error::Domain("density matrix is not Hermitian".into()));
        }
        let tr = rho.trace().re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("density matrix trace {tr} != 1")));
        }
        if self.min_eigenvalue() < -1e-10 {
            return Err(Error::Domain(format!("density matrix has eigenvalue {}", self.min_eigenvalue())));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// `n = ρ_11`.
    pub fn occupation(&self) -> f64 {
        self.0[(1, 1)].re
    }

    /// `ρ_01`.
    pub fn coherence(&self) -> Complex64 {
        self.0[(0, 1)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = &self.0;
        let mean = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
        let half_gap = (0.25 * (m[(0, 0)].re - m[(1, 1)].re).powi(2) + m[(0, 1)].norm_sqr()).sqrt();
        mean - half_gap
    }
}

/// Sampled trajectory of a single momentum mode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub occupations: Vec<f64>,
    pub coherences: Vec<Complex64>,
    pub snapshots: Option<Vec<QubitState>>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, rho: &Mat2) {
        self.times.push(t);
        self.occupations.push(rho[(1, 1)].re);
        self.coherences.push(rho[(0, 1)]);
        if let Some(s) = self.snapshots.as_mut() {
            s.push(QubitState(*rho));
        }
    }
}

/// Fixed-step settings for [`evolve_density_matrix_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub t0: f64,
    pub t_final: f64,
    pub dt: f64,
    /// Record every `record_every`-th step (the initial and final states are always recorded).
    pub record_every: usize,
    pub snapshots: bool,
}

impl EvolveOptions {
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self { t0: 0.0, t_final, dt, record_every: 1, snapshots: false }
    }
}

/// `min(0.01/γ, T_B/200)`.
pub fn recommended_dt(series: &CoefficientSeries) -> f64 {
    (0.01 / series.model.gamma).min(series.model.bloch_period() / 200.0)
}

/// Right-hand side of the master equation applied to an arbitrary 2×2
/// operator, with the Hermitian-conjugate terms continued linearly:
///
/// `L(X) = -i[H, X] + a(-d d† X + d† X d) + a*(-X d d† + d† X d)
///        + A(-d† d X + d X d†) + A*(-X d† d + d X d†)`.
pub fn generator(eps: f64, a: Complex64, big_a: Complex64, x: &Mat2) -> Mat2 {
    let (x00, x01, x10, x11) = (x[(0, 0)], x[(0, 1)], x[(1, 0)], x[(1, 1)]);
    let i = Complex64::new(0.0, 1.0);
    let gain = a + a.conj();
    let loss = big_a + big_a.conj();
    Mat2::new(
        -gain * x00 + loss * x11,
        (i * eps - a - big_a.conj()) * x01,
        (-i * eps - a.conj() - big_a) * x10,
        gain * x00 - loss * x11,
    )
}

/// Integrates the master equation from `ρ(0) = rho0` to `t_final` with RK4,
/// recording every step.
pub fn evolve_density_matrix(
    series: &CoefficientSeries,
    rho0: &QubitState,
    t_final: f64,
    dt: f64,
) -> Result<TrajectoryRecord> {
    evolve_density_matrix_with(series, rho0, &EvolveOptions::new(t_final, dt))
}

pub fn evolve_density_matrix_with(
    series: &CoefficientSeries,
    rho0: &QubitState,
    opts: &EvolveOptions,
) -> Result<TrajectoryRecord> {
    let span = opts.t_final - opts.t0;
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::Parameter(format!("t_final must exceed t0, got [{}, {}]", opts.t0, opts.t_final)));
    }
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::Parameter(format!("dt must be > 0, got {}", opts.dt)));
    }
    if opts.record_every == 0 {
        return Err(Error::Parameter("record_every must be >= 1".into()));
    }
    rho0.validate()?;

    let steps = (span / opts.dt).round().max(1.0) as usize;
    let h = span / steps as f64;
    let mut record = TrajectoryRecord {
        snapshots: opts.snapshots.then(Vec::new),
        ..Default::default()
    };
    let mut rho = rho0.0;
    record.push(opts.t0, &rho);

    let coeffs = |t: f64| {
        let (a, big_a) = series.coefficients(t);
        (series.level(t), a, big_a)
    };
    let mut start = coeffs(opts.t0);
    for step in 0..steps {
        let t = opts.t0 + step as f64 * h;
        let mid = coeffs(t + 0.5 * h);
        let end = coeffs(t + h);
        let k1 = generator(start.0, start.1, start.2, &rho);
        let k2 = generator(mid.0, mid.1, mid.2, &(rho + k1 * Complex64::from(0.5 * h)));
        let k3 = generator(mid.0, mid.1, mid.2, &(rho + k2 * Complex64::from(0.5 * h)));
        let k4 = generator(end.0, end.1, end.2, &(rho + k3 * Complex64::from(h)));
        start = end;
        rho += (k1 + (k2 + k3) * Complex64::from(2.0) + k4) * Complex64::from(h / 6.0);
        rho = ops::hermitian_part(&rho);

        let drift = (rho.trace().re - 1.0).abs();
        if !(drift <= TRACE_DRIFT_LIMIT) {
            return Err(Error::IntegrationFailure(format!(
                "trace drift {drift:e} at t = {}",
                t + h
            )));
        }
        if (step + 1) % opts.record_every == 0 || step + 1 == steps {
            record.push(opts.t0 + (step + 1) as f64 * h, &rho);
        }
    }
    Ok(record)
}

/// `dn/dt = -2Γn + 2 Re a_k(t)`.
pub fn occupation_ode_rhs(series: &CoefficientSeries, n: f64, t: f64) -> f64 {
    -2.0 * series.model.big_gamma * n + 2.0 * series.coefficient_a(t).re
}

/// Integral solution `n(t) = e^{-2Γ(t-t0)} n0 + ∫ ds e^{-2Γ(t-s)} 2 Re a_k(s)`
/// to `1e-9` absolute.
pub fn occupation_integral(series: &CoefficientSeries, n0: f64, t0: f64, t: f64) -> Result<f64> {
    occupation_integral_tol(series, n0, t0, t, 1e-9)
}

pub fn occupation_integral_tol(series: &CoefficientSeries, n0: f64, t0: f64, t: f64, tol: f64) -> Result<f64> {
    if !(t >= t0) || !t.is_finite() || !t0.is_finite() {
        return Err(Error::Parameter(format!("need t >= t0, got t0 = {t0}, t = {t}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be > 0, got {tol}")));
    }
    let g = series.model.big_gamma;
    let span = t - t0;
    if span == 0.0 {
        return Ok(n0);
    }
    let f = |s: f64| (-2.0 * g * (t - s)).exp() * 2.0 * series.coefficient_a(s).re;

    // panels a fraction of a Bloch period wide keep each piece smooth
    let panel = series.model.bloch_period() / 8.0;
    let panels = (span / panel).ceil().max(1.0) as usize;
    let width = span / panels as f64;
    let panel_tol = tol / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = t0 + p as f64 * width;
        let b = if p + 1 == panels { t } else { a + width };
        total += adaptive_simpson(&f, a, b, panel_tol, 40)?;
    }
    Ok((-2.0 * g * span).exp() * n0 + total)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        return Err(Error::IntegrationFailure(format!("adaptive Simpson did not converge on [{a}, {b}]")));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Long-time occupation evaluated as the explicit double sum
/// `2Γ Re Σ_{l,l'} J_l J_l' F(Ωl) e^{-i(l-l')θ} / (2Γ - i(l-l')Ω)`, `θ = k + Ωt`.
pub fn steady_state_occupation(series: &CoefficientSeries, t: f64) -> f64 {
    let theta = series.phase(t);
    let g = series.model.big_gamma;
    let omega = series.model.omega;
    let mut sum = Complex64::new(0.0, 0.0);
    for (l, jl) in series.bessel.iter() {
        let fl = series.weights.get(l) * jl;
        for (lp, jlp) in series.bessel.iter() {
            let m = (l - lp) as f64;
            sum += fl * jlp * Complex64::cis(-m * theta) / Complex64::new(2.0 * g, -m * omega);
        }
    }
    2.0 * g * sum.re
}

/// The same long-time occupation regrouped by harmonic `m = l - l'`, so that
/// a profile costs `O(l_max)` per point after an `O(l_max²)` setup.
#[derive(Debug, Clone)]
pub struct SteadyState {
    big_gamma: f64,
    omega: f64,
    /// `(m, c_m / (2Γ - imΩ))`
    terms: Vec<(i64, Complex64)>,
}

impl SteadyState {
    pub fn new(series: &CoefficientSeries) -> Self {
        let g = series.model.big_gamma;
        let omega = series.model.omega;
        let l = 2 * series.l_max() as i64;
        let terms = (-l..=l)
            .map(|m| (m, series.harmonic(m) / Complex64::new(2.0 * g, -(m as f64) * omega)))
            .collect();
        Self { big_gamma: g, omega, terms }
    }

    /// `n(k_m)` at gauge-invariant momentum `k_m`.
    pub fn occupation(&self, km: f64) -> f64 {
        let s: Complex64 = self.terms.iter().map(|&(m, c)| c * Complex64::cis(-(m as f64) * km)).sum();
        2.0 * self.big_gamma * s.re
    }

    /// Fourier coefficient `2Γ c_m/(2Γ - imΩ)` of `n(k_m)` in `e^{-imk_m}`.
    pub fn fourier(&self, m: i64) -> Complex64 {
        self.terms
            .iter()
            .find(|&&(mm, _)| mm == m)
            .map_or(Complex64::new(0.0, 0.0), |&(_, c)| c * 2.0 * self.big_gamma)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}
