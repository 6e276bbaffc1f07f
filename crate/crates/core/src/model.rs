//! Physical parameters and the time-dependent master-equation coefficients.
//!
//! With `θ = k + Ωt` the coefficients are
//!
//! ```text
//! a_k(t) = Γ Σ_{l,l'} J_l J_l' F(Ωl)  e^{-i(l-l')θ}
//! A_k(t) = Γ Σ_{l,l'} J_l J_l' F(-Ωl) e^{+i(l-l')θ}
//! ```
//!
//! with Bessel argument `2γ/Ω` and the bath spectral weight
//! `F(x) = n_F(-x) + (i/π)[Re ψ(1/2 - iβx/2π) + γ_EM]`. Both double sums
//! factorise into products of single sums. An independent route integrates the
//! bath correlation function against the Peierls phase directly in time.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{self, BesselTable};

/// Cut-off used for every Bessel table built from a parameter set.
pub const BESSEL_TOL: f64 = 1e-15;

/// Physical parameters of the driven chain and its reservoir (`ħ = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Hopping energy `γ`, the unit of energy.
    pub gamma: f64,
    /// Bloch frequency `Ω = eEa`.
    pub omega: f64,
    /// System-bath rate `Γ = π g² N(0)`.
    pub big_gamma: f64,
    /// Inverse bath temperature `β`.
    pub beta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { gamma: 1.0, omega: 0.5, big_gamma: 0.1, beta: 10.0 }
    }
}

impl ModelParams {
    pub fn new(gamma: f64, omega: f64, big_gamma: f64, beta: f64) -> Result<Self> {
        let p = Self { gamma, omega, big_gamma, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma, self.omega, self.big_gamma, self.beta].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter(format!("non-finite model parameter in {self:?}")));
        }
        if self.gamma <= 0.0 {
            return Err(Error::Parameter(format!("hopping gamma must be > 0, got {}", self.gamma)));
        }
        if self.omega < 0.0 {
            return Err(Error::Parameter(format!("drive omega must be >= 0, got {}", self.omega)));
        }
        if self.big_gamma < 0.0 {
            return Err(Error::Parameter(format!("coupling Gamma must be >= 0, got {}", self.big_gamma)));
        }
        if self.beta <= 0.0 {
            return Err(Error::Parameter(format!("beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn with_omega(self, omega: f64) -> Self {
        Self { omega, ..self }
    }

    pub fn with_big_gamma(self, big_gamma: f64) -> Self {
        Self { big_gamma, ..self }
    }

    /// Bare coupling combination `g² N(0) = Γ/π`.
    pub fn coupling_density(&self) -> f64 {
        self.big_gamma / PI
    }

    /// Bloch period `2π/Ω` (infinite without drive).
    pub fn bloch_period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Band energy `-2γ cos k`.
    pub fn dispersion(&self, k: f64) -> f64 {
        -2.0 * self.gamma * k.cos()
    }

    /// Band velocity `2γ sin k`.
    pub fn velocity(&self, k: f64) -> f64 {
        2.0 * self.gamma * k.sin()
    }

    /// Bessel argument `2γ/Ω`.
    pub fn bessel_argument(&self) -> Result<f64> {
        if self.omega <= 0.0 {
            return Err(Error::Domain("the Bessel series needs omega > 0".into()));
        }
        Ok(2.0 * self.gamma / self.omega)
    }
}

/// Peierls phase integral `f_k(t) = -2γ sin(k + Ωt)/Ω`.
pub fn peierls_phase_integral(params: &ModelParams, k: f64, t: f64) -> Result<f64> {
    if params.omega <= 0.0 {
        return Err(Error::Domain("f_k(t) is singular at omega = 0; use the quadrature path".into()));
    }
    Ok(-2.0 * params.gamma * (k + params.omega * t).sin() / params.omega)
}

/// `F(Ωl)` for `l` in `[-l_max, l_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWeight {
    pub omega: f64,
    pub beta: f64,
    l_max: usize,
    values: Vec<Complex64>,
}

impl SpectralWeight {
    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// `F(Ωl)`; panics outside `[-l_max, l_max]`.
    pub fn get(&self, l: i64) -> Complex64 {
        self.values[(l + self.l_max as i64) as usize]
    }
}

/// Closed form of `Im F(0) = (ψ(1/2) + γ_EM)/π = -2 ln 2 / π`.
pub fn spectral_weight_im_zero() -> f64 {
    -2.0 * LN_2 / PI
}

pub fn spectral_weight(params: &ModelParams, l_max: usize) -> Result<SpectralWeight> {
    let l = l_max as i64;
    let values = (-l..=l)
        .map(|l| {
            let x = params.omega * l as f64;
            let re = specfun::fermi(-x, params.beta)?;
            let psi = specfun::re_digamma_half_offset(params.beta * x / (2.0 * PI))?;
            Ok(Complex64::new(re, (psi + specfun::EULER_GAMMA) / PI))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralWeight { omega: params.omega, beta: params.beta, l_max, values })
}

/// Truncated Bessel-series representation of `a_k(t)` and `A_k(t)` at fixed `k`.
#[derive(Debug, Clone)]
pub struct CoefficientSeries {
    pub model: ModelParams,
    pub k: f64,
    pub bessel: BesselTable,
    pub weights: SpectralWeight,
}

impl CoefficientSeries {
    pub fn new(model: &ModelParams, k: f64) -> Result<Self> {
        model.validate()?;
        if !k.is_finite() {
            return Err(Error::Parameter(format!("momentum must be finite, got {k}")));
        }
        let bessel = specfun::bessel_table(model.bessel_argument()?, BESSEL_TOL)?;
        let weights = spectral_weight(model, bessel.l_max())?;
        Ok(Self { model: *model, k, bessel, weights })
    }

    /// Same coefficients at another momentum (tables do not depend on `k`).
    pub fn at_momentum(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn l_max(&self) -> usize {
        self.bessel.l_max()
    }

    /// Gauge-invariant phase `θ = k + Ωt`.
    pub fn phase(&self, t: f64) -> f64 {
        self.k + self.model.omega * t
    }

    /// System level `-2γ cos(k + Ωt)`.
    pub fn level(&self, t: f64) -> f64 {
        self.model.dispersion(self.phase(t))
    }

    pub fn coefficient_a(&self, t: f64) -> Complex64 {
        self.coefficients(t).0
    }

    pub fn coefficient_big_a(&self, t: f64) -> Complex64 {
        self.coefficients(t).1
    }

    /// `(a_k(t), A_k(t))` from the factorised single sums.
    pub fn coefficients(&self, t: f64) -> (Complex64, Complex64) {
        let theta = self.phase(t);
        let mut weighted_minus = Complex64::new(0.0, 0.0); // Σ J_l F(Ωl) e^{-ilθ}
        let mut weighted_plus = Complex64::new(0.0, 0.0); // Σ J_l F(-Ωl) e^{+ilθ}
        let mut plain_plus = Complex64::new(0.0, 0.0); // Σ J_l e^{+ilθ}
        for (l, j) in self.bessel.iter() {
            let e = Complex64::cis(l as f64 * theta);
            weighted_minus += j * self.weights.get(l) * e.conj();
            weighted_plus += j * self.weights.get(-l) * e;
            plain_plus += j * e;
        }
        let g = self.model.big_gamma;
        (weighted_minus * plain_plus * g, weighted_plus * plain_plus.conj() * g)
    }

    /// Fourier weight `c_m = Σ_l J_l J_{l-m} F(Ωl)`, so that
    /// `a_k(t) = Γ Σ_m c_m e^{-imθ}`.
    pub fn harmonic(&self, m: i64) -> Complex64 {
        self.bessel
            .iter()
            .map(|(l, j)| j * self.bessel.get(l - m) * self.weights.get(l))
            .sum()
    }
}

/// Direct time-domain evaluation of `a_k(t)` from the bath correlation function.
///
/// The δ-part of the correlator sits on the integration boundary and carries
/// half weight, contributing `Γ/2`. The cosech part has a logarithmic
/// singularity at zero lag whose divergent piece only shifts `Im a_k` by a
/// constant; it is fixed to `Γ Im F(0)` and the remainder
/// `-(iΓ/β) ∫_0^∞ ds cosech(πs/β) [e^{i(f(t-s) - f(t))} - 1]` is integrated with
/// composite Simpson on `[0, cutoff_time]`. `omega = 0` is allowed here.
pub fn quadrature_coefficient_a(params: &ModelParams, k: f64, t: f64, cutoff_time: f64, step: f64) -> Result<Complex64> {
    params.validate()?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Parameter(format!("quadrature step must be > 0, got {step}")));
    }
    if !(cutoff_time >= params.beta) || !cutoff_time.is_finite() {
        return Err(Error::Parameter(format!(
            "quadrature cutoff {cutoff_time} must be >= beta = {}",
            params.beta
        )));
    }
    let g = params.big_gamma;
    if g == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let beta = params.beta;
    let theta = k + params.omega * t;
    let half_omega = 0.5 * params.omega;
    // f(t-s) - f(t) = 2γ s cos(θ - Ωs/2) sinc(Ωs/2)
    let phase_lag = |s: f64| {
        let x = half_omega * s;
        let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        2.0 * params.gamma * s * (theta - x).cos() * sinc
    };
    let integrand = |s: f64| -> Complex64 {
        if s == 0.0 {
            return Complex64::new(0.0, beta / PI * 2.0 * params.gamma * theta.cos());
        }
        let u = PI * s / beta;
        let e = (-u).exp();
        let cosech = 2.0 * e / (1.0 - e * e);
        (Complex64::cis(phase_lag(s)) - 1.0) * cosech
    };

    let mut n = (cutoff_time / step).ceil() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let h = cutoff_time / n as f64;
    let mut sum = integrand(0.0) + integrand(cutoff_time);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += integrand(i as f64 * h) * w;
    }
    let integral = sum * (h / 3.0);

    let i = Complex64::new(0.0, 1.0);
    Ok(Complex64::new(0.5 * g, g * spectral_weight_im_zero()) - i * (g / beta) * integral)
}
