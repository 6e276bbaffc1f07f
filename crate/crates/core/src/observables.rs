//! Long-time observables: momentum profiles `n(k_m)`, the DC current and the
//! relative L1 mismatch between two profiles.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::master::SteadyState;
use crate::model::{CoefficientSeries, ModelParams};
use crate::oracle::{self, OracleConfig};

/// Smallest accepted momentum grid.
pub const MIN_GRID: usize = 8;

/// Uniform grid `k_j = -π + 2π(j+1)/N`, `j = 0..N`, covering `(-π, π]`.
pub fn momentum_grid(n_k: usize) -> Result<Vec<f64>> {
    if n_k < MIN_GRID {
        return Err(Error::Parameter(format!("momentum grid needs at least {MIN_GRID} points, got {n_k}")));
    }
    Ok((0..n_k).map(|j| -PI + 2.0 * PI * (j + 1) as f64 / n_k as f64).collect())
}

/// Occupations on a uniform grid of gauge-invariant momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumProfile {
    pub km: Vec<f64>,
    pub n: Vec<f64>,
    pub params: ModelParams,
}

impl MomentumProfile {
    pub fn len(&self) -> usize {
        self.km.len()
    }

    pub fn is_empty(&self) -> bool {
        self.km.is_empty()
    }

    /// Brillouin-zone average.
    pub fn mean(&self) -> f64 {
        self.n.iter().sum::<f64>() / self.n.len() as f64
    }

    /// `(2π)^{-1} ∫ dk v(k) n(k)` by the periodic trapezoid rule.
    pub fn velocity_current(&self) -> f64 {
        let sum: f64 = self.km.iter().zip(&self.n).map(|(&k, &n)| self.params.velocity(k) * n).sum();
        sum / self.n.len() as f64
    }

    /// Profile of the reversed field, `n_{-Ω}(k) = n_Ω(-k)`, on the same grid.
    pub fn reversed_field(&self) -> Self {
        let n_k = self.n.len();
        // -k_j = k_{N-2-j}, and -π ≡ π for j = N-1
        let n = (0..n_k).map(|j| self.n[(2 * n_k - 2 - j) % n_k]).collect();
        Self { km: self.km.clone(), n, params: self.params }
    }

    /// First Fourier coefficient `(1/N) Σ n(k) e^{ik}`; its phase tracks the
    /// displacement of the distribution.
    pub fn first_harmonic(&self) -> Complex64 {
        let sum: Complex64 = self.km.iter().zip(&self.n).map(|(&k, &n)| Complex64::cis(k) * n).sum();
        sum / self.n.len() as f64
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.km.len() == other.km.len() && self.km.iter().zip(&other.km).all(|(a, b)| (a - b).abs() < 1e-12)
    }
}

/// Long-time master-equation profile on an `n_k`-point grid.
pub fn steady_state_profile(params: &ModelParams, n_k: usize) -> Result<MomentumProfile> {
    let km = momentum_grid(n_k)?;
    let ss = SteadyState::new(&CoefficientSeries::new(params, 0.0)?);
    let n = km.iter().map(|&k| ss.occupation(k)).collect();
    Ok(MomentumProfile { km, n, params: *params })
}

/// DC current `J = 2γΓ Re[c_1/(Ω + 2iΓ) + c_{-1}/(Ω - 2iΓ)]` with
/// `c_m = Σ_l J_l J_{l-m} F(Ωl)`, the `m = ±1` harmonics of the long-time profile
/// weighted by the band velocity.
pub fn dc_current_closed_form(params: &ModelParams) -> Result<f64> {
    if params.omega <= 0.0 || params.big_gamma <= 0.0 {
        return Err(Error::Domain(format!(
            "closed-form current needs omega > 0 and Gamma > 0, got {} and {}",
            params.omega, params.big_gamma
        )));
    }
    let series = CoefficientSeries::new(params, 0.0)?;
    let (omega, g) = (params.omega, params.big_gamma);
    let up = series.harmonic(1) / Complex64::new(omega, 2.0 * g);
    let down = series.harmonic(-1) / Complex64::new(omega, -2.0 * g);
    Ok(2.0 * params.gamma * g * (up + down).re)
}

/// One point of a current-field sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentPoint {
    pub omega: f64,
    pub big_gamma: f64,
    pub current: f64,
}

pub fn current_vs_field(params: &ModelParams, omega_grid: &[f64]) -> Result<Vec<CurrentPoint>> {
    if omega_grid.is_empty() {
        return Err(Error::Parameter("omega grid is empty".into()));
    }
    if omega_grid.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::Parameter("omega grid must be strictly positive".into()));
    }
    if omega_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("omega grid must be strictly increasing".into()));
    }
    omega_grid
        .iter()
        .map(|&omega| {
            let p = params.with_omega(omega);
            Ok(CurrentPoint { omega, big_gamma: p.big_gamma, current: dc_current_closed_form(&p)? })
        })
        .collect()
}

/// `||Δn|| = (2π)^{-1} ∫ dk |n - n_ex| / n_ex` on the shared grid.
pub fn accuracy_norm(approx: &MomentumProfile, exact: &MomentumProfile) -> Result<f64> {
    if !approx.same_grid(exact) || approx.n.len() != approx.km.len() || exact.n.len() != exact.km.len() {
        return Err(Error::Parameter("profiles are not on the same momentum grid".into()));
    }
    if let Some(bad) = exact.n.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("reference occupation {bad} is not positive")));
    }
    let sum: f64 = approx.n.iter().zip(&exact.n).map(|(a, e)| (a - e).abs() / e).sum();
    Ok(sum / approx.n.len() as f64)
}

/// One `(Ω, Γ)` cell of the accuracy heatmap; `norm` is NaN when the oracle failed.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub omega: f64,
    pub big_gamma: f64,
    pub norm: f64,
    pub failure: Option<String>,
}

/// `||Δn||` over an `(Ω, Γ)` grid with the finite-bath oracle as reference.
/// Cells are ordered row-major with `Ω` as the slow index.
pub fn norm_heatmap(
    base: &ModelParams,
    omega_grid: &[f64],
    gamma_grid: &[f64],
    oracle_config: &OracleConfig,
    n_k: usize,
) -> Result<Vec<HeatmapCell>> {
    if omega_grid.is_empty() || gamma_grid.is_empty() {
        return Err(Error::Parameter("heatmap grids must be non-empty".into()));
    }
    if omega_grid.iter().chain(gamma_grid).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Parameter("heatmap grids must be strictly positive".into()));
    }
    momentum_grid(n_k)?;
    oracle_config.validate()?;
    let cells: Vec<(f64, f64)> =
        omega_grid.iter().flat_map(|&w| gamma_grid.iter().map(move |&g| (w, g))).collect();
    Ok(cells
        .into_par_iter()
        .map(|(omega, g)| {
            let p = base.with_omega(omega).with_big_gamma(g);
            let outcome = p.validate().and_then(|_| {
                let approx = steady_state_profile(&p, n_k)?;
                let exact = oracle::exact_momentum_profile(&p, oracle_config, n_k)?;
                accuracy_norm(&approx, &exact)
            });
            match outcome {
                Ok(norm) => HeatmapCell { omega, big_gamma: g, norm, failure: None },
                Err(e) => HeatmapCell { omega, big_gamma: g, norm: f64::NAN, failure: Some(e.to_string()) },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig2() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn grid_layout() {
        let g = momentum_grid(8).unwrap();
        assert!((g[0] + 0.75 * PI).abs() < 1e-15);
        assert!((g[7] - PI).abs() < 1e-15);
        assert!(momentum_grid(4).is_err());
    }

    #[test]
    fn profile_mean_is_half_filling() {
        for &(omega, g) in &[(0.5, 0.1), (0.2, 0.05), (2.0, 0.2)] {
            let p = fig2().with_omega(omega).with_big_gamma(g);
            let prof = steady_state_profile(&p, 256).unwrap();
            assert!((prof.mean() - 0.5).abs() < 1e-8, "{}", prof.mean());
        }
    }

    #[test]
    fn profile_shifts_with_field() {
        // without field the distribution is centred at k = 0, so the first
        // harmonic is real; the field rotates it monotonically
        let offsets: Vec<f64> = [0.05, 0.1, 0.2, 0.4]
            .iter()
            .map(|&omega| steady_state_profile(&fig2().with_omega(omega), 256).unwrap().first_harmonic().arg().abs())
            .collect();
        assert!(offsets.windows(2).all(|w| w[1] > w[0]), "{offsets:?}");
    }

    #[test]
    fn closed_form_current_matches_velocity_quadrature() {
        for &omega in &[0.1, 0.5, 1.0, 2.0, 4.0] {
            for &g in &[0.02, 0.05, 0.1, 0.2, 0.4] {
                let p = fig2().with_omega(omega).with_big_gamma(g);
                let closed = dc_current_closed_form(&p).unwrap();
                let quad = steady_state_profile(&p, 256).unwrap().velocity_current();
                assert!((closed - quad).abs() < 1e-8, "({omega}, {g}): {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn ohmic_regime_and_peak() {
        let p = fig2();
        let j1 = dc_current_closed_form(&p.with_omega(0.01)).unwrap();
        let j2 = dc_current_closed_form(&p.with_omega(0.02)).unwrap();
        assert!((j2 / j1 - 2.0).abs() < 0.04, "{}", j2 / j1);
        assert!(dc_current_closed_form(&p.with_omega(4.0)).unwrap() < dc_current_closed_form(&p.with_omega(1.0)).unwrap());
    }

    #[test]
    fn current_is_positive_and_single_peaked() {
        let grid: Vec<f64> = (0..60).map(|i| 0.05 + 0.1 * i as f64).collect();
        for &g in &[0.02, 0.05, 0.1, 0.2, 0.3] {
            let pts = current_vs_field(&fig2().with_big_gamma(g), &grid).unwrap();
            assert!(pts.iter().all(|p| p.current > 0.0));
            if g > 0.1 {
                // stronger coupling develops a second maximum
                continue;
            }
            let peak = pts.iter().enumerate().max_by(|a, b| a.1.current.total_cmp(&b.1.current)).unwrap().0;
            assert!(pts[..=peak].windows(2).all(|w| w[1].current >= w[0].current));
            assert!(pts[peak..].windows(2).all(|w| w[1].current <= w[0].current));
        }
    }

    #[test]
    fn current_proportional_to_coupling_when_weak() {
        // Γ ≪ Ω ≪ γ: the current is carried by the bath-induced drift, J ∝ Γ
        let j = |g: f64| dc_current_closed_form(&fig2().with_omega(0.5).with_big_gamma(g)).unwrap();
        let ratio = j(0.01) / j(0.005);
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn current_sweep_validation() {
        assert!(current_vs_field(&fig2(), &[]).is_err());
        assert!(current_vs_field(&fig2(), &[0.5, 0.2]).is_err());
        assert!(current_vs_field(&fig2(), &[0.0, 0.2]).is_err());
        assert!(dc_current_closed_form(&fig2().with_big_gamma(0.0)).is_err());
    }

    #[test]
    fn reversed_field_flips_current() {
        for &omega in &[0.3, 1.0, 2.5] {
            let prof = steady_state_profile(&fig2().with_omega(omega), 256).unwrap();
            let j = prof.velocity_current();
            assert!((prof.reversed_field().velocity_current() + j).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_basic_cases() {
        let exact = steady_state_profile(&fig2(), 64).unwrap();
        assert_eq!(accuracy_norm(&exact, &exact).unwrap(), 0.0);
        let scaled = MomentumProfile { n: exact.n.iter().map(|v| v * 1.05).collect(), ..exact.clone() };
        assert!((accuracy_norm(&scaled, &exact).unwrap() - 0.05).abs() < 1e-12);
        let other = steady_state_profile(&fig2(), 128).unwrap();
        assert!(matches!(accuracy_norm(&other, &exact), Err(Error::Parameter(_))));
        let mut zero = exact.clone();
        zero.n[3] = 0.0;
        assert!(matches!(accuracy_norm(&exact, &zero), Err(Error::Domain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn norm_scales_with_deviation(c in 1.0f64..5.0, seed in 0u64..1000) {
            let exact = steady_state_profile(&fig2(), 64).unwrap();
            let dev: Vec<f64> = (0..64).map(|j| 0.01 * (((j as u64 * 7919 + seed) % 13) as f64 - 6.0)).collect();
            let a = MomentumProfile { n: exact.n.iter().zip(&dev).map(|(n, d)| n + d).collect(), ..exact.clone() };
            let b = MomentumProfile { n: exact.n.iter().zip(&dev).map(|(n, d)| n + c * d).collect(), ..exact.clone() };
            let na = accuracy_norm(&a, &exact).unwrap();
            let nb = accuracy_norm(&b, &exact).unwrap();
            prop_assert!(na >= 0.0);
            prop_assert!((nb - c * na).abs() < 1e-12);
        }
    }
}
