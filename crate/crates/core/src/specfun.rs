//! Special functions for the Bessel-series coefficients.
//!
//! Everything here is real-valued and self-contained: integer-order Bessel
//! functions of the first kind via Miller's backward recurrence, the real part
//! of the digamma function on the line `Re z = 1/2`, and an overflow-safe Fermi
//! factor.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant (mathematical constant, not a fitted value).
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.57721566490153286;

const MAX_ORDER: u64 = 1_000_000;
const RESCALE_ABOVE: f64 = 1e100;

/// Integer-order Bessel function of the first kind `J_order(x)` for `x >= 0`.
pub fn bessel_j(order: i64, x: f64) -> Result<f64> {
    check_argument(x)?;
    let n = order.unsigned_abs();
    if n > MAX_ORDER {
        return Err(Error::Domain(format!("Bessel order {order} exceeds {MAX_ORDER}")));
    }
    let value = bessel_sequence(x, n as usize)[n as usize];
    Ok(if order < 0 && n % 2 == 1 { -value } else { value })
}

fn check_argument(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite, got {x}")));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("Bessel argument must be >= 0, got {x}")));
    }
    Ok(())
}

/// `J_0(x) ..= J_n(x)` for a finite `x >= 0`.
///
/// Small arguments use the power series order by order; otherwise a single
/// downward recurrence is normalised with `J_0^2 + 2 Σ J_k^2 = 1`, and the sign
/// is fixed with `J_0 + 2 Σ J_{2k} = 1`.
fn bessel_sequence(x: f64, n: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; n + 1];
        out[0] = 1.0;
        return out;
    }
    if x < 1.0 {
        return (0..=n).map(|order| bessel_power_series(order, x)).collect();
    }
    miller_sequence(x, n)
}

fn bessel_power_series(order: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for i in 1..=order {
        lead *= half / i as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    for k in 1..200 {
        term *= q / (k as f64 * (k + order) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller_sequence(x: f64, n: usize) -> Vec<f64> {
    let reach = (n as f64).max(x);
    let margin = 20.0 + 20.0 * (0.5 * x).cbrt();
    let mut start = (reach + margin).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }

    let mut seq = vec![0.0; start + 2];
    seq[start] = 1e-30;
    for k in (1..=start).rev() {
        let next = (2.0 * k as f64 / x) * seq[k] - seq[k + 1];
        seq[k - 1] = next;
        if next.abs() > RESCALE_ABOVE {
            for v in &mut seq[k - 1..=start] {
                *v /= RESCALE_ABOVE;
            }
        }
    }

    let mut sum_sq = seq[0] * seq[0];
    let mut even = seq[0];
    for (k, v) in seq.iter().enumerate().take(start + 1).skip(1) {
        sum_sq += 2.0 * v * v;
        if k % 2 == 0 {
            even += 2.0 * v;
        }
    }
    let scale = even.signum() / sum_sq.sqrt();
    seq.truncate(n + 1);
    seq.resize(n + 1, 0.0);
    for v in &mut seq {
        *v *= scale;
    }
    seq
}

/// Table of `J_l(x)` for `l` in `[-l_max, l_max]` at a fixed argument.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselTable {
    argument: f64,
    l_max: usize,
    // J_0 ..= J_{l_max}; negative orders come from J_{-l} = (-1)^l J_l.
    values: Vec<f64>,
}

impl BesselTable {
    pub fn argument(&self) -> f64 {
        self.argument
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// `J_l(x)`; zero outside the stored range.
    pub fn get(&self, l: i64) -> f64 {
        let n = l.unsigned_abs() as usize;
        if n > self.l_max {
            return 0.0;
        }
        let v = self.values[n];
        if l < 0 && n % 2 == 1 {
            -v
        } else {
            v
        }
    }

    /// Orders `-l_max ..= l_max` in increasing order.
    pub fn orders(&self) -> std::ops::RangeInclusive<i64> {
        -(self.l_max as i64)..=self.l_max as i64
    }

    /// `(l, J_l)` pairs over the full signed range.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.orders().map(move |l| (l, self.get(l)))
    }

    /// `Σ_l J_l(x)^2` over the stored range (equals 1 without truncation).
    pub fn completeness(&self) -> f64 {
        self.iter().map(|(_, v)| v * v).sum()
    }
}

/// Builds a Bessel table whose cut-off `l_max` is the smallest integer
/// `>= x + 20` with `|J_{l_max}(x)| < tol`.
pub fn bessel_table(x: f64, tol: f64) -> Result<BesselTable> {
    check_argument(x)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Parameter(format!("Bessel table tolerance must lie in (0, 1), got {tol}")));
    }
    let first = (x + 20.0).ceil() as usize;
    let mut reach = first + 16 + (4.0 * (0.5 * x).cbrt()).ceil() as usize;
    loop {
        if reach as u64 > MAX_ORDER {
            return Err(Error::Domain(format!("no Bessel cut-off below order {MAX_ORDER} at x = {x}")));
        }
        let seq = bessel_sequence(x, reach);
        if let Some(l_max) = (first..=reach).find(|&l| seq[l].abs() < tol) {
            let mut values = seq;
            values.truncate(l_max + 1);
            return Ok(BesselTable { argument: x, l_max, values });
        }
        reach *= 2;
    }
}

/// `Re ψ(1/2 - i y)`, the real part of the digamma function on `Re z = 1/2`.
///
/// The argument is shifted upward with `ψ(z) = ψ(z + 1) - 1/z` until
/// `Re z >= 10`, then the asymptotic Bernoulli series is summed.
pub fn re_digamma_half_offset(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::Domain(format!("digamma argument must be finite, got {y}")));
    }
    // Re ψ is even in y; work with the conjugate-symmetric half line.
    let mut z = Complex64::new(0.5, y.abs());
    let mut shift = 0.0;
    while z.re < 10.0 {
        shift += z.inv().re;
        z += 1.0;
    }
    Ok(digamma_asymptotic(z).re - shift)
}

fn digamma_asymptotic(z: Complex64) -> Complex64 {
    // B_{2k} / (2k) for k = 1..=8
    const COEFFS: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
        -3617.0 / 8160.0,
    ];
    let w = (z * z).inv();
    let mut tail = Complex64::new(0.0, 0.0);
    for c in COEFFS.iter().rev() {
        tail = (tail + c) * w;
    }
    z.ln() - 0.5 * z.inv() - tail
}

/// Fermi–Dirac occupation `1 / (exp(beta * energy) + 1)`.
pub fn fermi(energy: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("inverse temperature must be > 0, got {beta}")));
    }
    let x = beta * energy;
    Ok(if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (x.exp() + 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series with `terms` terms, no shortcuts; independent of the
    /// production summation loop.
    fn series_oracle(order: u32, x: f64, terms: u32) -> f64 {
        let mut sum = 0.0;
        for k in 0..terms {
            let mut t = 1.0;
            for i in 1..=k {
                t *= (x / 2.0) * (x / 2.0) / (i as f64 * i as f64);
            }
            for i in 1..=order {
                t *= (x / 2.0) / ((k + i) as f64);
            }
            sum += if k % 2 == 0 { t } else { -t };
        }
        sum
    }

    /// `J_n(x) = (2π)^{-1} ∫ cos(nτ - x sin τ) dτ` by the periodic trapezoid
    /// rule, which is exact to rounding once the node count exceeds n + x.
    fn integral_oracle(order: i64, x: f64) -> f64 {
        let m = 8192;
        let h = 2.0 * std::f64::consts::PI / m as f64;
        (0..m)
            .map(|j| {
                let tau = j as f64 * h;
                (order as f64 * tau - x * tau.sin()).cos()
            })
            .sum::<f64>()
            / m as f64
    }

    #[test]
    fn bessel_trivial_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(-3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bessel_negative_order_matches_series() {
        let oracle = series_oracle(1, 2.0, 30);
        assert!((oracle - 0.5767248078).abs() < 1e-10);
        let got = bessel_j(-1, 2.0).unwrap();
        assert!((got + oracle).abs() < 1e-12 * oracle.abs(), "{got} vs {oracle}");
    }

    #[test]
    fn bessel_matches_series_for_moderate_argument() {
        for &x in &[0.3, 0.9, 1.0, 2.5, 4.0, 5.0] {
            for order in 0..12u32 {
                let oracle = series_oracle(order, x, 40);
                let got = bessel_j(order as i64, x).unwrap();
                assert!(
                    (got - oracle).abs() <= 1e-12 * oracle.abs().max(1e-3),
                    "J_{order}({x}) = {got}, series {oracle}"
                );
            }
        }
    }

    #[test]
    fn bessel_matches_integral_for_large_argument() {
        for &x in &[12.5, 40.0, 200.0, 999.0] {
            for &order in &[0i64, 1, 7, 50, 180, -33] {
                let oracle = integral_oracle(order, x);
                let got = bessel_j(order, x).unwrap();
                assert!((got - oracle).abs() < 1e-13, "J_{order}({x}) = {got}, integral {oracle}");
            }
        }
    }

    #[test]
    fn bessel_rejects_bad_arguments() {
        assert!(matches!(bessel_j(0, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(0, f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(2_000_000, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bessel_huge_order_underflows_quietly() {
        let v = bessel_j(1_000_000, 3.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn table_at_zero() {
        let t = bessel_table(0.0, 1e-15).unwrap();
        assert_eq!(t.get(0), 1.0);
        assert!(t.iter().filter(|&(l, _)| l != 0).all(|(_, v)| v == 0.0));
    }

    #[test]
    fn table_at_four() {
        let t = bessel_table(4.0, 1e-15).unwrap();
        assert!(t.l_max() >= 24);
        assert!((t.completeness() - 1.0).abs() < 1e-12);
        let oracle = series_oracle(0, 4.0, 40);
        assert!((oracle + 0.3971498099).abs() < 1e-10);
        assert!((t.get(0) - oracle).abs() < 1e-13);
        assert!(t.get(t.l_max() as i64).abs() < 1e-15);
    }

    #[test]
    fn table_invariants_over_range() {
        for i in 0..=100 {
            let x = 0.5 * i as f64;
            let t = bessel_table(x, 1e-15).unwrap();
            let c = t.completeness();
            assert!((c - 1.0).abs() < 1e-10, "x = {x}: Σ J² = {c}");
            assert!(t.l_max() as f64 >= x + 20.0);
            for l in 1..=t.l_max() as i64 {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(t.get(-l), sign * t.get(l));
            }
        }
    }

    #[test]
    fn table_rejects_bad_tolerance() {
        assert!(matches!(bessel_table(1.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(bessel_table(1.0, 1.0), Err(Error::Parameter(_))));
    }

    /// ψ(z) = -γ + Σ_{n≥0} [1/(n+1) - 1/(n+z)], summed to `n = 10^6` with a
    /// midpoint-rule estimate of the remainder.
    fn digamma_series_oracle(y: f64) -> f64 {
        let z = Complex64::new(0.5, -y);
        let n_terms = 1_000_000;
        let mut acc = Complex64::new(0.0, 0.0);
        for n in (0..n_terms).rev() {
            let nf = n as f64;
            acc += 1.0 / (nf + 1.0) - (z + nf).inv();
        }
        let nf = n_terms as f64;
        let tail = ((z + nf - 0.5) / (nf + 0.5)).ln();
        (acc + tail).re - EULER_GAMMA
    }

    #[test]
    fn digamma_at_zero() {
        let oracle = digamma_series_oracle(0.0);
        let closed = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        assert!((oracle - closed).abs() < 1e-11);
        assert!((closed + 1.9635100260).abs() < 1e-10);
        let got = re_digamma_half_offset(0.0).unwrap();
        assert!((got - closed).abs() < 1e-12 * closed.abs());
    }

    #[test]
    fn digamma_matches_series() {
        for &y in &[0.3, 1.0, 3.7, 7.9585] {
            let oracle = digamma_series_oracle(y);
            let got = re_digamma_half_offset(y).unwrap();
            assert!((got - oracle).abs() < 1e-10, "y = {y}: {got} vs {oracle}");
        }
    }

    #[test]
    fn digamma_even_and_asymptotic() {
        let a = re_digamma_half_offset(3.7).unwrap();
        let b = re_digamma_half_offset(-3.7).unwrap();
        assert_eq!(a, b);
        // ψ(z) ≈ ln z - 1/(2z) - 1/(12 z²): the leading term at |z| = 100 is ln 100.
        let v = re_digamma_half_offset(100.0).unwrap();
        assert!((v - 100f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn digamma_rejects_non_finite() {
        assert!(re_digamma_half_offset(f64::NAN).is_err());
        assert!(re_digamma_half_offset(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn fermi_values() {
        assert_eq!(fermi(0.0, 3.0).unwrap(), 0.5);
        let s = fermi(2.3, 10.0).unwrap() + fermi(-2.3, 10.0).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        let hot = fermi(1000.0, 10.0).unwrap();
        assert!(hot >= 0.0 && hot < 1e-300);
        assert_eq!(fermi(-1000.0, 10.0).unwrap(), 1.0);
        assert!(matches!(fermi(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(fermi(1.0, -2.0), Err(Error::Domain(_))));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn digamma_is_even(y in -50.0f64..50.0) {
                let a = re_digamma_half_offset(y).unwrap();
                let b = re_digamma_half_offset(-y).unwrap();
                prop_assert!((a - b).abs() < 1e-13);
            }

            #[test]
            fn fermi_in_unit_interval_and_decreasing(e in -3.0f64..3.0, de in 1e-3f64..2.0, beta in 0.1f64..10.0) {
                // |βE| ≤ 30 keeps both saturations resolvable in double precision
                let lo = fermi(e, beta).unwrap();
                let hi = fermi(e + de, beta).unwrap();
                prop_assert!(lo > 0.0 && lo < 1.0);
                prop_assert!(hi <= lo);
                if (beta * e).abs() < 20.0 {
                    prop_assert!(hi < lo);
                }
            }
        }
    }
}
