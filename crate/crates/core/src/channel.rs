//! Channel representations of the momentum-mode dynamics: the Liouvillian and
//! dynamical map in the normalised Pauli basis, the Choi matrix and Kraus
//! operators, and the long-time Kraus set.

use std::sync::OnceLock;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::master::generator;
use crate::model::CoefficientSeries;
use crate::ops::{self, Mat2, Mat4};

/// Default eigenvalue cut-off for Kraus extraction.
pub const KRAUS_TOL: f64 = 1e-10;

/// `F_rs = Tr(σ_r φ(σ_s))` or `L_rs = Tr(σ_r Λ(σ_s))`; real because the
/// basis is Hermitian and the maps preserve Hermiticity.
pub type MapMatrix = Matrix4<f64>;

/// `σ_0..σ_3 = (I, X, Y, Z)/√2`, orthonormal under `Tr(A†B)`.
pub fn pauli_basis() -> &'static [Mat2; 4] {
    static BASIS: OnceLock<[Mat2; 4]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let s = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
        [Mat2::identity() * s, ops::pauli_x() * s, ops::pauli_y() * s, ops::pauli_z() * s]
    })
}

/// `Tr[σ_r σ_a σ_s σ_b]` indexed `[r][a][s][b]`.
fn trace_tensor() -> &'static [[[[Complex64; 4]; 4]; 4]; 4] {
    static TENSOR: OnceLock<[[[[Complex64; 4]; 4]; 4]; 4]> = OnceLock::new();
    TENSOR.get_or_init(|| {
        let s = pauli_basis();
        let mut t = [[[[Complex64::new(0.0, 0.0); 4]; 4]; 4]; 4];
        for r in 0..4 {
            for a in 0..4 {
                for q in 0..4 {
                    for b in 0..4 {
                        t[r][a][q][b] = (s[r] * s[a] * s[q] * s[b]).trace();
                    }
                }
            }
        }
        t
    })
}

/// Pauli coordinates `x_s = Tr(σ_s ρ)`.
pub fn to_pauli(rho: &Mat2) -> Vector4<Complex64> {
    let s = pauli_basis();
    Vector4::from_fn(|i, _| (s[i] * rho).trace())
}

pub fn from_pauli(x: &Vector4<Complex64>) -> Mat2 {
    pauli_basis().iter().zip(x.iter()).map(|(s, &c)| s * c).sum()
}

/// Applies a map given in the Pauli basis to an operator.
pub fn apply_map(f: &MapMatrix, rho: &Mat2) -> Mat2 {
    let x = to_pauli(rho);
    let fx = f.map(Complex64::from) * x;
    from_pauli(&fx)
}

/// Generator of the master equation at time `t` in the Pauli basis.
pub fn liouvillian_matrix(series: &CoefficientSeries, t: f64) -> MapMatrix {
    let (a, big_a) = series.coefficients(t);
    let eps = series.level(t);
    let s = pauli_basis();
    MapMatrix::from_fn(|r, c| (s[r] * generator(eps, a, big_a, &s[c])).trace().re)
}

/// Dynamical map `F(t, t0)` from `dF/dt = L(t) F`, `F(t0) = 1`, with RK4.
///
/// Each step is applied as a propagator `P_n` with `F ← P_n F`; a step with
/// `det P_n ≤ 0` means the map has left the invertible, orientation-preserving
/// regime and is reported as an integration failure.
pub fn propagate_map(series: &CoefficientSeries, t0: f64, t: f64, dt: f64) -> Result<MapMatrix> {
    if !(t >= t0) || !t.is_finite() || !t0.is_finite() {
        return Err(Error::Parameter(format!("need t >= t0, got t0 = {t0}, t = {t}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Parameter(format!("dt must be > 0, got {dt}")));
    }
    let mut f = MapMatrix::identity();
    if t == t0 {
        return Ok(f);
    }
    let steps = ((t - t0) / dt).round().max(1.0) as usize;
    let h = (t - t0) / steps as f64;
    let id = MapMatrix::identity();
    let mut l_start = liouvillian_matrix(series, t0);
    for n in 0..steps {
        let tn = t0 + n as f64 * h;
        let l_mid = liouvillian_matrix(series, tn + 0.5 * h);
        let l_end = liouvillian_matrix(series, tn + h);
        let k1 = l_start;
        let k2 = l_mid * (id + k1 * (0.5 * h));
        let k3 = l_mid * (id + k2 * (0.5 * h));
        let k4 = l_end * (id + k3 * h);
        let step = id + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        let det = step.determinant();
        if !(det > 0.0) {
            return Err(Error::IntegrationFailure(format!("map step determinant {det:e} at t = {tn}")));
        }
        f = step * f;
        l_start = l_end;
    }
    Ok(f)
}

/// Choi matrix in the normalised Pauli basis: `φ(ρ) = Σ_ab S_ab σ_a ρ σ_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiMatrix(pub Mat4);

impl ChoiMatrix {
    /// `S_ab = Σ_rs F_sr Tr[σ_r σ_a σ_s σ_b]`.
    pub fn from_map(f: &MapMatrix) -> Self {
        let t = trace_tensor();
        let mut s = Mat4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..4 {
                    for q in 0..4 {
                        acc += t[r][a][q][b] * f[(q, r)];
                    }
                }
                s[(a, b)] = acc;
            }
        }
        Self(s)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        let s = pauli_basis();
        let mut out = Mat2::zeros();
        for a in 0..4 {
            for b in 0..4 {
                out += s[a] * rho * s[b] * self.0[(a, b)];
            }
        }
        out
    }

    /// `max |Σ_ab S_ab σ_b σ_a - 1|`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let s = pauli_basis();
        let mut sum = Mat2::zeros();
        for a in 0..4 {
            for b in 0..4 {
                sum += s[b] * s[a] * self.0[(a, b)];
            }
        }
        ops::max_abs(&(sum - Mat2::identity()))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        ops::max_abs(&(self.0 - self.0.adjoint()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(ops::hermitian_part(&self.0)).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// Max-abs entry distance, the canonical test of channel equality.
    pub fn distance(&self, other: &Self) -> f64 {
        ops::max_abs(&(self.0 - other.0))
    }
}

pub fn choi_from_map(f: &MapMatrix) -> ChoiMatrix {
    ChoiMatrix::from_map(f)
}

/// Operator-sum representation `ρ ↦ Σ_i K_i ρ K_i†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<Mat2>,
    /// Choi eigenvalues of the retained operators (empty for closed-form sets).
    pub eigenvalues: Vec<f64>,
    /// Pauli-basis eigenvectors `X(i)` of the retained operators.
    pub vectors: Vec<Vector4<Complex64>>,
    /// Eigenvalues in `(-tol, tol)` that were dropped.
    pub clipped: Vec<f64>,
}

impl KrausSet {
    pub fn from_operators(operators: Vec<Mat2>) -> Self {
        Self { operators, eigenvalues: Vec::new(), vectors: Vec::new(), clipped: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        self.operators.iter().map(|k| k * rho * k.adjoint()).sum()
    }

    /// `max |Σ K†K - 1|`.
    pub fn completeness_residual(&self) -> f64 {
        let sum: Mat2 = self.operators.iter().map(|k| k.adjoint() * k).sum();
        ops::max_abs(&(sum - Mat2::identity()))
    }

    /// `S_ab = Σ_i x_a(i) x_b(i)*` with `K_i = Σ_a x_a(i) σ_a`.
    pub fn choi(&self) -> ChoiMatrix {
        let mut s = Mat4::zeros();
        for k in &self.operators {
            let x = to_pauli(k);
            s += x * x.adjoint();
        }
        ChoiMatrix(s)
    }

    /// `K_i ↦ Σ_j W_ij K_j` for a matrix `W` with as many columns as operators.
    pub fn mixed(&self, w: &nalgebra::DMatrix<Complex64>) -> Result<Self> {
        if w.ncols() != self.operators.len() {
            return Err(Error::Parameter(format!(
                "mixing matrix has {} columns for {} operators",
                w.ncols(),
                self.operators.len()
            )));
        }
        let ops = (0..w.nrows())
            .map(|i| self.operators.iter().enumerate().map(|(j, k)| k * w[(i, j)]).sum())
            .collect();
        Ok(Self::from_operators(ops))
    }
}

/// `K_i = √λ_i Σ_a X(i)_a σ_a` from the eigendecomposition of `S`.
pub fn kraus_from_choi(choi: &ChoiMatrix, tol: f64) -> Result<KrausSet> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be > 0, got {tol}")));
    }
    if choi.hermiticity_residual() > 1e-9 {
        return Err(Error::Domain(format!("Choi matrix not Hermitian ({:e})", choi.hermiticity_residual())));
    }
    let eig = SymmetricEigen::new(ops::hermitian_part(&choi.0));
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let basis = pauli_basis();
    let mut set = KrausSet::from_operators(Vec::new());
    for i in order {
        let lambda = eig.eigenvalues[i];
        if lambda < -tol {
            return Err(Error::NotCompletelyPositive { eigenvalue: lambda, tol });
        }
        if lambda < tol {
            set.clipped.push(lambda);
            continue;
        }
        let x: Vector4<Complex64> = eig.eigenvectors.column(i).into_owned();
        let k: Mat2 = basis.iter().zip(x.iter()).map(|(s, &c)| s * c).sum::<Mat2>() * Complex64::from(lambda.sqrt());
        set.operators.push(k);
        set.eigenvalues.push(lambda);
        set.vectors.push(x);
    }
    Ok(set)
}

/// Long-time Kraus set `{√(1-n)|0⟩⟨0|, √n|1⟩⟨1|, √n|1⟩⟨0|, √(1-n)|0⟩⟨1|}`,
/// equivalently `{√(1-n) P_0, √n P_1, √n X P_0, √(1-n) X P_1}`.
pub fn longtime_kraus(n: f64) -> Result<KrausSet> {
    if !(0.0..=1.0).contains(&n) {
        return Err(Error::Domain(format!("occupation must lie in [0, 1], got {n}")));
    }
    let (p, q) = (Complex64::from((1.0 - n).sqrt()), Complex64::from(n.sqrt()));
    Ok(KrausSet::from_operators(vec![
        ops::ket_bra(0, 0) * p,
        ops::ket_bra(1, 1) * q,
        ops::ket_bra(1, 0) * q,
        ops::ket_bra(0, 1) * p,
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master::{evolve_density_matrix, steady_state_occupation, QubitState};
    use crate::model::ModelParams;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut impl Rng) -> Mat2 {
        let v = nalgebra::Vector2::new(
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        );
        let w = nalgebra::Vector2::new(
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        );
        let m = v * v.adjoint() + w * w.adjoint() * Complex64::from(rng.random_range(0.0..1.0));
        m / m.trace()
    }

    fn random_unitary(rng: &mut impl Rng, n: usize) -> nalgebra::DMatrix<Complex64> {
        let a = nalgebra::DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        a.qr().q()
    }

    #[test]
    fn basis_is_orthonormal() {
        let s = pauli_basis();
        for a in 0..4 {
            for b in 0..4 {
                let ip = (s[a].adjoint() * s[b]).trace();
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((ip - target).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn liouvillian_structure() {
        let p = ModelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = rng.random_range(-3.0..3.0);
            let t = rng.random_range(0.0..50.0);
            let s = CoefficientSeries::new(&p.with_big_gamma(rng.random_range(0.0..0.5)), k).unwrap();
            let l = liouvillian_matrix(&s, t);
            assert!(l.row(0).iter().all(|v| v.abs() < 1e-15));
            // population sector reproduces dn/dt = -2Γn + 2 Re a
            assert!((l[(3, 3)] + 2.0 * s.model.big_gamma).abs() < 1e-13);
        }
    }

    #[test]
    fn closed_system_generator_is_a_rotation() {
        let p = ModelParams::default().with_big_gamma(0.0);
        let s = CoefficientSeries::new(&p, 0.7).unwrap();
        let t = 1.3;
        let l = liouvillian_matrix(&s, t);
        let eps = s.level(t);
        let mut expected = MapMatrix::zeros();
        expected[(1, 2)] = eps;
        expected[(2, 1)] = -eps;
        assert!((l - expected).abs().max() < 1e-15, "{l}");
        let ev = l.complex_eigenvalues();
        let mut im: Vec<f64> = ev.iter().map(|z| z.im).collect();
        im.sort_by(f64::total_cmp);
        assert!((im[0] + eps.abs()).abs() < 1e-12 && (im[3] - eps.abs()).abs() < 1e-12);
    }

    #[test]
    fn map_reproduces_density_matrix_evolution() {
        let s = CoefficientSeries::new(&ModelParams::default(), 0.4).unwrap();
        let f = propagate_map(&s, 0.0, 30.0, 0.01).unwrap();
        let tr = evolve_density_matrix(&s, &QubitState::empty(), 30.0, 0.01).unwrap();
        let out = apply_map(&f, &ops::ket_bra(0, 0));
        assert!((out[(1, 1)].re - tr.occupations.last().unwrap()).abs() < 1e-8);
        assert_eq!(propagate_map(&s, 2.0, 2.0, 0.01).unwrap(), MapMatrix::identity());
        assert!(propagate_map(&s, 2.0, 1.0, 0.01).is_err());
    }

    #[test]
    fn long_time_map_forgets_initial_state() {
        let s = CoefficientSeries::new(&ModelParams::default(), -1.0).unwrap();
        let f = propagate_map(&s, 0.0, 200.0, 0.01).unwrap();
        let a = apply_map(&f, &ops::ket_bra(0, 0));
        let b = apply_map(&f, &ops::ket_bra(1, 1));
        assert!(ops::max_abs(&(a - b)) < 1e-6);
    }

    #[test]
    fn identity_map_choi() {
        let choi = ChoiMatrix::from_map(&MapMatrix::identity());
        let mut expected = Mat4::zeros();
        expected[(0, 0)] = Complex64::from(2.0);
        assert!(choi.distance(&ChoiMatrix(expected)) < 1e-15);
        let k = kraus_from_choi(&choi, KRAUS_TOL).unwrap();
        assert_eq!(k.len(), 1);
        let op = k.operators[0];
        let phase = op[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-14);
        assert!(ops::max_abs(&(op - Mat2::identity() * phase)) < 1e-14);
    }

    #[test]
    fn choi_action_matches_map() {
        let s = CoefficientSeries::new(&ModelParams::default(), 1.2).unwrap();
        let f = propagate_map(&s, 0.0, 7.0, 0.01).unwrap();
        let choi = ChoiMatrix::from_map(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let rho = random_state(&mut rng);
            assert!(ops::max_abs(&(choi.apply(&rho) - apply_map(&f, &rho))) < 1e-10);
        }
        assert!(choi.trace_preservation_residual() < 1e-9);
        assert!(choi.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn longtime_choi_spectrum() {
        for &n in &[0.0, 0.3, 0.5, 0.8] {
            let ev = longtime_kraus(n).unwrap().choi().eigenvalues();
            let mut expected = [1.0 - n, 1.0 - n, n, n];
            expected.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in ev.iter().zip(expected) {
                assert!((a - b).abs() < 1e-12, "{ev:?}");
            }
        }
    }

    #[test]
    fn longtime_kraus_action() {
        assert!(longtime_kraus(-0.1).is_err());
        assert!(longtime_kraus(1.1).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(n, target) in &[(0.0, [1.0, 0.0]), (0.5, [0.5, 0.5]), (0.3, [0.7, 0.3])] {
            let set = longtime_kraus(n).unwrap();
            assert!(set.completeness_residual() < 1e-15);
            for _ in 0..20 {
                let out = set.apply(&random_state(&mut rng));
                let expected = Mat2::from_diagonal(&nalgebra::Vector2::new(target[0].into(), target[1].into()));
                assert!(ops::max_abs(&(out - expected)) < 1e-12);
            }
        }
    }

    #[test]
    fn extracted_kraus_matches_closed_form() {
        let closed = longtime_kraus(0.3).unwrap();
        let extracted = kraus_from_choi(&closed.choi(), KRAUS_TOL).unwrap();
        assert!(extracted.completeness_residual() < 1e-12);
        assert!(extracted.choi().distance(&closed.choi()) < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rho = random_state(&mut rng);
            let out = extracted.apply(&rho);
            assert!((out[(0, 0)].re - 0.7).abs() < 1e-8 && (out[(1, 1)].re - 0.3).abs() < 1e-8);
            assert!(out[(0, 1)].norm() < 1e-8);
        }
    }

    #[test]
    fn non_cp_choi_is_rejected() {
        let mut s = longtime_kraus(0.3).unwrap().choi().0;
        s[(3, 3)] -= Complex64::from(1.0);
        match kraus_from_choi(&ChoiMatrix(s), KRAUS_TOL) {
            Err(Error::NotCompletelyPositive { eigenvalue, .. }) => assert!(eigenvalue < 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clipped() {
        let mut s = longtime_kraus(0.0).unwrap().choi().0;
        s[(3, 3)] -= Complex64::from(1e-12);
        let set = kraus_from_choi(&ChoiMatrix(s), KRAUS_TOL).unwrap();
        assert!(!set.clipped.is_empty());
        assert!(set.clipped.iter().all(|v| v.abs() < KRAUS_TOL));
    }

    #[test]
    fn trajectory_channel_reaches_longtime_form() {
        let p = ModelParams::default();
        let s = CoefficientSeries::new(&p, 0.9).unwrap();
        let t = 20.0 / p.big_gamma;
        let f = propagate_map(&s, 0.0, t, 0.01).unwrap();
        let set = kraus_from_choi(&choi_from_map(&f), KRAUS_TOL).unwrap();
        assert!(set.completeness_residual() < 1e-8);
        let reference = longtime_kraus(steady_state_occupation(&s, t)).unwrap();
        assert!(set.choi().distance(&reference.choi()) < 1e-5);
    }

    #[test]
    fn early_transient_map_is_not_completely_positive() {
        let s = CoefficientSeries::new(&ModelParams::default(), -0.846).unwrap();
        let f = propagate_map(&s, 0.0, 1.5, 0.01).unwrap();
        match kraus_from_choi(&choi_from_map(&f), KRAUS_TOL) {
            Err(Error::NotCompletelyPositive { eigenvalue, .. }) => assert!(eigenvalue < -0.01),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn unitary_mixing_keeps_choi(n in 0.0f64..1.0, seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set = longtime_kraus(n).unwrap();
            let w = random_unitary(&mut rng, set.len());
            let mixed = set.mixed(&w).unwrap();
            prop_assert!(mixed.choi().distance(&set.choi()) < 1e-12);
        }

        #[test]
        fn cptp_pipeline_matches_evolution(k in -3.0f64..3.0, t in 10.0f64..60.0, a in 0.0f64..1.0, b_re in -0.3f64..0.3) {
            let s = CoefficientSeries::new(&ModelParams::default(), k).unwrap();
            let f = propagate_map(&s, 0.0, t, 0.01).unwrap();
            let set = kraus_from_choi(&choi_from_map(&f), KRAUS_TOL).unwrap();
            prop_assert!(set.completeness_residual() < 1e-8);
            let b = b_re * (a * (1.0 - a)).sqrt();
            let rho0 = QubitState::from_amplitudes(a, Complex64::new(b, 0.0)).unwrap();
            let tr = crate::master::evolve_density_matrix_with(
                &s,
                &rho0,
                &crate::master::EvolveOptions { snapshots: true, ..crate::master::EvolveOptions::new(t, 0.01) },
            ).unwrap();
            let last = tr.snapshots.unwrap().pop().unwrap();
            prop_assert!(ops::max_abs(&(set.apply(&rho0.0) - last.0)) < 1e-7);
        }
    }
}
