//! Three-qubit dilation circuits for the long-time Kraus map, exact
//! density-matrix simulation, finite-shot tomography and readout mitigation.
//!
//! Qubits are numbered 1 (top ancilla), 2 (bottom ancilla) and 3 (system);
//! the register basis is `|top⟩⊗|bottom⟩⊗|system⟩` with qubit 1 most
//! significant.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::channel::{apply_map, choi_from_map, pauli_basis, ChoiMatrix, MapMatrix};
use crate::error::{Error, Result};
use crate::master::QubitState;
use crate::ops::{self, Mat2, Mat8};

pub const TOP: usize = 1;
pub const BOTTOM: usize = 2;
pub const SYSTEM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    CX { control: usize, target: usize },
    /// X on `target` when `control` is `|0⟩`.
    ACX { control: usize, target: usize },
    CZ { control: usize, target: usize },
    ACZ { control: usize, target: usize },
    CRy { control: usize, target: usize, theta: f64 },
    ACRy { control: usize, target: usize, theta: f64 },
    Ry { target: usize, theta: f64 },
    Rx { target: usize, theta: f64 },
    X { target: usize },
    Z { target: usize },
    H { target: usize },
}

/// `R_y(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.
pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    Mat2::new(c.into(), (-s).into(), s.into(), c.into())
}

pub fn rx(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    Mat2::new(c.into(), Complex64::new(0.0, -s), Complex64::new(0.0, -s), c.into())
}

pub fn hadamard() -> Mat2 {
    (ops::pauli_x() + ops::pauli_z()).scale(std::f64::consts::FRAC_1_SQRT_2)
}

fn bit(index: usize, qubit: usize) -> usize {
    (index >> (3 - qubit)) & 1
}

fn check_qubit(q: usize) {
    assert!((1..=3).contains(&q), "qubit index {q} outside 1..=3");
}

/// Embeds `u` on `target`, applied only where `control` reads `on`.
fn embed(u: &Mat2, target: usize, control: Option<(usize, usize)>) -> Mat8 {
    check_qubit(target);
    let mut m = Mat8::zeros();
    for col in 0..8 {
        let active = control.is_none_or(|(q, on)| {
            check_qubit(q);
            assert_ne!(q, target, "control and target coincide");
            bit(col, q) == on
        });
        if !active {
            m[(col, col)] = ops::ONE;
            continue;
        }
        let tb = bit(col, target);
        let mask = 1 << (3 - target);
        for out in 0..2 {
            let row = (col & !mask) | (out << (3 - target));
            m[(row, col)] = u[(out, tb)];
        }
    }
    m
}

impl GateOp {
    /// 8×8 matrix of the gate on the register.
    pub fn matrix(&self) -> Mat8 {
        match *self {
            GateOp::CX { control, target } => embed(&ops::pauli_x(), target, Some((control, 1))),
            GateOp::ACX { control, target } => embed(&ops::pauli_x(), target, Some((control, 0))),
            GateOp::CZ { control, target } => embed(&ops::pauli_z(), target, Some((control, 1))),
            GateOp::ACZ { control, target } => embed(&ops::pauli_z(), target, Some((control, 0))),
            GateOp::CRy { control, target, theta } => embed(&ry(theta), target, Some((control, 1))),
            GateOp::ACRy { control, target, theta } => embed(&ry(theta), target, Some((control, 0))),
            GateOp::Ry { target, theta } => embed(&ry(theta), target, None),
            GateOp::Rx { target, theta } => embed(&rx(theta), target, None),
            GateOp::X { target } => embed(&ops::pauli_x(), target, None),
            GateOp::Z { target } => embed(&ops::pauli_z(), target, None),
            GateOp::H { target } => embed(&hadamard(), target, None),
        }
    }
}

/// Product of the gates in time order (first gate acts first).
pub fn circuit_unitary(gates: &[GateOp]) -> Mat8 {
    gates.iter().fold(Mat8::identity(), |u, g| g.matrix() * u)
}

/// `θ = 2 arcsin √n`.
pub fn theta_for_occupation(n: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&n) {
        return Err(Error::Domain(format!("occupation must lie in [0, 1], got {n}")));
    }
    Ok(2.0 * n.sqrt().asin())
}

/// Final economized circuit `U = cX₃¹ · cX₂³ · [I⊗I⊗R_y(θ)] · cX₃²`, where
/// `cX_c^t` is controlled on `c` and targets `t`.
pub fn final_gates(theta: f64) -> Vec<GateOp> {
    vec![
        GateOp::CX { control: SYSTEM, target: BOTTOM },
        GateOp::Ry { target: SYSTEM, theta },
        GateOp::CX { control: BOTTOM, target: SYSTEM },
        GateOp::CX { control: SYSTEM, target: TOP },
    ]
}

/// Kraus-map circuit: the system-(anti)controlled rotations select the
/// `I`/`X` branch on the top ancilla, the bottom ancilla records the system
/// projector, and the top ancilla flips the system.
pub fn fig6_gates(theta: f64) -> Vec<GateOp> {
    vec![
        GateOp::ACRy { control: SYSTEM, target: TOP, theta: std::f64::consts::PI - theta },
        GateOp::CRy { control: SYSTEM, target: TOP, theta },
        GateOp::CX { control: SYSTEM, target: BOTTOM },
        GateOp::ACX { control: TOP, target: SYSTEM },
    ]
}

/// Economized circuit using `R_y(π-θ) = X R_y(θ) Z` and `cU acU = I⊗U`.
/// The leading anti-controlled Z acts as `Z` on the system while the top
/// ancilla is still `|0⟩`.
pub fn fig7_gates(theta: f64) -> Vec<GateOp> {
    vec![
        GateOp::ACZ { control: TOP, target: SYSTEM },
        GateOp::Ry { target: TOP, theta },
        GateOp::ACX { control: SYSTEM, target: TOP },
        GateOp::CX { control: SYSTEM, target: BOTTOM },
        GateOp::ACX { control: TOP, target: SYSTEM },
    ]
}

pub fn build_unitary_final(theta: f64) -> Mat8 {
    circuit_unitary(&final_gates(theta))
}

pub fn build_circuit_fig6(theta: f64) -> Mat8 {
    circuit_unitary(&fig6_gates(theta))
}

pub fn build_circuit_fig7(theta: f64) -> Mat8 {
    circuit_unitary(&fig7_gates(theta))
}

/// `|00⟩⟨00| ⊗ x`.
pub fn register_with_ancillas(x: &Mat2) -> Mat8 {
    let mut m = Mat8::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(x);
    m
}

/// Sum of the diagonal 2×2 blocks.
pub fn trace_ancillas(rho: &Mat8) -> Mat2 {
    (0..4).map(|b| rho.fixed_view::<2, 2>(2 * b, 2 * b).into_owned()).sum()
}

/// The circuit as a linear map on system operators.
pub fn apply_and_trace_operator(u: &Mat8, x: &Mat2) -> Mat2 {
    trace_ancillas(&(u * register_with_ancillas(x) * u.adjoint()))
}

pub fn apply_and_trace(u: &Mat8, rho: &QubitState) -> QubitState {
    QubitState(ops::hermitian_part(&apply_and_trace_operator(u, rho.matrix())))
}

/// Pauli-basis map matrix `F_rs = Tr(σ_r Φ(σ_s))` of the circuit channel.
pub fn circuit_map(u: &Mat8) -> MapMatrix {
    let s = pauli_basis();
    MapMatrix::from_fn(|r, c| (s[r] * apply_and_trace_operator(u, &s[c])).trace().re)
}

pub fn circuit_choi(u: &Mat8) -> ChoiMatrix {
    choi_from_map(&circuit_map(u))
}

/// `H|0⟩`.
pub fn plus_state() -> QubitState {
    let s = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    QubitState::pure(s, s).expect("normalised")
}

/// `R_x(θ)|0⟩`.
pub fn rx_state(theta: f64) -> QubitState {
    let col = rx(theta).column(0).into_owned();
    QubitState::pure(col[0], col[1]).expect("normalised")
}

/// Measurement bases, in the order counts are stored.
pub const BASES: [&str; 3] = ["X", "Y", "Z"];

/// `[n_0, n_1]` outcome counts for the X, Y and Z bases.
pub type BasisCounts = [[u64; 2]; 3];

/// Outcome probabilities `[p_0, p_1]` per basis.
pub type BasisProbabilities = [[f64; 2]; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    pub counts: BasisCounts,
    pub shots: u64,
    pub rho: Mat2,
    /// State the counts were sampled from.
    pub target: Mat2,
    pub fidelity: f64,
    /// Set when the raw estimate had a negative eigenvalue.
    pub clipped: bool,
    pub seed: u64,
}

impl TomographyResult {
    pub fn trace_distance(&self) -> f64 {
        ops::trace_distance(&self.rho, &self.target)
    }

    /// Re-reconstructs the state after inverting the readout confusion.
    pub fn mitigated(&self, calibration: &Matrix2<f64>) -> Result<Self> {
        let probs = mitigate_readout(&self.counts, calibration)?;
        let (rho, clipped) = reconstruct(&probs);
        Ok(Self { rho, clipped, fidelity: ops::fidelity(&rho, &self.target), ..self.clone() })
    }
}

/// Exact outcome probabilities of `ρ` in the X, Y, Z bases.
pub fn pauli_probabilities(rho: &Mat2) -> BasisProbabilities {
    let paulis = [ops::pauli_x(), ops::pauli_y(), ops::pauli_z()];
    paulis.map(|p| {
        let e = (p * rho).trace().re.clamp(-1.0, 1.0);
        [0.5 * (1.0 + e), 0.5 * (1.0 - e)]
    })
}

/// `ρ = (I + Σ_i ⟨σ_i⟩ σ_i)/2`, with negative eigenvalues clipped and the
/// result renormalised.
pub fn reconstruct(probs: &BasisProbabilities) -> (Mat2, bool) {
    let paulis = [ops::pauli_x(), ops::pauli_y(), ops::pauli_z()];
    let mut rho = Mat2::identity();
    for (p, pr) in paulis.iter().zip(probs) {
        rho += p * Complex64::from(pr[0] - pr[1]);
    }
    rho = ops::hermitian_part(&rho.scale(0.5));
    let eig = nalgebra::SymmetricEigen::new(rho);
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return (rho, false);
    }
    let mut out = Mat2::zeros();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        out += (v * v.adjoint()).scale(l.max(0.0));
    }
    let tr = out.trace().re;
    (out / Complex64::from(tr), true)
}

pub fn counts_to_probabilities(counts: &BasisCounts) -> BasisProbabilities {
    counts.map(|[a, b]| {
        let total = (a + b).max(1) as f64;
        [a as f64 / total, b as f64 / total]
    })
}

fn validate_calibration(m: &Matrix2<f64>) -> Result<()> {
    for j in 0..2 {
        let col = m.column(j);
        if col.iter().any(|&v| !(0.0..=1.0).contains(&v)) || (col.sum() - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("calibration column {j} is not stochastic: {col:?}")));
        }
    }
    Ok(())
}

/// Samples shot counts from the exact post-circuit system state, with the
/// outcome distribution of each basis passed through `confusion`.
pub fn simulate_tomography_with_readout(
    u: &Mat8,
    rho_sys: &QubitState,
    shots: u64,
    seed: u64,
    confusion: &Matrix2<f64>,
) -> Result<TomographyResult> {
    if shots == 0 {
        return Err(Error::Parameter("shots must be >= 1".into()));
    }
    validate_calibration(confusion)?;
    let target = apply_and_trace(u, rho_sys).0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [[0u64; 2]; 3];
    for (c, p) in counts.iter_mut().zip(pauli_probabilities(&target)) {
        let observed = confusion * Vector2::new(p[0], p[1]);
        let p0 = observed[0].clamp(0.0, 1.0);
        let zeros = Binomial::new(shots, p0).map_err(|e| Error::Parameter(e.to_string()))?.sample(&mut rng);
        *c = [zeros, shots - zeros];
    }
    let (rho, clipped) = reconstruct(&counts_to_probabilities(&counts));
    Ok(TomographyResult { counts, shots, rho, target, fidelity: ops::fidelity(&rho, &target), clipped, seed })
}

pub fn simulate_tomography(u: &Mat8, rho_sys: &QubitState, shots: u64, seed: u64) -> Result<TomographyResult> {
    simulate_tomography_with_readout(u, rho_sys, shots, seed, &Matrix2::identity())
}

/// Applies the inverse of the column-stochastic confusion matrix to each
/// basis' outcome frequencies and projects the result onto the simplex.
pub fn mitigate_readout(counts: &BasisCounts, calibration: &Matrix2<f64>) -> Result<BasisProbabilities> {
    mitigate_probabilities(&counts_to_probabilities(counts), calibration)
}

pub fn mitigate_probabilities(probs: &BasisProbabilities, calibration: &Matrix2<f64>) -> Result<BasisProbabilities> {
    validate_calibration(calibration)?;
    if calibration.determinant().abs() < 1e-12 {
        return Err(Error::Singular(format!("readout calibration {calibration:?}")));
    }
    let inv = calibration.try_inverse().ok_or_else(|| Error::Singular("readout calibration".into()))?;
    Ok(probs.map(|p| {
        let q = inv * Vector2::new(p[0], p[1]);
        let p0 = (0.5 * (q[0] - q[1] + 1.0)).clamp(0.0, 1.0);
        [p0, 1.0 - p0]
    }))
}

/// Applies a Pauli-basis map to a state.
pub fn apply_channel(f: &MapMatrix, rho: &QubitState) -> QubitState {
    QubitState(apply_map(f, rho.matrix()))
}
