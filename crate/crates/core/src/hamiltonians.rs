//! Small test Hamiltonians, their eigensystems and Gibbs states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat, Vector, C64, ONE, ZERO};
use crate::qpe::EnergyGrid;

pub const MAX_QUBITS: usize = 6;
const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `(-NEGATIVE_TOL, 0)` are treated as round-off and clamped.
const NEGATIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat {
        match self {
            Pauli::I => linalg::identity(2),
            Pauli::X => Mat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Pauli::Y => Mat::from_row_slice(2, 2, &[ZERO, -linalg::I, linalg::I, ZERO]),
            Pauli::Z => Mat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis; qubit 0 is the leftmost factor.
pub fn pauli_string(ops: &[Pauli]) -> Mat {
    ops.iter()
        .fold(linalg::identity(1), |acc, p| acc.kronecker(&p.matrix()))
}

/// `p` acting on `qubit` of an `n`-qubit register.
pub fn single_site(p: Pauli, qubit: usize, n: usize) -> Mat {
    let mut ops = vec![Pauli::I; n];
    ops[qubit] = p;
    pauli_string(&ops)
}

/// A Hermitian operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: Mat,
}

impl HermitianOperator {
    pub fn new(matrix: Mat) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d || !linalg::is_power_of_two(d) {
            return Err(Error::Validation(format!(
                "expected a square matrix of power-of-two size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(HermitianOperator { matrix })
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Returns `H - λ_min I`.
    pub fn shifted_nonnegative(&self) -> Self {
        let lo = linalg::min_eigenvalue_hermitian(&self.matrix);
        let d = self.dim();
        let shifted = linalg::hermitize(&(&self.matrix - linalg::identity(d) * c(lo)));
        HermitianOperator { matrix: shifted }
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(Error::Size(format!("qubit count {n} outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

/// Open-chain transverse-field Ising model `Σ J Z_i Z_{i+1} + Σ h X_i`,
/// shifted so its smallest eigenvalue is zero.
pub fn build_tfim(n: usize, coupling: f64, field: f64) -> Result<HermitianOperator> {
    check_qubits(n)?;
    let d = 1 << n;
    let mut h = Mat::zeros(d, d);
    for i in 0..n.saturating_sub(1) {
        let mut ops = vec![Pauli::I; n];
        ops[i] = Pauli::Z;
        ops[i + 1] = Pauli::Z;
        h += pauli_string(&ops) * c(coupling);
    }
    for i in 0..n {
        h += single_site(Pauli::X, i, n) * c(field);
    }
    Ok(HermitianOperator::new(h)?.shifted_nonnegative())
}

/// Random sum of all Pauli strings of weight `1..=locality`, each with an
/// independent coefficient uniform in `[-1, 1]`, shifted nonnegative.
pub fn build_random_local(n: usize, locality: usize, seed: u64) -> Result<HermitianOperator> {
    check_qubits(n)?;
    if locality == 0 || locality > n {
        return Err(Error::Size(format!("locality {locality} must be in 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 1 << n;
    let mut h = Mat::zeros(d, d);
    let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    for code in 1..4usize.pow(n as u32) {
        let ops: Vec<Pauli> = (0..n).map(|q| paulis[(code >> (2 * q)) & 3]).collect();
        let weight = ops.iter().filter(|&&p| p != Pauli::I).count();
        if weight > locality {
            continue;
        }
        let coeff: f64 = rng.random_range(-1.0..=1.0);
        h += pauli_string(&ops) * c(coeff);
    }
    Ok(HermitianOperator::new(linalg::hermitize(&h))?.shifted_nonnegative())
}

/// Ordered eigenpairs of a nonnegative Hamiltonian plus the power-of-two
/// energy scale `kappa` (strictly above the largest eigenvalue).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Unitary whose columns are the eigenvectors.
    pub eigenvectors: Mat,
    pub kappa: f64,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// `Ψ† A Ψ`.
    pub fn to_eigenbasis(&self, a: &Mat) -> Mat {
        self.eigenvectors.adjoint() * a * &self.eigenvectors
    }

    /// `Ψ A Ψ†`.
    pub fn from_eigenbasis(&self, a: &Mat) -> Mat {
        &self.eigenvectors * a * self.eigenvectors.adjoint()
    }

    pub fn hamiltonian(&self) -> Mat {
        let diag = Vector::from_iterator(self.dim(), self.eigenvalues.iter().map(|&e| c(e)));
        self.from_eigenbasis(&Mat::from_diagonal(&diag))
    }

    /// Smallest power of two (at least 1) strictly greater than `max_energy`.
    pub fn kappa_for(max_energy: f64) -> f64 {
        let mut kappa = 1.0;
        while kappa <= max_energy {
            kappa *= 2.0;
        }
        kappa
    }
}

pub fn eigensystem(h: &HermitianOperator) -> Result<EigenSystem> {
    let defect = linalg::hermiticity_defect(h.matrix());
    if defect > HERMITIAN_TOL {
        return Err(Error::Validation(format!("matrix is not Hermitian (defect {defect:e})")));
    }
    let (mut values, vectors) = linalg::hermitian_eigen(h.matrix());
    if values[0] < -NEGATIVE_TOL {
        return Err(Error::Domain(format!(
            "Hamiltonian has negative eigenvalue {:e}; shift it to be nonnegative",
            values[0]
        )));
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let kappa = EigenSystem::kappa_for(*values.last().unwrap());
    Ok(EigenSystem { eigenvalues: values, eigenvectors: vectors, kappa })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub matrix: Mat,
    /// Weights in the eigenbasis order of the generating [`EigenSystem`].
    pub probabilities: Vec<f64>,
    pub partition: f64,
}

fn state_from_weights(es: &EigenSystem, weights: &[f64]) -> Mat {
    let diag = Vector::from_iterator(weights.len(), weights.iter().map(|&p| C64::new(p, 0.0)));
    linalg::hermitize(&es.from_eigenbasis(&Mat::from_diagonal(&diag)))
}

pub fn gibbs(es: &EigenSystem, beta: f64) -> Result<GibbsState> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("inverse temperature must be >= 0, got {beta}")));
    }
    let boltzmann: Vec<f64> = es.eigenvalues.iter().map(|&e| (-beta * e).exp()).collect();
    let partition: f64 = boltzmann.iter().sum();
    let probabilities: Vec<f64> = boltzmann.iter().map(|b| b / partition).collect();
    let matrix = state_from_weights(es, &probabilities);
    Ok(GibbsState { matrix, probabilities, partition })
}

/// Gibbs weights evaluated at grid-floored energies, divided by the exact
/// partition function (so the trace is generally below one).
pub fn truncated_gibbs(es: &EigenSystem, beta: f64, grid: &EnergyGrid) -> Result<GibbsState> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("inverse temperature must be >= 0, got {beta}")));
    }
    if 2.0 * beta * grid.spacing > 1.0 {
        return Err(Error::Precision(format!(
            "2·beta·w = {} exceeds 1; increase r (bits per round) to at least {}",
            2.0 * beta * grid.spacing,
            grid.min_bits_for(beta)
        )));
    }
    let partition: f64 = es.eigenvalues.iter().map(|&e| (-beta * e).exp()).sum();
    let probabilities: Vec<f64> = es
        .eigenvalues
        .iter()
        .map(|&e| (-beta * grid.floor_value(e)).exp() / partition)
        .collect();
    let matrix = state_from_weights(es, &probabilities);
    Ok(GibbsState { matrix, probabilities, partition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpe::energy_grid;

    fn diag(values: &[f64]) -> HermitianOperator {
        let v = Vector::from_iterator(values.len(), values.iter().map(|&x| c(x)));
        HermitianOperator::new(Mat::from_diagonal(&v)).unwrap()
    }

    #[test]
    fn tfim_single_qubit_is_shifted_x() {
        let es = eigensystem(&build_tfim(1, 0.0, 1.0).unwrap()).unwrap();
        assert!((es.eigenvalues[0] - 0.0).abs() < 1e-12);
        assert!((es.eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tfim_pure_coupling_spectrum() {
        let es = eigensystem(&build_tfim(2, 1.0, 0.0).unwrap()).unwrap();
        let expected = [0.0, 0.0, 2.0, 2.0];
        for (a, b) in es.eigenvalues.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tfim_three_qubits_matches_independent_eigensolve() {
        // Independent oracle: assemble the 8x8 matrix by explicit bit
        // manipulation and diagonalise it with a real symmetric solver.
        let n = 3;
        let d = 1 << n;
        let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
        for s in 0..d {
            let spin = |q: usize| if (s >> (n - 1 - q)) & 1 == 0 { 1.0 } else { -1.0 };
            m[(s, s)] += spin(0) * spin(1) + spin(1) * spin(2);
            for q in 0..n {
                m[(s ^ (1 << (n - 1 - q)), s)] += 0.5;
            }
        }
        let mut oracle: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let shift = oracle[0];
        let es = eigensystem(&build_tfim(3, 1.0, 0.5).unwrap()).unwrap();
        for (a, b) in es.eigenvalues.iter().zip(&oracle) {
            assert!((a - (b - shift)).abs() < 1e-12, "{a} vs {}", b - shift);
        }
    }

    #[test]
    fn size_errors() {
        assert!(matches!(build_tfim(0, 1.0, 1.0), Err(Error::Size(_))));
        assert!(matches!(build_tfim(7, 1.0, 1.0), Err(Error::Size(_))));
        assert!(matches!(build_random_local(2, 3, 1), Err(Error::Size(_))));
    }

    #[test]
    fn random_local_is_deterministic_and_hermitian() {
        let a = build_random_local(3, 2, 42).unwrap();
        let b = build_random_local(3, 2, 42).unwrap();
        assert_eq!(a.matrix().as_slice(), b.matrix().as_slice());
        let h = build_random_local(2, 1, 7).unwrap();
        assert!(linalg::hermiticity_defect(h.matrix()) <= 1e-15);
        let es = eigensystem(&build_random_local(3, 2, 1).unwrap()).unwrap();
        assert!(es.eigenvalues[0].abs() < 1e-12);
    }

    #[test]
    fn kappa_is_next_power_of_two_strictly_above() {
        assert_eq!(eigensystem(&diag(&[0.0, 1.0])).unwrap().kappa, 2.0);
        assert_eq!(eigensystem(&diag(&[0.0, 3.5])).unwrap().kappa, 4.0);
        assert_eq!(eigensystem(&diag(&[0.0, 4.0])).unwrap().kappa, 8.0);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut m = Mat::zeros(2, 2);
        m[(0, 1)] = ONE;
        assert!(matches!(HermitianOperator::new(m), Err(Error::Validation(_))));
    }

    #[test]
    fn random_two_qubit_reconstruction() {
        let h = build_random_local(2, 2, 5).unwrap();
        let es = eigensystem(&h).unwrap();
        assert!(linalg::max_abs_diff(&es.hamiltonian(), h.matrix()) <= 1e-10);
        assert!(linalg::unitarity_defect(&es.eigenvectors) < 1e-10);
    }

    #[test]
    fn gibbs_examples() {
        let es = eigensystem(&build_tfim(2, 1.0, 0.5).unwrap()).unwrap();
        let g0 = gibbs(&es, 0.0).unwrap();
        assert!(linalg::max_abs_diff(&g0.matrix, &(linalg::identity(4) * c(0.25))) < 1e-14);

        let es = eigensystem(&diag(&[0.0, 1.0])).unwrap();
        let g = gibbs(&es, 2f64.ln()).unwrap();
        assert!((g.probabilities[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((g.probabilities[1] - 1.0 / 3.0).abs() < 1e-14);

        assert!(matches!(gibbs(&es, -1.0), Err(Error::Domain(_))));

        let es = eigensystem(&build_tfim(3, 1.0, 0.5).unwrap()).unwrap();
        let g = gibbs(&es, 1.3).unwrap();
        assert!((linalg::trace(&g.matrix).re - 1.0).abs() < 1e-12);
        assert!(linalg::min_eigenvalue_hermitian(&g.matrix) > -1e-10);
        let h = es.hamiltonian();
        let comm = &h * &g.matrix - &g.matrix * &h;
        assert!(linalg::max_abs(&comm) <= 1e-10);
    }

    #[test]
    fn truncated_gibbs_on_grid_is_exact() {
        let es = eigensystem(&diag(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        let grid = energy_grid(2, es.kappa).unwrap();
        let exact = gibbs(&es, 0.5).unwrap();
        let trunc = truncated_gibbs(&es, 0.5, &grid).unwrap();
        assert!(linalg::max_abs_diff(&exact.matrix, &trunc.matrix) < 1e-15);
    }

    #[test]
    fn truncated_gibbs_rejects_coarse_grid() {
        let es = eigensystem(&build_tfim(2, 1.0, 0.5).unwrap()).unwrap();
        let grid = energy_grid(1, es.kappa).unwrap();
        assert!(matches!(truncated_gibbs(&es, 1.0, &grid), Err(Error::Precision(_))));
    }
}
