//! The per-iteration channel of the weak-measurement sampler.
//!
//! Two independent builds exist: [`reference`] pushes explicit joint
//! register vectors through the circuit, [`fast`] works with median-grouped
//! Gram matrices in the energy eigenbasis. Both return maps in the
//! computational basis.

pub mod fast;
pub mod jumps;
pub mod reference;
pub(crate) mod registers;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonians::EigenSystem;
use crate::linalg::Mat;
use crate::qpe::{self, AmplitudeTable, EnergyGrid, GramFamily};
use crate::superop::Superoperator;

pub use fast::FastChannel;
pub use jumps::{pauli_jump_ensemble, JumpEnsemble, JumpSet};
pub use reference::{build_reference_channel, ReferenceChannel};

/// Metropolis acceptance `min(1, exp(β(Ē − Ē′)))`.
pub fn acceptance_prob(e_bar: f64, e_bar_prime: f64, beta: f64) -> f64 {
    let x = beta * (e_bar - e_bar_prime);
    if x >= 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Both entries of the `W` block for one `(E, E′)` pair:
/// `W = [[s, τ√f], [τ√f, −s]]` with `s = √(1 − τ² f)`.
pub fn w_block(tau: f64, f: f64) -> [[f64; 2]; 2] {
    let s = (1.0 - tau * tau * f).sqrt();
    let t = tau * f.sqrt();
    [[s, t], [t, -s]]
}

/// `(1 − √(1 − τ² f)) / τ²` written without cancellation for small `τ² f`.
pub fn w00_coefficient(tau: f64, f: f64) -> f64 {
    f / ((1.0 - tau * tau * f).sqrt() + 1.0)
}

/// One QPE variant: amplitudes, per-eigenstate unitaries and Gram family.
#[derive(Debug, Clone)]
pub struct Variant {
    pub flipped: bool,
    /// `β` table for this variant, row `j`, column grid index.
    pub beta: Mat,
    pub unitaries: Vec<Mat>,
    pub gram: GramFamily,
}

/// Everything about the sampler that does not depend on the jump set or `τ`.
#[derive(Debug, Clone)]
pub struct SamplerModel {
    pub es: EigenSystem,
    pub grid: EnergyGrid,
    pub g: usize,
    pub beta: f64,
    pub table: AmplitudeTable,
    /// `accept[(a, b)] = f(grid a, grid b)`.
    pub accept: DMatrix<f64>,
    pub variants: [Variant; 2],
}

impl SamplerModel {
    pub fn new(es: &EigenSystem, grid: &EnergyGrid, g: usize, beta: f64) -> Result<Self> {
        qpe::check_odd(g)?;
        if !(beta >= 0.0) {
            return Err(Error::Domain(format!("inverse temperature must be >= 0, got {beta}")));
        }
        let table = qpe::single_round_amplitudes(es, grid)?;
        let size = grid.size();
        let accept = DMatrix::from_fn(size, size, |a, b| {
            acceptance_prob(grid.energy(a), grid.energy(b), beta)
        });
        let variant = |flipped: bool| -> Result<Variant> {
            Ok(Variant {
                flipped,
                beta: table.beta_table(flipped),
                unitaries: qpe::qpe_unitaries(es, grid, flipped),
                gram: qpe::gram_family(&table, g, flipped)?,
            })
        };
        let variants = [variant(false)?, variant(true)?];
        Ok(SamplerModel { es: es.clone(), grid: grid.clone(), g, beta, table, accept, variants })
    }

    pub fn dim(&self) -> usize {
        self.es.dim()
    }

    pub fn grid_size(&self) -> usize {
        self.grid.size()
    }

    /// Jump operator expressed in the energy eigenbasis.
    pub fn in_eigenbasis(&self, c: &Mat) -> Mat {
        self.es.to_eigenbasis(c)
    }

    pub fn to_computational(&self, s: &Superoperator) -> Superoperator {
        s.from_basis(&self.es.eigenvectors)
    }

    pub fn to_eigen(&self, s: &Superoperator) -> Superoperator {
        s.to_basis(&self.es.eigenvectors)
    }
}

/// `E[τ] = I + τ² L + τ⁴ J`, all in the computational basis.
#[derive(Debug, Clone)]
pub struct ChannelDecomposition {
    pub e_tau: Superoperator,
    pub l: Superoperator,
    pub j_tau: Superoperator,
    pub tau: f64,
}

/// `(E − I − τ² L) / τ⁴`.
pub fn extract_j(e_tau: &Superoperator, l: &Superoperator, tau: f64) -> Result<Superoperator> {
    if tau == 0.0 {
        return Err(Error::Division("cannot extract the quartic term at tau = 0".into()));
    }
    let d = e_tau.dim();
    let rest = &(e_tau - &Superoperator::identity(d)) - &l.scale(tau * tau);
    Ok(rest.scale(1.0 / tau.powi(4)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_examples() {
        assert_eq!(acceptance_prob(1.5, 1.5, 3.0), 1.0);
        assert!((acceptance_prob(0.0, 2f64.ln(), 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(acceptance_prob(2.0, 1.0, 1.0), 1.0);
        assert_eq!(acceptance_prob(0.0, 5.0, 0.0), 1.0);
    }

    #[test]
    fn w_is_a_reflection() {
        for &(tau, f) in &[(0.1, 1.0), (0.5, 0.3), (1.0, 1.0), (0.05, 1e-9)] {
            let w = w_block(tau, f);
            assert_eq!(w[0][1], w[1][0]);
            for i in 0..2 {
                for j in 0..2 {
                    let sq = w[i][0] * w[0][j] + w[i][1] * w[1][j];
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!((sq - id).abs() < 1e-12);
                }
            }
            let direct = (1.0 - w[0][0]) / (tau * tau);
            assert!((w00_coefficient(tau, f) - direct).abs() < 1e-6);
        }
    }

    #[test]
    fn extract_j_rejects_zero_tau() {
        let s = Superoperator::identity(2);
        assert!(matches!(extract_j(&s, &s, 0.0), Err(Error::Division(_))));
    }
}
