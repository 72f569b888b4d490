//! Trace-norm utilities used as oracles throughout the checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::linalg::{self, Mat, Vector, C64};
use crate::superop::Superoperator;

pub use crate::linalg::trace_norm;

/// The unitary attaining `max_U |tr(MU)| = ‖M‖₁`, built from the SVD
/// `M = W D V` as `U = V† W†`.
pub fn trace_norm_maximizer(m: &Mat) -> Mat {
    let svd = m.clone().svd(true, true);
    let w = svd.u.expect("requested left singular vectors");
    let v = svd.v_t.expect("requested right singular vectors");
    v.adjoint() * w.adjoint()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VariationalCheck {
    pub trace_norm: f64,
    /// Best `|tr(MU)|` over the random unitaries.
    pub best_random: f64,
    /// `|tr(MU)|` at the SVD maximiser.
    pub at_maximizer: f64,
}

pub fn variational_trace_norm(m: &Mat, samples: usize, seed: u64) -> VariationalCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = m.nrows();
    let best_random = (0..samples)
        .map(|_| linalg::trace(&(m * linalg::random_unitary(d, &mut rng))).norm())
        .fold(0.0, f64::max);
    let at_maximizer = linalg::trace(&(m * trace_norm_maximizer(m))).norm();
    VariationalCheck { trace_norm: trace_norm(m), best_random, at_maximizer }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormEstimate {
    /// A lower bound on the induced trace norm.
    pub estimate: f64,
    pub restarts: usize,
    /// Step size at which local refinement stopped.
    pub tolerance: f64,
}

const RESTARTS: usize = 512;
const REFINED: usize = 8;
const STEP_TOL: f64 = 1e-5;

fn value(s: &Superoperator, psi: &Vector) -> f64 {
    trace_norm(&s.apply(&linalg::projector(psi)))
}

fn perturb(psi: &Vector, step: f64, rng: &mut ChaCha8Rng) -> Vector {
    let noise = Vector::from_fn(psi.len(), |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let v = psi + noise * linalg::c(step);
    v.unscale(v.norm())
}

/// Induced trace norm of a Hermiticity-preserving map, maximised over
/// pure-state inputs: random starts, then local search from the best few.
pub fn induced_norm_estimate(s: &Superoperator, seed: u64) -> NormEstimate {
    let d = s.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<(f64, Vector)> = (0..RESTARTS)
        .map(|_| {
            let psi = linalg::random_pure_state(d, &mut rng);
            (value(s, &psi), psi)
        })
        .collect();
    // matrix units are cheap and often extremal
    for i in 0..d {
        let mut psi = Vector::zeros(d);
        psi[i] = linalg::ONE;
        starts.push((value(s, &psi), psi));
    }
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = starts[0].0;
    for (mut val, mut psi) in starts.into_iter().take(REFINED) {
        let mut step = 0.1;
        let mut misses = 0;
        while step > STEP_TOL {
            let cand = perturb(&psi, step, &mut rng);
            let v = value(s, &cand);
            if v > val {
                val = v;
                psi = cand;
                misses = 0;
            } else {
                misses += 1;
                if misses >= 16 {
                    step *= 0.5;
                    misses = 0;
                }
            }
        }
        best = best.max(val);
    }
    NormEstimate { estimate: best, restarts: RESTARTS + d, tolerance: STEP_TOL }
}

/// `‖M‖_σ = √tr(σ^{1/2} M† σ^{1/2} M)`.
pub fn sigma_norm(m: &Mat, sigma_half: &Mat) -> f64 {
    crate::lindblad::sigma_inner(m, m, sigma_half).re.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, random_hermitian, random_unitary};

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&linalg::identity(5)) - 5.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = linalg::random_pure_state(4, &mut rng);
        assert!((trace_norm(&linalg::projector(&psi)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximizer_attains_trace_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_hermitian(4, &mut rng) * random_unitary(4, &mut rng);
        let v = variational_trace_norm(&m, 1000, 3);
        assert!(v.best_random <= v.trace_norm + 1e-12);
        assert!((v.at_maximizer - v.trace_norm).abs() < 1e-10);
    }

    #[test]
    fn induced_norm_of_simple_maps() {
        assert!((induced_norm_estimate(&Superoperator::identity(4), 1).estimate - 1.0).abs() < 1e-12);
        let sigma = random_density(4, &mut ChaCha8Rng::seed_from_u64(5));
        let replace = Superoperator::from_map(4, |x| &sigma * linalg::trace(x));
        assert!((induced_norm_estimate(&replace, 2).estimate - 1.0).abs() < 1e-10);
        let doubled = Superoperator::identity(3).scale(2.0);
        assert!((induced_norm_estimate(&doubled, 3).estimate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn induced_norm_finds_transpose_maximum() {
        // X ↦ X − Xᵀ has induced norm 2 on pure states (|0⟩+i|1⟩)/√2
        let s = Superoperator::from_map(2, |x| x - x.transpose());
        let est = induced_norm_estimate(&s, 4).estimate;
        assert!(est > 2.0 - 1e-6 && est <= 2.0 + 1e-12, "{est}");
    }
}
