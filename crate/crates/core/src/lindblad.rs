//! Lindblad form, stationary state, σ-weighted symmetrisation, spectral gap,
//! semigroup evolution and mixing-time estimates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{JumpEnsemble, SamplerModel};
use crate::error::{Error, Result};
use crate::linalg::{self, c, GeneralEigen, Mat, Vector, C64, ONE};
use crate::qpe;
use crate::superop::{self, Superoperator};

/// Eigenvalues of `L` with modulus below this count as stationary.
pub const NULL_TOL: f64 = 1e-8;
/// Largest condition number accepted for `σ = ρ_L⁻¹`.
pub const MAX_SIGMA_CONDITION: f64 = 1e12;
const HERMITIAN_TOL: f64 = 1e-8;
const LITERAL_LIMIT: usize = 1 << 18;

/// Jump operators `V` of the generator
/// `L(ρ) = Σ 2 V ρ V† − {V†V, ρ}` (so `√2 V` are the operators of the
/// usual `V ρ V† − ½{V†V, ρ}` form). Stored in the energy eigenbasis.
#[derive(Debug, Clone)]
pub struct LindbladSet {
    pub operators: Vec<Mat>,
    /// Provenance of each operator: `(jump index, flipped)`.
    pub origin: Vec<(usize, bool)>,
    /// `√(μ f / 2)` factor of each operator; dividing it out leaves
    /// `B_{E′} C̃ B_E` (literal set) or the Gram-factor sandwich.
    pub scale: Vec<f64>,
    basis: Mat,
}

impl LindbladSet {
    /// One operator per jump, variant and pair of register tuples `(E, E′)`:
    /// `√(μ f(med E, med E′)/2) · B_{E′} C̃ B_E` with `B_E = diag_j β_{jE}`.
    pub fn literal(model: &SamplerModel, ensemble: &JumpEnsemble) -> Result<Self> {
        let d = model.dim();
        let size = model.grid_size();
        let g = model.g;
        let reg = (size as f64).powi(g as i32);
        let total = reg * reg * 2.0 * ensemble.len() as f64;
        if total > LITERAL_LIMIT as f64 {
            return Err(Error::Size(format!(
                "literal Lindblad set would hold {total} operators; use the factored set"
            )));
        }
        let mut tuples: Vec<Vec<usize>> = Vec::new();
        qpe::for_each_tuple(size, g, |t| tuples.push(t.to_vec()));
        let mut scratch = Vec::new();
        let medians: Vec<usize> = tuples.iter().map(|t| qpe::median_index(t, &mut scratch)).collect();
        let mut operators = Vec::new();
        let mut origin = Vec::new();
        let mut scale = Vec::new();
        for (ci, op) in ensemble.operators.iter().enumerate() {
            let jump = model.in_eigenbasis(op);
            for v in &model.variants {
                let amps: Vec<Vec<C64>> = tuples
                    .iter()
                    .map(|t| (0..d).map(|j| t.iter().fold(ONE, |acc, &y| acc * v.beta[(j, y)])).collect())
                    .collect();
                for (e, be) in amps.iter().enumerate() {
                    for (e2, be2) in amps.iter().enumerate() {
                        let f = model.accept[(medians[e], medians[e2])];
                        let s = (0.5 * ensemble.weights[ci] * f).sqrt();
                        let m = Mat::from_fn(d, d, |k, j| be2[k] * jump[(k, j)] * be[j] * s);
                        operators.push(m);
                        origin.push((ci, v.flipped));
                        scale.push(s);
                    }
                }
            }
        }
        Ok(LindbladSet { operators, origin, scale, basis: model.es.eigenvectors.clone() })
    }

    /// Compressed equivalent set using `G⁽ᵃ⁾ = Σ_t g_t g_t†`:
    /// `√(μ f(a,b)/2) · diag(h_s⁽ᵇ⁾) C̃ diag(g_t⁽ᵃ⁾)`.
    pub fn factored(model: &SamplerModel, ensemble: &JumpEnsemble) -> Result<Self> {
        let d = model.dim();
        let size = model.grid_size();
        let mut operators = Vec::new();
        let mut origin = Vec::new();
        let mut scale = Vec::new();
        for v in &model.variants {
            let factors: Vec<Vec<Vec<C64>>> = v.gram.by_median.iter().map(gram_factors).collect();
            for (ci, op) in ensemble.operators.iter().enumerate() {
                let jump = model.in_eigenbasis(op);
                for a in 0..size {
                    for b in 0..size {
                        let s = (0.5 * ensemble.weights[ci] * model.accept[(a, b)]).sqrt();
                        for gt in &factors[a] {
                            for hs in &factors[b] {
                                let m = Mat::from_fn(d, d, |k, j| hs[k] * jump[(k, j)] * gt[j] * s);
                                operators.push(m);
                                origin.push((ci, v.flipped));
                                scale.push(s);
                            }
                        }
                    }
                }
            }
        }
        Ok(LindbladSet { operators, origin, scale, basis: model.es.eigenvectors.clone() })
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Operators in the computational basis, normalised for the
    /// `V ρ V† − ½{V†V, ρ}` convention.
    pub fn standard_form(&self) -> Vec<Mat> {
        let b = &self.basis;
        self.operators
            .iter()
            .map(|v| b * v * b.adjoint() * c(std::f64::consts::SQRT_2))
            .collect()
    }

    /// The generator in the computational basis.
    pub fn generator(&self) -> Superoperator {
        let d = self.basis.nrows();
        let (jump_part, k) = self
            .operators
            .par_iter()
            .fold(
                || (Mat::zeros(d * d, d * d), Mat::zeros(d, d)),
                |(mut s, mut k), v| {
                    s += v.conjugate().kronecker(v) * c(2.0);
                    k += v.adjoint() * v;
                    (s, k)
                },
            )
            .reduce(
                || (Mat::zeros(d * d, d * d), Mat::zeros(d, d)),
                |(s1, k1), (s2, k2)| (s1 + s2, k1 + k2),
            );
        let id = linalg::identity(d);
        let m = jump_part - id.kronecker(&k) - k.transpose().kronecker(&id);
        Superoperator::from_matrix(d, m).from_basis(&self.basis)
    }
}

/// Columns `g_t` with `G = Σ_t g_t g_t†` for a PSD Gram matrix.
fn gram_factors(g: &Mat) -> Vec<Vec<C64>> {
    let (vals, vecs) = linalg::hermitian_eigen(g);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    vals.iter()
        .enumerate()
        .filter(|(_, &l)| l > 1e-15 * top.max(1e-300))
        .map(|(i, &l)| vecs.column(i).iter().map(|z| z * l.sqrt()).collect())
        .collect()
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub rho: Mat,
    pub residual: f64,
    pub null_dimension: usize,
    /// Smallest modulus among the non-stationary eigenvalues.
    pub separation: f64,
}

/// Unique stationary state of a generator.
pub fn fixed_point(l: &Superoperator) -> Result<FixedPoint> {
    let d = l.dim();
    let eig = linalg::general_eigen(l.matrix(), f64::INFINITY);
    let mut moduli: Vec<f64> = eig.values.iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let null_dimension = moduli.iter().filter(|&&m| m < NULL_TOL).count();
    if null_dimension != 1 {
        return Err(Error::Uniqueness { dim: null_dimension, tol: NULL_TOL });
    }
    let separation = moduli[1];
    let svd = l.matrix().clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let null = Vector::from_iterator(d * d, v_t.row(imin).iter().map(|z| z.conj()));
    let mut rho = superop::unvec(&null, d);
    let tr = linalg::trace(&rho);
    rho = linalg::hermitize(&rho.map(|z| z / tr));
    let residual = linalg::max_abs(&l.apply(&rho));
    Ok(FixedPoint { rho, residual, null_dimension, separation })
}

/// `σ^p` for a positive-definite `σ`, with the rank guard applied.
fn sigma_power(sigma: &Mat, p: f64) -> Result<Mat> {
    let vals = linalg::hermitian_eigenvalues(sigma);
    let (lo, hi) = (vals[0], *vals.last().unwrap());
    if !(lo > 0.0) || hi / lo > MAX_SIGMA_CONDITION {
        return Err(Error::Rank(format!(
            "sigma is singular or too ill-conditioned (eigenvalues in [{lo:e}, {hi:e}])"
        )));
    }
    Ok(linalg::hermitian_fn(sigma, |x| x.powf(p)))
}

/// Adjoint of `L` with respect to `⟨M, N⟩_σ = tr(σ^{1/2} M† σ^{1/2} N)`:
/// `L*(N) = σ^{-1/2} L†(σ^{1/2} N σ^{1/2}) σ^{-1/2}`.
pub fn sigma_dual(l: &Superoperator, sigma: &Mat) -> Result<Superoperator> {
    let half = sigma_power(sigma, 0.5)?;
    let inv_half = sigma_power(sigma, -0.5)?;
    let outer = Superoperator::sandwich(&inv_half, &inv_half);
    let inner = Superoperator::sandwich(&half, &half);
    Ok(outer.compose(&l.hs_adjoint()).compose(&inner))
}

/// `⟨M, N⟩_σ`.
pub fn sigma_inner(m: &Mat, n: &Mat, sigma_half: &Mat) -> C64 {
    linalg::trace(&(sigma_half * m.adjoint() * sigma_half * n))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    #[serde(serialize_with = "ser_mat")]
    pub fixed_point: Mat,
    pub gap: f64,
    #[serde(serialize_with = "ser_complex")]
    pub eigenvalues: Vec<C64>,
    /// Spectrum of the symmetrised generator, descending.
    pub symmetrized_eigenvalues: Vec<f64>,
    #[serde(serialize_with = "ser_mat")]
    pub sigma: Mat,
    pub residual: f64,
    pub separation: f64,
    pub min_fixed_point_eigenvalue: f64,
    pub hermiticity_defect: f64,
}

fn ser_mat<S: serde::Serializer>(m: &Mat, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&superop::MatrixDump::of(m), s)
}

fn ser_complex<S: serde::Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
    serde::Serialize::serialize(&pairs, s)
}

impl SpectralReport {
    pub fn dim(&self) -> usize {
        self.fixed_point.nrows()
    }

    /// `‖σ‖` (largest eigenvalue), the worst case of `tr(σ^{1/2}ρσ^{1/2}ρ)`.
    pub fn sigma_norm(&self) -> f64 {
        1.0 / self.min_fixed_point_eigenvalue
    }
}

/// Symmetrised generator `(L + L*)/2` conjugated by `N ↦ σ^{1/4} N σ^{1/4}`.
pub fn symmetrized_generator(l: &Superoperator, sigma: &Mat) -> Result<Superoperator> {
    let dual = sigma_dual(l, sigma)?;
    let ls = (l + &dual).scale(0.5);
    let q = sigma_power(sigma, 0.25)?;
    let qi = sigma_power(sigma, -0.25)?;
    let a = Superoperator::sandwich(&q, &q);
    let ai = Superoperator::sandwich(&qi, &qi);
    Ok(a.compose(&ls).compose(&ai))
}

pub fn spectral_gap(l: &Superoperator) -> Result<SpectralReport> {
    let fp = fixed_point(l)?;
    let rho_vals = linalg::hermitian_eigenvalues(&fp.rho);
    let lo = rho_vals[0];
    if !(lo > 0.0) {
        return Err(Error::Rank(format!("stationary state is not full rank (min eigenvalue {lo:e})")));
    }
    let sigma = linalg::hermitize(&linalg::hermitian_fn(&fp.rho, |x| 1.0 / x));
    let hs = symmetrized_generator(l, &sigma)?;
    let scale = linalg::max_abs(hs.matrix()).max(1.0);
    let defect = linalg::hermiticity_defect(hs.matrix()) / scale;
    if defect > HERMITIAN_TOL {
        return Err(Error::Conditioning(format!(
            "symmetrised generator is not Hermitian after conjugation (defect {defect:e})"
        )));
    }
    let mut sym = linalg::hermitian_eigenvalues(hs.matrix());
    sym.reverse();
    let gap = -sym[1];
    let eigenvalues = linalg::general_eigen(l.matrix(), f64::INFINITY).values;
    Ok(SpectralReport {
        fixed_point: fp.rho,
        gap,
        eigenvalues,
        symmetrized_eigenvalues: sym,
        sigma,
        residual: fp.residual,
        separation: fp.separation,
        min_fixed_point_eigenvalue: lo,
        hermiticity_defect: defect,
    })
}

/// `e^{tL}` evaluated repeatedly from one eigendecomposition.
pub struct Propagator {
    generator: Superoperator,
    eigen: GeneralEigen,
}

impl Propagator {
    pub const MAX_CONDITION: f64 = 1e8;

    pub fn new(l: &Superoperator) -> Self {
        let eigen = linalg::general_eigen(l.matrix(), Self::MAX_CONDITION);
        Propagator { generator: l.clone(), eigen }
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.eigen.vectors.is_some()
    }

    pub fn at(&self, t: f64) -> Superoperator {
        match (&self.eigen.vectors, &self.eigen.inverse) {
            (Some(v), Some(vi)) => {
                let diag = Vector::from_iterator(v.nrows(), self.eigen.values.iter().map(|&z| (z * t).exp()));
                let m = v * Mat::from_diagonal(&diag) * vi;
                Superoperator::from_matrix(self.generator.dim(), m)
            }
            _ => self.at_pade(t),
        }
    }

    /// Scaling and squaring, independent of the eigendecomposition.
    pub fn at_pade(&self, t: f64) -> Superoperator {
        Superoperator::from_matrix(self.generator.dim(), linalg::expm_pade(self.generator.matrix(), t))
    }
}

pub fn evolve(l: &Superoperator, t: f64, rho: &Mat) -> Result<Mat> {
    evolve_with(&Propagator::new(l), t, rho)
}

pub fn evolve_with(p: &Propagator, t: f64, rho: &Mat) -> Result<Mat> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("evolution time must be >= 0, got {t}")));
    }
    let out = p.at(t).apply(rho);
    let drift = (linalg::trace(&out) - linalg::trace(rho)).norm();
    if drift > 1e-8 {
        return Err(Error::Numerical(format!("trace drifted by {drift:e} during evolution")));
    }
    Ok(linalg::hermitize(&out))
}

/// `2^{n/2} √(tr(σ^{1/2} ρ σ^{1/2} ρ)) e^{−Υ t}`.
pub fn mixing_bound(report: &SpectralReport, rho: &Mat, t: f64) -> f64 {
    let n = report.dim().trailing_zeros() as f64;
    let half = linalg::hermitian_fn(&report.sigma, |x| x.sqrt());
    let chi = linalg::trace(&(&half * rho * &half * rho)).re.max(0.0);
    2f64.powf(n / 2.0) * chi.sqrt() * (-report.gap * t).exp()
}

/// State-independent upper bound on the mixing time from the gap.
pub fn analytic_mixing_time(report: &SpectralReport, epsilon: f64) -> f64 {
    let n = report.dim().trailing_zeros() as f64;
    ((1.0 / epsilon).ln() + n * 2f64.ln() / 2.0 + 0.5 * report.sigma_norm().ln()) / report.gap
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingTimeEstimate {
    pub epsilon: f64,
    pub estimate: f64,
    pub analytic_bound: f64,
    pub family_size: usize,
}

/// Pure states built from matrix units (`|i⟩`, `(|i⟩+|j⟩)/√2`,
/// `(|i⟩+i|j⟩)/√2`) plus `random` Haar states.
pub fn probe_states(d: usize, random: usize, seed: u64) -> Vec<Mat> {
    let mut out = Vec::new();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        let mut v = Vector::zeros(d);
        v[i] = ONE;
        out.push(linalg::projector(&v));
        for j in (i + 1)..d {
            for phase in [ONE, linalg::I] {
                let mut v = Vector::zeros(d);
                v[i] = c(s);
                v[j] = phase * s;
                out.push(linalg::projector(&v));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        out.push(linalg::projector(&linalg::random_pure_state(d, &mut rng)));
    }
    out
}

/// Worst trace distance to the stationary state over a probe family at time `t`.
pub fn worst_distance(p: &Propagator, fixed: &Mat, probes: &[Mat], t: f64) -> f64 {
    let e = p.at(t);
    probes
        .iter()
        .map(|rho| linalg::trace_norm_hermitian(&linalg::hermitize(&(e.apply(rho) - fixed))))
        .fold(0.0, f64::max)
}

pub fn mixing_time_estimate(l: &Superoperator, epsilon: f64, seed: u64) -> Result<MixingTimeEstimate> {
    let report = spectral_gap(l)?;
    mixing_time_with(l, &report, epsilon, seed)
}

pub fn mixing_time_with(
    l: &Superoperator,
    report: &SpectralReport,
    epsilon: f64,
    seed: u64,
) -> Result<MixingTimeEstimate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let d = l.dim();
    let p = Propagator::new(l);
    let probes = probe_states(d, 50, seed);
    let fixed = &report.fixed_point;
    let analytic_bound = analytic_mixing_time(report, epsilon);
    let worst = |t: f64| worst_distance(&p, fixed, &probes, t);
    if worst(0.0) <= epsilon {
        return Ok(MixingTimeEstimate { epsilon, estimate: 0.0, analytic_bound, family_size: probes.len() });
    }
    let mut hi = analytic_bound.max(1e-12);
    let mut grow = 0;
    while worst(hi) > epsilon {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::Numerical("mixing time search did not converge".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        if hi - lo <= 1e-9 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if worst(mid) > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MixingTimeEstimate { epsilon, estimate: hi, analytic_bound, family_size: probes.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{pauli_jump_ensemble, FastChannel, JumpSet};
    use crate::hamiltonians::{build_tfim, eigensystem, gibbs, HermitianOperator, Pauli};
    use crate::linalg::{random_density, random_hermitian, ZERO};
    use crate::qpe::energy_grid;

    fn tfim_model(h: f64, r: usize, g: usize, beta: f64) -> SamplerModel {
        let es = eigensystem(&build_tfim(2, 1.0, h).unwrap()).unwrap();
        let grid = energy_grid(r, es.kappa).unwrap();
        SamplerModel::new(&es, &grid, g, beta).unwrap()
    }

    fn tfim_generator(beta: f64) -> Superoperator {
        let m = tfim_model(0.5, 3, 3, beta);
        FastChannel::build(&m, &pauli_jump_ensemble(2).unwrap()).unwrap().lindbladian()
    }

    #[test]
    fn generator_routes_agree() {
        let m = tfim_model(0.5, 2, 3, 1.0);
        let ens = pauli_jump_ensemble(2).unwrap();
        let fast = FastChannel::build(&m, &ens).unwrap().lindbladian();
        let literal = LindbladSet::literal(&m, &ens).unwrap().generator();
        let factored = LindbladSet::factored(&m, &ens).unwrap();
        assert!(literal.max_abs_diff(&fast) < 1e-9);
        assert!(factored.generator().max_abs_diff(&fast) < 1e-9);
        // standard form: Σ KρK† − ½{K†K, ρ}
        let ks = factored.standard_form();
        let rho = random_density(4, &mut ChaCha8Rng::seed_from_u64(1));
        let mut out = Mat::zeros(4, 4);
        for k in &ks {
            let kk = k.adjoint() * k;
            out += k * &rho * k.adjoint() - (&kk * &rho + &rho * &kk) * c(0.5);
        }
        assert!(linalg::max_abs_diff(&out, &fast.apply(&rho)) < 1e-10);
    }

    #[test]
    fn infinite_temperature_fixes_maximally_mixed() {
        let fp = fixed_point(&tfim_generator(0.0)).unwrap();
        assert!(linalg::max_abs_diff(&fp.rho, &(linalg::identity(4) * c(0.25))) < 1e-10);
    }

    #[test]
    fn on_grid_qubit_matches_hand_rates() {
        let h = HermitianOperator::new(Mat::from_diagonal(&Vector::from_vec(vec![ZERO, ONE]))).unwrap();
        let es = eigensystem(&h).unwrap();
        let grid = energy_grid(1, es.kappa).unwrap();
        let beta = 0.7;
        let m = SamplerModel::new(&es, &grid, 3, beta).unwrap();
        let ens = JumpEnsemble::new(
            vec![Pauli::X.matrix(), Pauli::Y.matrix()],
            vec![0.5, 0.5],
            vec!["X".into(), "Y".into()],
        )
        .unwrap();
        let l = FastChannel::build(&m, &ens).unwrap().lindbladian();
        let fp = fixed_point(&l).unwrap();
        assert!(linalg::max_abs_diff(&fp.rho, &gibbs(&es, beta).unwrap().matrix) < 1e-12);
        // population relaxation: 0→1 at e^{-β}, 1→0 at 1
        let rate = 1.0 + (-beta).exp();
        let eig = linalg::general_eigen(l.matrix(), f64::INFINITY).values;
        assert!(eig.iter().any(|z| (z - c(-rate)).norm() < 1e-10), "{eig:?}");
    }

    #[test]
    fn dual_is_adjoint_in_sigma_inner_product() {
        let l = tfim_generator(1.0);
        let fp = fixed_point(&l).unwrap();
        let sigma = linalg::hermitian_fn(&fp.rho, |x| 1.0 / x);
        let dual = sigma_dual(&l, &sigma).unwrap();
        let half = linalg::hermitian_fn(&sigma, f64::sqrt);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let a = random_hermitian(4, &mut rng) + random_hermitian(4, &mut rng) * linalg::I;
            let b = random_hermitian(4, &mut rng);
            let lhs = sigma_inner(&a, &l.apply(&b), &half);
            let rhs = sigma_inner(&dual.apply(&a), &b, &half);
            assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0));
        }
        let back = sigma_dual(&dual, &sigma).unwrap();
        assert!(back.max_abs_diff(&l) < 1e-9);
    }

    #[test]
    fn singular_sigma_is_rejected() {
        let l = tfim_generator(1.0);
        let sigma = Mat::from_diagonal(&Vector::from_vec(vec![ONE, ONE, ONE, ZERO]));
        assert!(matches!(sigma_dual(&l, &sigma), Err(Error::Rank(_))));
    }

    #[test]
    fn gap_is_invariant_under_jump_order() {
        let m = tfim_model(0.5, 3, 3, 1.0);
        let ens = pauli_jump_ensemble(2).unwrap();
        let order: Vec<usize> = (0..ens.len()).rev().collect();
        let a = spectral_gap(&FastChannel::build(&m, &ens).unwrap().lindbladian()).unwrap();
        let b = spectral_gap(&FastChannel::build(&m, &ens.permuted(&order)).unwrap().lindbladian()).unwrap();
        assert!(a.gap > 0.0);
        assert!((a.gap - b.gap).abs() < 1e-10);
    }

    #[test]
    fn degenerate_generator_is_not_unique() {
        let m = tfim_model(0.0, 3, 3, 1.0);
        let ens = JumpEnsemble::named(JumpSet::ZOnly, 2).unwrap();
        let l = FastChannel::build(&m, &ens).unwrap().lindbladian();
        assert!(matches!(fixed_point(&l), Err(Error::Uniqueness { .. })));
    }

    #[test]
    fn propagator_is_a_semigroup_of_channels() {
        let l = tfim_generator(1.0);
        let p = Propagator::new(&l);
        assert!(p.is_diagonalizable());
        assert!(p.at(0.0).max_abs_diff(&Superoperator::identity(4)) < 1e-10);
        let (s, t) = (0.4, 1.3);
        assert!(p.at(s).compose(&p.at(t)).max_abs_diff(&p.at(s + t)) < 1e-10);
        for time in [0.1, 1.0, 5.0] {
            let e = p.at(time);
            assert!(e.max_abs_diff(&p.at_pade(time)) < 1e-10);
            assert!(e.choi_min_eigenvalue() > -1e-10);
            assert!(e.trace_preservation_defect() < 1e-10);
        }
        assert!(matches!(evolve(&l, -1.0, &linalg::identity(4)), Err(Error::Domain(_))));
    }

    #[test]
    fn estimated_mixing_time_respects_bounds() {
        let l = tfim_generator(1.0);
        let report = spectral_gap(&l).unwrap();
        let eps = 0.05;
        let est = mixing_time_with(&l, &report, eps, 3).unwrap();
        assert_eq!(est.family_size, 16 + 50);
        assert!(est.estimate <= est.analytic_bound);
        let p = Propagator::new(&l);
        let probes = probe_states(4, 50, 3);
        assert!(worst_distance(&p, &report.fixed_point, &probes, est.estimate) <= eps + 1e-9);
        assert!(worst_distance(&p, &report.fixed_point, &probes, 0.99 * est.estimate) > eps);
        for rho in &probes {
            let t = est.estimate;
            let dist = linalg::trace_norm_hermitian(&(evolve_with(&p, t, rho).unwrap() - &report.fixed_point));
            assert!(dist <= mixing_bound(&report, rho, t) + 1e-9);
        }
        assert!(matches!(mixing_time_with(&l, &report, 1.5, 3), Err(Error::Domain(_))));
    }
}
