//! Acceptance criteria for the simulator, each a pass/fail measurement
//! with a wall-clock budget. `tests/acceptance.rs` runs them.

use std::time::Duration;

use qmetro::channel::{build_reference_channel, extract_j, FastChannel, JumpSet};
use qmetro::config::{ExperimentConfig, ModelSpec};
use qmetro::hamiltonians::gibbs;
use qmetro::lindblad::{self, LindbladSet, Propagator};
use qmetro::linalg::{self, Vector};
use qmetro::qpe;
use qmetro::superop::Superoperator;
use qmetro::trajectory::{self, KrausUnravelling};
use qmetro::verify::norms::induced_norm_estimate;
use qmetro::verify::{fixed_point_residual, uniform_error_rows};
use qmetro::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Outcome {
    pub pass: bool,
    pub summary: String,
}

fn outcome(pass: bool, summary: String) -> Result<Outcome> {
    Ok(Outcome { pass, summary })
}

fn list(xs: &[f64], digits: usize) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.digits$e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn base() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn cptp() -> Result<Outcome> {
    let s = base().setup()?;
    let fast = FastChannel::build(&s.model, &s.ensemble)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for tau in [0.05, 0.2] {
        let e = fast.channel(tau);
        let tp = e.trace_preservation_defect();
        let choi = e.choi_min_eigenvalue();
        pass &= tp <= 1e-10 && choi >= -1e-9;
        parts.push(format!("tau={tau}: tp defect {tp:.2e}, min Choi {choi:.2e}"));
    }
    outcome(pass, parts.join("; "))
}

fn decomposition() -> Result<Outcome> {
    let s = base().setup()?;
    let fast = FastChannel::build(&s.model, &s.ensemble)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for tau in [0.05, 0.2] {
        let dec = fast.decomposition(tau);
        let j = extract_j(&dec.e_tau, &dec.l, tau)?;
        let rebuilt = &(&Superoperator::identity(4) + &dec.l.scale(tau * tau)) + &j.scale(tau.powi(4));
        let err = rebuilt.max_abs_diff(&dec.e_tau);
        let jn = induced_norm_estimate(&j, 2).estimate;
        pass &= err <= 1e-10 && jn <= 4.0;
        parts.push(format!("tau={tau}: identity err {err:.2e}, ||J|| {jn:.3}"));
    }
    let ln = induced_norm_estimate(&fast.lindbladian(), 1).estimate;
    pass &= ln <= 4.0;
    parts.push(format!("||L|| {ln:.3}"));
    outcome(pass, parts.join("; "))
}

fn cross_build() -> Result<Outcome> {
    let cfg = base();
    let mut worst: f64 = 0.0;
    for g in [1, 3] {
        let s = cfg.setup_with(2, g, cfg.beta)?;
        let fast = FastChannel::build(&s.model, &s.ensemble)?;
        for tau in [0.05, 0.2] {
            let reference = build_reference_channel(&s.model, &s.ensemble, tau)?;
            worst = worst.max(fast.channel(tau).max_abs_diff(&reference.total));
            let cases = fast.averaged_cases(tau);
            for (a, b) in cases.iter().zip([&reference.accept, &reference.alt_accept, &reference.reject]) {
                worst = worst.max(a.max_abs_diff(b));
            }
        }
    }
    outcome(worst <= 1e-9, format!("max entrywise difference {worst:.2e} over g in {{1,3}}, r=2"))
}

fn lindblad_equivalence() -> Result<Outcome> {
    let cfg = base();
    let mut parts = Vec::new();
    let mut pass = true;
    // the literal set enumerates every register pair, so it runs at r=2
    let small = cfg.setup_with(2, 3, cfg.beta)?;
    let l_small = FastChannel::build(&small.model, &small.ensemble)?.lindbladian();
    let literal = LindbladSet::literal(&small.model, &small.ensemble)?;
    let err = literal.generator().max_abs_diff(&l_small);
    pass &= err <= 1e-9;
    parts.push(format!("literal set (r=2, g=3, {} ops) err {err:.2e}", literal.len()));
    let s = cfg.setup()?;
    let l = FastChannel::build(&s.model, &s.ensemble)?.lindbladian();
    let factored = LindbladSet::factored(&s.model, &s.ensemble)?;
    let err = factored.generator().max_abs_diff(&l);
    pass &= err <= 1e-9;
    parts.push(format!("factored set (r=3, g=3) err {err:.2e}"));
    outcome(pass, parts.join("; "))
}

fn residual_scaling() -> Result<Outcome> {
    let cfg = base();
    let by_r: Vec<f64> = (3..=6).map(|r| fixed_point_residual(&cfg, r, 5, 1.0)).collect::<Result<_>>()?;
    let ratios: Vec<f64> = by_r.windows(2).map(|p| p[1] / p[0]).collect();
    let ratio_ok = ratios.iter().all(|&q| (0.4..=0.6).contains(&q));
    let by_g: Vec<f64> = [1, 3, 5].iter().map(|&g| fixed_point_residual(&cfg, 5, g, 1.0)).collect::<Result<_>>()?;
    let mono_ok = by_g.windows(2).all(|p| p[1] <= p[0]);
    outcome(
        ratio_ok && mono_ok,
        format!(
            "g=5, r=3..6 residuals {} ratios {} (need 0.4..0.6); r=5, g=1,3,5 residuals {} (need nonincreasing)",
            list(&by_r, 4),
            list(&ratios, 3),
            list(&by_g, 4)
        ),
    )
}

fn uniform_error() -> Result<Outcome> {
    let s = base().setup()?;
    let rows = uniform_error_rows(&s)?;
    let pass = rows.iter().all(|r| r.identity_error <= 1e-10 && r.trace_norm <= r.bound);
    let parts: Vec<String> = rows
        .iter()
        .map(|r| format!("(v={},s={}) err {:.1e} norm {:.3e}", r.v, r.s, r.identity_error, r.trace_norm))
        .collect();
    outcome(pass, format!("{}; bound 4 beta w = {:.3}", parts.join(", "), rows[0].bound))
}

fn uniqueness_and_gap() -> Result<Outcome> {
    let cfg = base();
    let s = cfg.setup()?;
    let l = FastChannel::build(&s.model, &s.ensemble)?.lindbladian();
    let fp = lindblad::fixed_point(&l)?;
    let report = lindblad::spectral_gap(&l)?;
    let rho_beta = gibbs(&s.es, cfg.beta)?.matrix;
    let residual = linalg::trace_norm(&l.apply(&rho_beta));
    let tmix = lindblad::mixing_time_with(&l, &report, cfg.epsilon, cfg.seed)?;
    let dist = linalg::trace_norm(&(&report.fixed_point - &rho_beta));
    let bound = residual * tmix.estimate + cfg.epsilon;

    // Ising chain without field: every sandwich B C B is diagonal under Z jumps
    let neg = ExperimentConfig { model: ModelSpec::Tfim { coupling: 1.0, field: 0.0 }, jumps: JumpSet::ZOnly, ..cfg.clone() };
    let ns = neg.setup()?;
    let neg_l = FastChannel::build(&ns.model, &ns.ensemble)?.lindbladian();
    let neg_dim = match lindblad::fixed_point(&neg_l) {
        Err(qmetro::Error::Uniqueness { dim, .. }) => dim,
        Ok(f) => f.null_dimension,
        Err(e) => return Err(e),
    };
    let pass = fp.null_dimension == 1
        && report.min_fixed_point_eigenvalue > 0.0
        && report.gap > 0.0
        && neg_dim > 1
        && dist <= bound;
    outcome(
        pass,
        format!(
            "null dim {}, min eig(rho_L) {:.3e}, gap {:.4}; Z-only null dim {neg_dim}; ||rho_L - rho_beta|| {dist:.4e} <= {bound:.4e}",
            fp.null_dimension, report.min_fixed_point_eigenvalue, report.gap
        ),
    )
}

fn discrete_continuous() -> Result<Outcome> {
    let s = base().setup()?;
    let fast = FastChannel::build(&s.model, &s.ensemble)?;
    let (k, tau) = (100u64, 0.05);
    let diff = &fast.channel(tau).power(k) - &Propagator::new(&fast.lindbladian()).at(k as f64 * tau * tau);
    let est = induced_norm_estimate(&diff, 5).estimate;
    let bound = 2.0 * 4f64.exp() * k as f64 * tau.powi(4);
    outcome(est <= bound, format!("||E^K - exp(K tau^2 L)|| {est:.4e} <= {bound:.4e}"))
}

fn mixing_bound() -> Result<Outcome> {
    let s = base().setup()?;
    let l = FastChannel::build(&s.model, &s.ensemble)?.lindbladian();
    let report = lindblad::spectral_gap(&l)?;
    let p = Propagator::new(&l);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let horizon = 4.0 / report.gap;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let rho = linalg::projector(&linalg::random_pure_state(4, &mut rng));
        for i in 0..20 {
            let t = horizon * i as f64 / 19.0;
            let dist = linalg::trace_norm(&(lindblad::evolve_with(&p, t, &rho)? - &report.fixed_point));
            worst = worst.max(dist / lindblad::mixing_bound(&report, &rho, t));
        }
    }
    outcome(worst <= 1.0, format!("max distance / bound {worst:.4} over 10 states x 20 times"))
}

fn end_to_end() -> Result<Outcome> {
    let cfg = ExperimentConfig { r: 5, g: 5, tau: 0.05, ..base() };
    let s = cfg.setup()?;
    let fast = FastChannel::build(&s.model, &s.ensemble)?;
    let l = fast.lindbladian();
    let report = lindblad::spectral_gap(&l)?;
    let tmix = lindblad::mixing_time_with(&l, &report, cfg.epsilon, cfg.seed)?;
    let k = (tmix.estimate / (cfg.tau * cfg.tau)).ceil() as u64;
    let mut psi = Vector::zeros(4);
    psi[0] = linalg::ONE;
    let exact = fast.channel(cfg.tau).power(k).apply(&linalg::projector(&psi));
    let rho_beta = gibbs(&s.es, cfg.beta)?.matrix;
    let dist = linalg::trace_norm(&(&exact - &rho_beta));

    let sim = KrausUnravelling::new(&fast, cfg.tau);
    let chains = 10_000;
    let records = trajectory::run_chains(&sim, &psi, k as usize, chains, cfg.seed, false)?;
    let states: Vec<&Vector> = records.iter().map(|r| &r.final_state).collect();
    let rho_hat = trajectory::average_projector(&states)?;
    let sigma = trajectory::bootstrap_sigma(&states, 200, cfg.seed + 1)?;
    let mc = linalg::trace_norm(&(&rho_hat - &exact));
    outcome(
        dist <= 0.05 && mc <= 3.0 * sigma,
        format!(
            "t_mix {:.3}, K {k}: ||E^K(rho) - rho_beta|| {dist:.4e} <= 0.05; {chains} trajectories ||rho_hat - E^K(rho)|| {mc:.4e} <= 3 sigma = {:.4e}",
            tmix.estimate,
            3.0 * sigma
        ),
    )
}

fn qpe_bounds() -> Result<Outcome> {
    let cfg = base();
    let s = cfg.setup()?;
    let size = s.grid.size();
    let samples = 10_000;
    let thetas: Vec<f64> = (0..samples).map(|i| i as f64 / samples as f64).collect();
    let min_mass = thetas.iter().map(|&t| qpe::two_point_mass(t, size)).fold(f64::INFINITY, f64::min);
    let half = (size / 2) as i64;
    let sum_err = thetas
        .iter()
        .map(|&t| {
            let total: linalg::C64 = (-half + 1..=half).map(|l| qpe::gamma(t, l, size)).sum();
            (total - linalg::ONE).norm()
        })
        .fold(0.0, f64::max);
    let mut gram_err: f64 = 0.0;
    for v in &s.model.variants {
        let total = v.gram.total();
        for j in 0..4 {
            gram_err = gram_err.max((total[(j, j)] - linalg::ONE).norm());
        }
    }
    let small = cfg.setup_with(2, 3, cfg.beta)?;
    let mut dp_err: f64 = 0.0;
    for flipped in [false, true] {
        let dp = qpe::gram_family(&small.model.table, 3, flipped)?;
        let en = qpe::gram_family_enumerated(&small.model.table, 3, flipped)?;
        for (a, b) in dp.by_median.iter().zip(&en.by_median) {
            dp_err = dp_err.max(linalg::max_abs_diff(a, b));
        }
    }
    outcome(
        min_mass >= 0.8 && sum_err <= 1e-10 && gram_err <= 1e-10 && dp_err <= 1e-10,
        format!(
            "min two-point mass {min_mass:.5}; sum gamma err {sum_err:.1e}; sum G_jj err {gram_err:.1e}; DP vs enumeration {dp_err:.1e}"
        ),
    )
}

pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub budget: Duration,
    pub run: fn() -> Result<Outcome>,
}

const fn criterion(id: usize, name: &'static str, secs: u64, run: fn() -> Result<Outcome>) -> Criterion {
    Criterion { id, name, budget: Duration::from_secs(secs), run }
}

pub fn criteria() -> [Criterion; 11] {
    [
        criterion(1, "CPTP", 10, cptp),
        criterion(2, "decomposition identity", 60, decomposition),
        criterion(3, "cross-build equality", 120, cross_build),
        criterion(4, "Lindblad equivalence", 30, lindblad_equivalence),
        criterion(5, "fixed-point residual scaling", 300, residual_scaling),
        criterion(6, "uniform-error identity", 60, uniform_error),
        criterion(7, "uniqueness and gap", 60, uniqueness_and_gap),
        criterion(8, "discrete-continuous closeness", 120, discrete_continuous),
        criterion(9, "mixing bound", 60, mixing_bound),
        criterion(10, "end-to-end sampling", 1800, end_to_end),
        criterion(11, "QPE amplitude bounds", 60, qpe_bounds),
    ]
}
