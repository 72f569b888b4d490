//! The verification battery: every structural claim about the sampler
//! bound to a numerical check with a recorded anchor.

pub mod norms;
pub mod projected;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{build_reference_channel, extract_j, FastChannel};
use crate::config::{ExperimentConfig, Setup, VERSION};
use crate::error::{Error, Result};
use crate::hamiltonians::{gibbs, truncated_gibbs};
use crate::lindblad::{self, LindbladSet, Propagator, SpectralReport};
use crate::linalg::{self, Mat, Vector};
use crate::qpe;
use crate::superop::Superoperator;
use crate::trajectory::{self, KrausUnravelling};

use self::norms::induced_norm_estimate;
use self::projected::{ClassSet, MedianClass, ProjectedOperators, Slots};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Below,
    Above,
    Within,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub anchor: String,
    pub measured: f64,
    pub bound: f64,
    pub tol: f64,
    pub relation: Relation,
    pub pass: bool,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    pub fn new(name: &str, anchor: &str, measured: f64, relation: Relation, bound: f64, tol: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => measured <= bound + tol,
            Relation::AtLeast => measured >= bound - tol,
            Relation::Below => measured < bound,
            Relation::Above => measured > bound,
            Relation::Within => (measured - bound).abs() <= tol,
        };
        CheckResult {
            name: name.into(),
            anchor: anchor.into(),
            measured,
            bound,
            tol,
            relation,
            pass,
            seconds: 0.0,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    /// A check that could not be evaluated.
    pub fn errored(name: &str, anchor: &str, err: &Error) -> Self {
        CheckResult::new(name, anchor, f64::NAN, Relation::Within, f64::NAN, 0.0).with_detail(err.to_string())
    }

    /// One line for console output.
    pub fn line(&self) -> String {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Below => "<",
            Relation::Above => ">",
            Relation::Within => "~=",
        };
        format!(
            "[{}] {}: {:.6e} {} {:.6e} (tol {:.1e}, {:.2}s){}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            rel,
            self.bound,
            self.tol,
            self.seconds,
            self.detail.as_ref().map(|d| format!(" [{d}]")).unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// `‖L(ρ_β)‖₁` for the configured Hamiltonian at `(r, g, β)`.
pub fn fixed_point_residual(cfg: &ExperimentConfig, r: usize, g: usize, beta: f64) -> Result<f64> {
    let s = cfg.setup_with(r, g, beta)?;
    let fast = FastChannel::build(&s.model, &s.ensemble)?;
    let rho = gibbs(&s.es, beta)?.matrix;
    Ok(linalg::trace_norm(&fast.lindbladian().apply(&rho)))
}

/// Uniform-error identity for one `(v, s)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UniformErrorRow {
    pub v: usize,
    pub s: usize,
    /// Largest entry of `(M^a − M^rr)(ρ_β0) − (1 − e^{β(s−v)w}) M^a(ρ_β0)`.
    pub identity_error: f64,
    pub trace_norm: f64,
    /// `4βw`.
    pub bound: f64,
}

pub fn uniform_error_rows(s: &Setup) -> Result<Vec<UniformErrorRow>> {
    let beta = s.model.beta;
    let w = s.grid.spacing;
    let rho0 = Mat::from_diagonal(&Vector::from_iterator(
        s.es.dim(),
        truncated_gibbs(&s.es, beta, &s.grid)?.probabilities.iter().map(|&p| linalg::c(p)),
    ));
    let ops = ProjectedOperators::new(&s.model, &s.ensemble);
    let mut rows = Vec::new();
    for v in 0..2 {
        for sv in 0..2 {
            let slots = Slots::uniform(v, sv);
            let acc = ops.accept(slots, &rho0);
            let diff = &acc - ops.reject_right(slots, &rho0);
            let factor = 1.0 - (beta * (sv as f64 - v as f64) * w).exp();
            let predicted = &acc * linalg::c(factor);
            rows.push(UniformErrorRow {
                v,
                s: sv,
                identity_error: linalg::max_abs_diff(&diff, &predicted),
                trace_norm: linalg::trace_norm(&diff),
                bound: 4.0 * beta * w,
            });
        }
    }
    Ok(rows)
}

/// Largest trace norm of an accept or right-reject operator at `ρ_β0`
/// with one slot restricted to the tail class.
pub fn tail_class_norm(s: &Setup) -> Result<f64> {
    let rho0 = Mat::from_diagonal(&Vector::from_iterator(
        s.es.dim(),
        truncated_gibbs(&s.es, s.model.beta, &s.grid)?.probabilities.iter().map(|&p| linalg::c(p)),
    ));
    let ops = ProjectedOperators::new(&s.model, &s.ensemble);
    let tail = ClassSet::only(MedianClass::Else);
    let slots = [
        Slots { a: tail, ..Slots::FULL },
        Slots { b: tail, ..Slots::FULL },
        Slots { x: tail, ..Slots::FULL },
        Slots { y: tail, ..Slots::FULL },
    ];
    Ok(slots
        .iter()
        .map(|&sl| {
            let a = linalg::trace_norm(&ops.accept(sl, &rho0));
            let r = linalg::trace_norm(&ops.reject_right(sl, &rho0));
            a.max(r)
        })
        .fold(0.0, f64::max))
}

/// Least-squares slope of `log₂ y` against `x`, negated.
pub fn log2_decay_rate(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    -cov / var
}

/// Envelope `a · 2^{−c g + 2n} + b · β κ 2^{−r}` fitted to residuals.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Largest relative deviation of the fit from a measured point.
    pub max_relative_misfit: f64,
}

pub struct ResidualPoint {
    pub r: usize,
    pub g: usize,
    pub residual: f64,
}

/// Scans `c` and solves the relative least-squares problem for
/// non-negative `(a, b)` at each value.
pub fn fit_residual_envelope(points: &[ResidualPoint], n: usize, beta: f64, kappa: f64) -> ResidualFit {
    let basis = |p: &ResidualPoint, c: f64| -> (f64, f64) {
        let u = 2f64.powf(-c * p.g as f64 + 2.0 * n as f64) / p.residual;
        let v = beta * kappa * 2f64.powi(-(p.r as i32)) / p.residual;
        (u, v)
    };
    let solve = |c: f64| -> (f64, f64, f64) {
        let (mut suu, mut suv, mut svv, mut su, mut sv) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in points {
            let (u, v) = basis(p, c);
            suu += u * u;
            suv += u * v;
            svv += v * v;
            su += u;
            sv += v;
        }
        let cost = |a: f64, b: f64| -> f64 {
            points.iter().map(|p| {
                let (u, v) = basis(p, c);
                (a * u + b * v - 1.0).powi(2)
            }).sum()
        };
        let det = suu * svv - suv * suv;
        let mut best = (0.0, sv / svv);
        let mut best_cost = cost(best.0, best.1);
        let mut consider = |a: f64, b: f64| {
            if a >= 0.0 && b >= 0.0 {
                let k = cost(a, b);
                if k < best_cost {
                    best = (a, b);
                    best_cost = k;
                }
            }
        };
        if det.abs() > 1e-300 {
            consider((su * svv - sv * suv) / det, (sv * suu - su * suv) / det);
        }
        consider(su / suu, 0.0);
        (best.0, best.1, best_cost)
    };
    let mut best = (0.0, 0.0, 0.0, f64::INFINITY);
    for i in 1..=400 {
        let c = i as f64 * 0.01;
        let (a, b, cost) = solve(c);
        if cost < best.3 {
            best = (a, b, c, cost);
        }
    }
    let (a, b, c, _) = best;
    let misfit = points
        .iter()
        .map(|p| {
            let (u, v) = basis(p, c);
            (a * u + b * v - 1.0).abs()
        })
        .fold(0.0, f64::max);
    ResidualFit { a, b, c, max_relative_misfit: misfit }
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Shared state for the checks that need the configured channel.
struct Context<'a> {
    cfg: &'a ExperimentConfig,
    setup: Setup,
    fast: FastChannel,
    lindbladian: Superoperator,
    rho_beta: Mat,
}

type Group<'a> = (&'static str, &'static str, Box<dyn Fn(&Context) -> Result<Vec<CheckResult>> + Sync + 'a>);

fn cptp(ctx: &Context) -> Result<Vec<CheckResult>> {
    let tol = &ctx.cfg.tolerances;
    let mut taus = vec![0.05, 0.2, ctx.cfg.tau];
    taus.dedup();
    let mut out = Vec::new();
    for tau in taus {
        let e = ctx.fast.channel(tau);
        out.push(CheckResult::new(
            &format!("trace preservation (tau={tau})"),
            "iteration channel is trace preserving",
            e.trace_preservation_defect(),
            Relation::AtMost,
            0.0,
            tol.identity,
        ));
        out.push(CheckResult::new(
            &format!("complete positivity (tau={tau})"),
            "iteration channel is completely positive",
            e.choi_min_eigenvalue(),
            Relation::AtLeast,
            0.0,
            tol.choi,
        ));
    }
    Ok(out)
}

fn decomposition(ctx: &Context) -> Result<Vec<CheckResult>> {
    let tau = ctx.cfg.tau;
    let dec = ctx.fast.decomposition(tau);
    let j = extract_j(&dec.e_tau, &dec.l, tau)?;
    let rebuilt = &(&Superoperator::identity(ctx.fast.dim()) + &dec.l.scale(tau * tau)) + &j.scale(tau.powi(4));
    let l_norm = induced_norm_estimate(&dec.l, ctx.cfg.seed);
    let j_norm = induced_norm_estimate(&j, ctx.cfg.seed + 1);
    Ok(vec![
        CheckResult::new(
            "channel = I + tau^2 L + tau^4 J",
            "second-order expansion of the iteration channel",
            rebuilt.max_abs_diff(&dec.e_tau),
            Relation::AtMost,
            0.0,
            ctx.cfg.tolerances.identity,
        ),
        CheckResult::new("induced norm of L", "generator norm bound", l_norm.estimate, Relation::AtMost, 4.0, 0.0)
            .with_detail(format!("{} restarts", l_norm.restarts)),
        CheckResult::new("induced norm of J", "quartic remainder norm bound", j_norm.estimate, Relation::AtMost, 4.0, 0.0)
            .with_detail(format!("{} restarts", j_norm.restarts)),
    ])
}

fn cross_build(ctx: &Context) -> Result<Vec<CheckResult>> {
    let cfg = ctx.cfg;
    let mut out = Vec::new();
    for g in [1, 3] {
        let s = cfg.setup_with(2, g, cfg.beta)?;
        let fast = FastChannel::build(&s.model, &s.ensemble)?;
        let reference = build_reference_channel(&s.model, &s.ensemble, cfg.tau)?;
        out.push(CheckResult::new(
            &format!("reference vs fast channel (r=2, g={g})"),
            "register-level and eigenbasis constructions agree",
            fast.channel(cfg.tau).max_abs_diff(&reference.total),
            Relation::AtMost,
            0.0,
            cfg.tolerances.cross_build,
        ));
    }
    Ok(out)
}

fn lindblad_equivalence(ctx: &Context) -> Result<Vec<CheckResult>> {
    let s = &ctx.setup;
    let (set, kind) = match LindbladSet::literal(&s.model, &s.ensemble) {
        Ok(set) => (set, "literal"),
        Err(_) => (LindbladSet::factored(&s.model, &s.ensemble)?, "factored"),
    };
    Ok(vec![CheckResult::new(
        "Lindblad operators reproduce L",
        "generator in Lindblad form",
        set.generator().max_abs_diff(&ctx.lindbladian),
        Relation::AtMost,
        0.0,
        ctx.cfg.tolerances.cross_build,
    )
    .with_detail(format!("{kind} set, {} operators", set.len()))])
}

fn residual_sweep(ctx: &Context) -> Result<Vec<CheckResult>> {
    let cfg = ctx.cfg;
    let rs = if cfg.sweep.r.is_empty() { vec![2, 3, 4] } else { cfg.sweep.r.clone() };
    let res: Vec<f64> = rs
        .par_iter()
        .map(|&r| fixed_point_residual(cfg, r, cfg.g, cfg.beta))
        .collect::<Result<_>>()?;
    let worst = res.windows(2).map(|p| p[1] / p[0]).fold(0.0, f64::max);
    let mut out = vec![CheckResult::new(
        "fixed-point residual decreases with r",
        "fixed-point residual shrinks with the grid spacing",
        worst,
        Relation::Below,
        1.0,
        0.0,
    )
    .with_detail(format!("r = {rs:?}, residuals = {}", sci(&res)))];

    let gs = [1, 3, 5];
    let grid: Vec<(usize, usize)> = rs.iter().flat_map(|&r| gs.iter().map(move |&g| (r, g))).collect();
    let points: Vec<ResidualPoint> = grid
        .par_iter()
        .map(|&(r, g)| Ok(ResidualPoint { r, g, residual: fixed_point_residual(cfg, r, g, cfg.beta)? }))
        .collect::<Result<_>>()?;
    let fit = fit_residual_envelope(&points, cfg.n, cfg.beta, ctx.setup.es.kappa);
    out.push(
        CheckResult::new(
            "residual envelope: spacing coefficient",
            "fixed-point residual structure a 2^(-cg+2n) + b beta kappa 2^(-r)",
            fit.b,
            Relation::Above,
            0.0,
            0.0,
        )
        .with_detail(format!(
            "a={:.4e}, b={:.4e}, c={:.2}, max relative misfit {:.3}",
            fit.a, fit.b, fit.c, fit.max_relative_misfit
        )),
    );
    Ok(out)
}

fn uniform_error(ctx: &Context) -> Result<Vec<CheckResult>> {
    let tol = ctx.cfg.tolerances.identity;
    let mut out = Vec::new();
    for row in uniform_error_rows(&ctx.setup)? {
        let tag = format!("(v={}, s={})", row.v, row.s);
        out.push(CheckResult::new(
            &format!("uniform error identity {tag}"),
            "median acceptance detailed balance on floor/ceiling classes",
            row.identity_error,
            Relation::AtMost,
            0.0,
            tol,
        ));
        out.push(CheckResult::new(
            &format!("uniform error trace norm {tag}"),
            "projected accept/reject mismatch is O(beta w)",
            row.trace_norm,
            Relation::AtMost,
            row.bound,
            0.0,
        ));
    }
    Ok(out)
}

fn tail_suppression(ctx: &Context) -> Result<Vec<CheckResult>> {
    let cfg = ctx.cfg;
    let gs = [1usize, 3, 5];
    let norms: Vec<f64> = gs
        .par_iter()
        .map(|&g| tail_class_norm(&cfg.setup_with(cfg.r, g, cfg.beta)?))
        .collect::<Result<_>>()?;
    let worst = norms.windows(2).map(|p| p[1] / p[0]).fold(0.0, f64::max);
    let xs: Vec<f64> = gs.iter().map(|&g| g as f64).collect();
    let rate = log2_decay_rate(&xs, &norms);
    Ok(vec![CheckResult::new(
        "tail-class operators decay in g",
        "median boosting suppresses far-off estimates",
        worst,
        Relation::Below,
        1.0,
        0.0,
    )
    .with_detail(format!("g = {gs:?}, norms = {}, fitted rate {rate:.3} bits per round", sci(&norms)))])
}

fn left_right(ctx: &Context) -> Result<Vec<CheckResult>> {
    let s = &ctx.setup;
    let ops = ProjectedOperators::new(&s.model, &s.ensemble);
    let d = s.es.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let rho = linalg::random_hermitian(d, &mut rng);
        let lhs = linalg::trace_norm(&ctx.lindbladian.apply(&rho));
        let eig = s.es.to_eigenbasis(&rho);
        let rhs = 2.0 * linalg::trace_norm(&(ops.accept(Slots::FULL, &eig) - ops.reject_right(Slots::FULL, &eig)));
        worst = worst.max(lhs / rhs);
    }
    Ok(vec![CheckResult::new(
        "left/right reject reduction",
        "||L(rho)|| <= 2 ||M_a(rho) - M_rr(rho)||",
        worst,
        Relation::AtMost,
        1.0,
        1e-12,
    )])
}

fn spectral(ctx: &Context) -> Result<Vec<CheckResult>> {
    let anchor = "unique full-rank fixed point";
    let report = match lindblad::spectral_gap(&ctx.lindbladian) {
        Ok(r) => r,
        Err(Error::Uniqueness { dim, tol }) => {
            return Ok(vec![CheckResult::new("unique stationary state", anchor, dim as f64, Relation::Within, 1.0, 0.0)
                .with_detail(format!("null space dimension {dim} at tolerance {tol:e}"))]);
        }
        Err(e) => return Err(e),
    };
    let mut out = vec![
        CheckResult::new("unique stationary state", anchor, 1.0, Relation::Within, 1.0, 0.0),
        CheckResult::new(
            "stationary state full rank",
            anchor,
            report.min_fixed_point_eigenvalue,
            Relation::Above,
            0.0,
            0.0,
        ),
        CheckResult::new("spectral gap positive", "gap of the symmetrised generator", report.gap, Relation::Above, 0.0, 0.0),
    ];
    out.extend(distance_and_mixing(ctx, &report)?);
    Ok(out)
}

fn distance_and_mixing(ctx: &Context, report: &SpectralReport) -> Result<Vec<CheckResult>> {
    let cfg = ctx.cfg;
    let l = &ctx.lindbladian;
    let eps = cfg.epsilon;
    let tmix = lindblad::mixing_time_with(l, report, eps, cfg.seed)?;
    let residual = linalg::trace_norm(&l.apply(&ctx.rho_beta));
    let dist = linalg::trace_norm(&(&report.fixed_point - &ctx.rho_beta));
    let mut out = vec![CheckResult::new(
        "stationary state near Gibbs",
        "||rho_L - rho_beta|| <= eps + residual * t_mix",
        dist,
        Relation::AtMost,
        eps + residual * tmix.estimate,
        0.0,
    )
    .with_detail(format!("t_mix={:.4}, residual={residual:.4e}", tmix.estimate))];

    let p = Propagator::new(l);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed + 7);
    let d = l.dim();
    let horizon = 3.0 / report.gap;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let rho = linalg::projector(&linalg::random_pure_state(d, &mut rng));
        for i in 0..20 {
            let t = horizon * i as f64 / 19.0;
            let dist = linalg::trace_norm(&(lindblad::evolve_with(&p, t, &rho)? - &report.fixed_point));
            worst = worst.max(dist / lindblad::mixing_bound(report, &rho, t));
        }
    }
    out.push(CheckResult::new(
        "gap mixing bound",
        "exponential convergence at the spectral gap",
        worst,
        Relation::AtMost,
        1.0,
        1e-9,
    ));

    let (k, tau) = (100u64, 0.05);
    let diff = &ctx.fast.channel(tau).power(k) - &p.at(k as f64 * tau * tau);
    let est = induced_norm_estimate(&diff, cfg.seed + 3);
    out.push(CheckResult::new(
        "discrete vs continuous evolution (K=100, tau=0.05)",
        "||E^K - exp(K tau^2 L)|| <= 2 e^4 K tau^4",
        est.estimate,
        Relation::AtMost,
        2.0 * 4f64.exp() * k as f64 * tau.powi(4),
        0.0,
    ));

    out.extend(end_to_end(ctx, report, tmix.estimate, residual)?);
    Ok(out)
}

/// Exact `E^K` from `|0⟩` against `ρ_β` and the Monte-Carlo estimate of it.
fn end_to_end(ctx: &Context, report: &SpectralReport, tmix: f64, residual: f64) -> Result<Vec<CheckResult>> {
    let cfg = ctx.cfg;
    let tau = cfg.tau;
    let eps = cfg.epsilon;
    let k = (tmix / (tau * tau)).ceil().max(1.0) as u64;
    let d = ctx.fast.dim();
    let mut psi = Vector::zeros(d);
    psi[0] = linalg::ONE;
    let exact = ctx.fast.channel(tau).power(k).apply(&linalg::projector(&psi));
    let dist = linalg::trace_norm(&(&exact - &ctx.rho_beta));
    let bound = 2.0 * 4f64.exp() * k as f64 * tau.powi(4) + eps + eps + residual * tmix;
    let _ = report;
    let mut out = vec![CheckResult::new(
        "sampler output near Gibbs",
        "||E^K(rho) - rho_beta|| <= 2e^4 K tau^4 + 2 eps + residual t_mix",
        dist,
        Relation::AtMost,
        bound,
        0.0,
    )
    .with_detail(format!("K={k}"))];

    let sim = KrausUnravelling::new(&ctx.fast, tau);
    let records = trajectory::run_chains(&sim, &psi, k as usize, cfg.chains, cfg.seed, false)?;
    let states: Vec<&Vector> = records.iter().map(|r| &r.final_state).collect();
    let rho_hat = trajectory::average_projector(&states)?;
    let sigma = trajectory::bootstrap_sigma(&states, 200, cfg.seed + 11)?;
    out.push(
        CheckResult::new(
            "trajectories reproduce E^K",
            "unravelling is unbiased",
            linalg::trace_norm(&(&rho_hat - &exact)),
            Relation::AtMost,
            3.0 * sigma,
            0.0,
        )
        .with_detail(format!("{} chains, K={k}, bootstrap sigma {sigma:.4e}", cfg.chains)),
    );
    Ok(out)
}

fn qpe_bounds(ctx: &Context) -> Result<Vec<CheckResult>> {
    let cfg = ctx.cfg;
    let size = ctx.setup.grid.size();
    let samples = 10_000;
    let thetas: Vec<f64> = (0..samples).map(|i| i as f64 / samples as f64).collect();
    let min_mass = thetas.iter().map(|&t| qpe::two_point_mass(t, size)).fold(f64::INFINITY, f64::min);
    let half = (size / 2) as i64;
    let sum_err = thetas
        .iter()
        .map(|&t| {
            let s: linalg::C64 = (-half + 1..=half).map(|l| qpe::gamma(t, l, size)).sum();
            (s - linalg::ONE).norm()
        })
        .fold(0.0, f64::max);
    let gram_err = ctx
        .setup
        .model
        .variants
        .iter()
        .map(|v| {
            let total = v.gram.total();
            (0..total.nrows()).map(|j| (total[(j, j)] - linalg::ONE).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let small = cfg.setup_with(2, 3, cfg.beta)?;
    let mut dp_err: f64 = 0.0;
    for flipped in [false, true] {
        let dp = qpe::gram_family(&small.model.table, 3, flipped)?;
        let en = qpe::gram_family_enumerated(&small.model.table, 3, flipped)?;
        for (a, b) in dp.by_median.iter().zip(&en.by_median) {
            dp_err = dp_err.max(linalg::max_abs_diff(a, b));
        }
    }
    let tol = cfg.tolerances.identity;
    Ok(vec![
        CheckResult::new(
            "two nearest grid points carry >= 8/pi^2",
            "single-round estimate lands on floor or ceiling",
            min_mass,
            Relation::AtLeast,
            0.8,
            0.0,
        )
        .with_detail(format!("{samples} residues, N={size}")),
        CheckResult::new("amplitudes sum to one", "phase-estimation amplitude sum", sum_err, Relation::AtMost, 0.0, tol),
        CheckResult::new("median Gram diagonals sum to one", "boosted estimate is normalised", gram_err, Relation::AtMost, 0.0, tol),
        CheckResult::new("Gram DP equals enumeration (r=2, g=3)", "median-class recursion", dp_err, Relation::AtMost, 0.0, tol),
    ])
}

fn gibbs_truncation(ctx: &Context) -> Result<Vec<CheckResult>> {
    let s = &ctx.setup;
    let beta = ctx.cfg.beta;
    let trunc = truncated_gibbs(&s.es, beta, &s.grid)?;
    Ok(vec![CheckResult::new(
        "truncated Gibbs weights",
        "flooring energies moves the Gibbs state by at most 2 beta w",
        linalg::trace_norm(&(&trunc.matrix - &ctx.rho_beta)),
        Relation::AtMost,
        2.0 * beta * s.grid.spacing,
        0.0,
    )])
}

fn trace_norm_utilities(ctx: &Context) -> Result<Vec<CheckResult>> {
    let d = ctx.setup.es.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed + 5);
    let m = linalg::random_hermitian(d, &mut rng) * linalg::random_unitary(d, &mut rng);
    let v = norms::variational_trace_norm(&m, 1000, ctx.cfg.seed);
    let e = ctx.fast.channel(ctx.cfg.tau);
    let contraction = (0..20)
        .map(|_| {
            let h = linalg::random_hermitian(d, &mut rng);
            linalg::trace_norm(&e.apply(&h)) / linalg::trace_norm(&h)
        })
        .fold(0.0, f64::max);
    Ok(vec![
        CheckResult::new(
            "random unitaries never beat the trace norm",
            "variational form of the trace norm",
            v.best_random,
            Relation::AtMost,
            v.trace_norm,
            1e-12,
        ),
        CheckResult::new(
            "SVD unitary attains the trace norm",
            "variational form of the trace norm",
            v.at_maximizer,
            Relation::Within,
            v.trace_norm,
            1e-10,
        ),
        CheckResult::new(
            "channel contracts the trace norm",
            "CPTP maps are trace-norm contractions",
            contraction,
            Relation::AtMost,
            1.0,
            1e-10,
        ),
    ])
}

fn groups<'a>() -> Vec<Group<'a>> {
    vec![
        ("cptp", "iteration channel is a channel", Box::new(cptp)),
        ("decomposition", "second-order expansion", Box::new(decomposition)),
        ("cross-build", "two channel constructions", Box::new(cross_build)),
        ("lindblad", "generator in Lindblad form", Box::new(lindblad_equivalence)),
        ("residual", "fixed-point residual", Box::new(residual_sweep)),
        ("uniform-error", "projected operators", Box::new(uniform_error)),
        ("tail", "projected operators", Box::new(tail_suppression)),
        ("left-right", "reject reduction", Box::new(left_right)),
        ("spectral", "fixed point and mixing", Box::new(spectral)),
        ("qpe", "phase-estimation amplitudes", Box::new(qpe_bounds)),
        ("gibbs", "truncated Gibbs state", Box::new(gibbs_truncation)),
        ("norms", "trace-norm utilities", Box::new(trace_norm_utilities)),
    ]
}

/// Runs every check. Failures and errors are collected, never
/// short-circuited; results come back in a fixed order.
pub fn run_all(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let setup = cfg.setup()?;
    let warnings = cfg.warnings(&setup.es);
    let fast = FastChannel::build(&setup.model, &setup.ensemble)?;
    let lindbladian = fast.lindbladian();
    let rho_beta = gibbs(&setup.es, cfg.beta)?.matrix;
    let ctx = Context { cfg, setup, fast, lindbladian, rho_beta };
    let results: Vec<Vec<CheckResult>> = groups()
        .into_par_iter()
        .map(|(name, anchor, run)| {
            let start = Instant::now();
            let mut res = match run(&ctx) {
                Ok(r) => r,
                Err(e) => vec![CheckResult::errored(name, anchor, &e)],
            };
            let secs = start.elapsed().as_secs_f64();
            for r in &mut res {
                r.seconds = secs;
            }
            log::info!("check group {name} finished in {secs:.2}s");
            res
        })
        .collect();
    let checks: Vec<CheckResult> = results.into_iter().flatten().collect();
    let all_passed = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { version: VERSION, config: cfg.clone(), warnings, checks, all_passed })
}
