use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use qmetro::channel::FastChannel;
use qmetro::config::{ExperimentConfig, Setup};
use qmetro::hamiltonians::gibbs;
use qmetro::lindblad::{self, MixingTimeEstimate, Propagator, SpectralReport};
use qmetro::linalg::{self, Mat, Vector};
use qmetro::qpe::{self, EnergyGrid, ENUMERATION_LIMIT};
use qmetro::superop::MatrixDump;
use qmetro::trajectory::{self, KrausUnravelling, RegisterUnravelling, Unravelling};
use qmetro::verify;

use crate::output::{csv_writer, write_json, OutputDir};

fn ground_state(d: usize) -> Vector {
    let mut psi = Vector::zeros(d);
    psi[0] = linalg::ONE;
    psi
}

#[derive(Serialize)]
struct ModelReport<'a> {
    dim: usize,
    eigenvalues: &'a [f64],
    kappa: f64,
    grid: &'a EnergyGrid,
    floor_index: &'a [usize],
    residues: &'a [f64],
    gibbs_probabilities: Vec<f64>,
    jumps: &'a [String],
    warnings: Vec<String>,
}

pub fn model(cfg: &ExperimentConfig, out: &OutputDir) -> anyhow::Result<bool> {
    let s = cfg.setup()?;
    let report = ModelReport {
        dim: s.es.dim(),
        eigenvalues: &s.es.eigenvalues,
        kappa: s.es.kappa,
        grid: &s.grid,
        floor_index: &s.model.table.floor_index,
        residues: &s.model.table.epsilon,
        gibbs_probabilities: gibbs(&s.es, cfg.beta)?.probabilities,
        jumps: &s.ensemble.labels,
        warnings: cfg.warnings(&s.es),
    };
    for w in &report.warnings {
        log::warn!("{w}");
    }
    write_json(&out.reports.join("model.json"), "model", cfg, &report)?;
    Ok(true)
}

#[derive(Serialize)]
struct GramDiagnostics {
    flipped: bool,
    /// Smallest eigenvalue of each `G⁽ᵃ⁾`, by median grid index.
    min_eigenvalues: Vec<f64>,
    /// `max_j |Σ_a G⁽ᵃ⁾_jj − 1|`.
    diagonal_sum_error: f64,
    /// Recursion vs enumeration; absent when enumeration is too large.
    enumeration_difference: Option<f64>,
}

#[derive(Serialize)]
struct QpeReport {
    /// Row `j`, column `c` holds `γ_{j l}` with `l = c − 2^r/2 + 1`.
    gamma: MatrixDump,
    /// Row `j`, column `y` holds the single-round amplitude at grid index `y`.
    beta: MatrixDump,
    two_point_mass: Vec<f64>,
    gram: Vec<GramDiagnostics>,
    /// `max |G⁽ᵃ⁾(flipped) − conj G⁽ᵃ⁾|`.
    flip_conjugation_defect: f64,
}

pub fn qpe_table(cfg: &ExperimentConfig, out: &OutputDir) -> anyhow::Result<bool> {
    let s = cfg.setup()?;
    let table = &s.model.table;
    let size = table.size();
    let enumerable = size.checked_pow(cfg.g as u32).is_some_and(|n| n <= ENUMERATION_LIMIT);
    let mut gram = Vec::new();
    for v in &s.model.variants {
        let enumeration_difference = if enumerable {
            let en = qpe::gram_family_enumerated(table, cfg.g, v.flipped)?;
            Some(v.gram.by_median.iter().zip(&en.by_median).map(|(a, b)| linalg::max_abs_diff(a, b)).fold(0.0, f64::max))
        } else {
            None
        };
        let total = v.gram.total();
        gram.push(GramDiagnostics {
            flipped: v.flipped,
            min_eigenvalues: v.gram.by_median.iter().map(linalg::min_eigenvalue_hermitian).collect(),
            diagonal_sum_error: total.diagonal().iter().map(|z| (z - linalg::ONE).norm()).fold(0.0, f64::max),
            enumeration_difference,
        });
    }
    let [plain, flipped] = &s.model.variants;
    let flip_conjugation_defect = plain
        .gram
        .by_median
        .iter()
        .zip(&flipped.gram.by_median)
        .map(|(a, b)| linalg::max_abs_diff(&a.conjugate(), b))
        .fold(0.0, f64::max);
    let report = QpeReport {
        gamma: MatrixDump::of(&table.gamma),
        beta: MatrixDump::of(&table.beta),
        two_point_mass: (0..table.dim()).map(|j| qpe::two_point_mass(table.theta(j), size)).collect(),
        gram,
        flip_conjugation_defect,
    };
    write_json(&out.reports.join("qpe_table.json"), "qpe-table", cfg, &report)?;
    Ok(true)
}

#[derive(Serialize)]
struct ChannelReport {
    tau: f64,
    /// Column-stacking superoperators: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
    channel: MatrixDump,
    lindbladian: MatrixDump,
    quartic: MatrixDump,
    trace_preservation_defect: f64,
    choi_min_eigenvalue: f64,
    trace_annihilation_defect: f64,
    hermiticity_preservation_defect: f64,
}

pub fn channel_build(cfg: &ExperimentConfig, out: &OutputDir, tau: f64) -> anyhow::Result<bool> {
    if !(0.0..=1.0).contains(&tau) {
        anyhow::bail!("tau must lie in [0, 1], got {tau}");
    }
    let s = cfg.setup()?;
    let fast = FastChannel::build(&s.model, &s.ensemble)?;
    let dec = fast.decomposition(tau);
    let report = ChannelReport {
        tau,
        channel: MatrixDump::of(dec.e_tau.matrix()),
        lindbladian: MatrixDump::of(dec.l.matrix()),
        quartic: MatrixDump::of(dec.j_tau.matrix()),
        trace_preservation_defect: dec.e_tau.trace_preservation_defect(),
        choi_min_eigenvalue: dec.e_tau.choi_min_eigenvalue(),
        trace_annihilation_defect: dec.l.trace_annihilation_defect(),
        hermiticity_preservation_defect: dec.l.hermiticity_preservation_defect(),
    };
    write_json(&out.reports.join("channel.json"), "channel-build", cfg, &report)?;
    Ok(true)
}

struct Spectral {
    setup: Setup,
    l: qmetro::superop::Superoperator,
    report: SpectralReport,
    mixing: MixingTimeEstimate,
    rho_beta: Mat,
}

fn spectral(cfg: &ExperimentConfig, r: usize, g: usize, beta: f64) -> anyhow::Result<Spectral> {
    let setup = cfg.setup_with(r, g, beta)?;
    let l = FastChannel::build(&setup.model, &setup.ensemble)?.lindbladian();
    let report = lindblad::spectral_gap(&l)?;
    let mixing = lindblad::mixing_time_with(&l, &report, cfg.epsilon, cfg.seed)?;
    let rho_beta = gibbs(&setup.es, beta)?.matrix;
    Ok(Spectral { setup, l, report, mixing, rho_beta })
}

#[derive(Serialize)]
struct GapReport<'a> {
    spectral: &'a SpectralReport,
    mixing_time: &'a MixingTimeEstimate,
    gibbs_residual: f64,
    gibbs_distance: f64,
}

pub fn gap(cfg: &ExperimentConfig, out: &OutputDir) -> anyhow::Result<bool> {
    let sp = spectral(cfg, cfg.r, cfg.g, cfg.beta)?;
    let report = GapReport {
        spectral: &sp.report,
        mixing_time: &sp.mixing,
        gibbs_residual: linalg::trace_norm(&sp.l.apply(&sp.rho_beta)),
        gibbs_distance: linalg::trace_norm(&(&sp.report.fixed_point - &sp.rho_beta)),
    };
    write_json(&out.reports.join("gap.json"), "gap", cfg, &report)?;
    Ok(true)
}

#[derive(Serialize)]
struct EvolvedState {
    t: f64,
    state: MatrixDump,
    distance_to_fixed_point: f64,
    distance_to_gibbs: f64,
    energy: f64,
}

pub fn evolve(cfg: &ExperimentConfig, out: &OutputDir, times: &[f64]) -> anyhow::Result<bool> {
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        anyhow::bail!("evolution times must be finite and >= 0");
    }
    let sp = spectral(cfg, cfg.r, cfg.g, cfg.beta)?;
    let h = sp.setup.hamiltonian.matrix();
    let p = Propagator::new(&sp.l);
    let rho0 = linalg::projector(&ground_state(sp.setup.es.dim()));
    let states = times
        .iter()
        .map(|&t| {
            let rho = lindblad::evolve_with(&p, t, &rho0)?;
            Ok(EvolvedState {
                t,
                distance_to_fixed_point: linalg::trace_norm(&(&rho - &sp.report.fixed_point)),
                distance_to_gibbs: linalg::trace_norm(&(&rho - &sp.rho_beta)),
                energy: linalg::trace(&(h * &rho)).re,
                state: MatrixDump::of(&rho),
            })
        })
        .collect::<qmetro::Result<Vec<_>>>()?;
    write_json(&out.states.join("evolve.json"), "evolve", cfg, &states)?;
    Ok(true)
}

#[derive(Serialize)]
struct TrajectorySummary {
    mode: &'static str,
    chains: usize,
    iterations: usize,
    /// Accept, alternate-accept and reject totals.
    counts: [u64; 3],
    empirical_state: MatrixDump,
    exact_state: MatrixDump,
    distance_to_exact: f64,
    bootstrap_sigma: f64,
}

pub fn trajectory(
    cfg: &ExperimentConfig,
    out: &OutputDir,
    chains: usize,
    iterations: usize,
    register: bool,
) -> anyhow::Result<bool> {
    if chains == 0 || iterations == 0 {
        anyhow::bail!("chains and iterations must be positive");
    }
    let s = cfg.setup()?;
    let fast = FastChannel::build(&s.model, &s.ensemble)?;
    let psi = ground_state(s.es.dim());
    let reg;
    let kraus;
    let sim: &dyn Unravelling = if register {
        reg = RegisterUnravelling::new(&s.model, &s.ensemble, cfg.tau)?;
        &reg
    } else {
        kraus = KrausUnravelling::new(&fast, cfg.tau);
        &kraus
    };
    let records = trajectory::run_chains(sim, &psi, iterations, chains, cfg.seed, true)?;

    let path = out.states.join("trajectory.csv");
    let mut w = csv_writer(&path, "trajectory", cfg.seed)?;
    w.write_record(["chain", "iteration", "case", "c_index", "flip", "flag1", "flag2"])?;
    for rec in &records {
        for (i, ev) in rec.events.iter().enumerate() {
            let (f1, f2) = ev.case.outcomes();
            w.write_record([
                rec.stream.to_string(),
                (i + 1).to_string(),
                ev.case.label().to_string(),
                ev.jump.to_string(),
                u8::from(ev.flipped).to_string(),
                f1.to_string(),
                f2.map(|f| f.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;

    let states: Vec<&Vector> = records.iter().map(|r| &r.final_state).collect();
    let empirical = trajectory::average_projector(&states)?;
    let exact = fast.channel(cfg.tau).power(iterations as u64).apply(&linalg::projector(&psi));
    let mut counts = [0u64; 3];
    for rec in &records {
        for (c, n) in counts.iter_mut().zip(rec.counts) {
            *c += n;
        }
    }
    let summary = TrajectorySummary {
        mode: if register { "register" } else { "kraus" },
        chains,
        iterations,
        counts,
        distance_to_exact: linalg::trace_norm(&(&empirical - &exact)),
        bootstrap_sigma: trajectory::bootstrap_sigma(&states, 100, cfg.seed)?,
        empirical_state: MatrixDump::of(&empirical),
        exact_state: MatrixDump::of(&exact),
    };
    write_json(&out.states.join("trajectory_summary.json"), "trajectory", cfg, &summary)?;
    Ok(true)
}

pub fn verify(cfg: &ExperimentConfig, out: &OutputDir) -> anyhow::Result<bool> {
    let report = verify::run_all(cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    for check in &report.checks {
        println!("{}", check.line());
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {failed} failed", report.checks.len());
    write_json(&out.reports.join("verify.json"), "verify", cfg, &report)?;
    Ok(report.all_passed)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    r: usize,
    g: usize,
    tau: f64,
    beta: f64,
    residual: f64,
    gap: f64,
    tmix_est: f64,
    dist: f64,
}

fn axis<T: Copy>(values: &[T], fallback: T) -> Vec<T> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

pub fn sweep(cfg: &ExperimentConfig, out: &OutputDir) -> anyhow::Result<bool> {
    let axes = &cfg.sweep;
    let mut points = Vec::new();
    for r in axis(&axes.r, cfg.r) {
        for g in axis(&axes.g, cfg.g) {
            for tau in axis(&axes.tau, cfg.tau) {
                for beta in axis(&axes.beta, cfg.beta) {
                    points.push((r, g, tau, beta));
                }
            }
        }
    }
    // the generator does not depend on τ, so the τ axis only labels rows
    let rows = points
        .par_iter()
        .map(|&(r, g, tau, beta)| {
            let sp = spectral(cfg, r, g, beta)?;
            log::info!("sweep point r={r} g={g} tau={tau} beta={beta} done");
            Ok(SweepRow {
                r,
                g,
                tau,
                beta,
                residual: linalg::trace_norm(&sp.l.apply(&sp.rho_beta)),
                gap: sp.report.gap,
                tmix_est: sp.mixing.estimate,
                dist: linalg::trace_norm(&(&sp.report.fixed_point - &sp.rho_beta)),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let path = out.sweeps.join("sweep.csv");
    let mut w = csv_writer(&path, "sweep", cfg.seed)?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(true)
}
