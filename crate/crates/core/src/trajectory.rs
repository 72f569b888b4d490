//! Monte-Carlo unravelling of the sampler iteration.
//!
//! Two interchangeable unravellings produce the same channel on average:
//!
//! * [`RegisterUnravelling`] pushes the explicit joint register state
//!   through the circuit, samples the flag measurements, and then samples
//!   registers 2–4 in the computational basis;
//! * [`KrausUnravelling`] samples one Kraus operator of the exact case map
//!   for the chosen jump and variant. It is the only option once
//!   `2^{2rg}` amplitudes no longer fit in memory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::registers::{self, Circuit, Layout};
use crate::channel::{FastChannel, JumpEnsemble, SamplerModel};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector, C64};

const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Case {
    Accept,
    AltAccept,
    Reject,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::Accept => "a",
            Case::AltAccept => "b",
            Case::Reject => "r",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Flag readings `(first, second)`; the second measurement only
    /// happens after a first reading of 0.
    pub fn outcomes(self) -> (u8, Option<u8>) {
        match self {
            Case::Accept => (1, None),
            Case::AltAccept => (0, Some(1)),
            Case::Reject => (0, Some(0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationEvent {
    pub case: Case,
    pub jump: usize,
    pub flipped: bool,
}

pub trait Unravelling: Sync {
    fn dim(&self) -> usize;

    /// One iteration on a normalised pure state in the computational basis.
    fn step(&self, psi: &Vector, rng: &mut ChaCha8Rng) -> Result<(Vector, IterationEvent)>;
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn sample_jump(weights: &[f64], rng: &mut ChaCha8Rng) -> (usize, bool) {
    let flipped = rng.random::<bool>();
    (sample_index(weights, rng), flipped)
}

fn check_norm(psi: &Vector) -> Result<()> {
    let drift = (psi.norm() - 1.0).abs();
    if drift > NORM_TOL {
        return Err(Error::Numerical(format!("state norm drifted by {drift:e}")));
    }
    Ok(())
}

/// Register-level unravelling of the iteration.
pub struct RegisterUnravelling<'a> {
    model: &'a SamplerModel,
    weights: Vec<f64>,
    jumps: Vec<Mat>,
    layout: Layout,
    tau: f64,
}

/// One fully resolved outcome of an iteration: probability, event and the
/// collapsed system state (computational basis, normalised).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub probability: f64,
    pub event: IterationEvent,
    pub state: Vector,
}

impl<'a> RegisterUnravelling<'a> {
    pub fn new(model: &'a SamplerModel, ensemble: &JumpEnsemble, tau: f64) -> Result<Self> {
        let layout = Layout::for_model(model)?;
        let jumps = ensemble.operators.iter().map(|c| model.in_eigenbasis(c)).collect();
        Ok(RegisterUnravelling { model, weights: ensemble.weights.clone(), jumps, layout, tau })
    }

    fn branches(&self, psi: &Vector, jump: usize, flipped: bool) -> [Vec<C64>; 3] {
        let eig = self.model.es.eigenvectors.adjoint() * psi;
        let circuit = Circuit {
            layout: &self.layout,
            model: self.model,
            jump: self.jumps[jump].clone(),
            flipped,
            tau: self.tau,
        };
        let b = circuit.branches(&self.layout.embed(eig.as_slice()));
        [b.accept, b.alt_accept, b.reject]
    }

    /// System state left after reading the registers as `x`.
    fn collapse(&self, v: &[C64], x: usize) -> (f64, Vector) {
        let block = self.layout.block();
        let d = self.layout.d;
        let eig = Vector::from_iterator(d, (0..d).map(|m| v[m * block + x]));
        let p = eig.norm_squared();
        let comp = &self.model.es.eigenvectors * eig;
        (p, comp)
    }

    /// Every outcome with nonzero probability, for exhaustive checks.
    pub fn all_outcomes(&self, psi: &Vector) -> Vec<Outcome> {
        let mut out = Vec::new();
        let block = self.layout.block();
        for (jump, &mu) in self.weights.iter().enumerate() {
            for flipped in [false, true] {
                let branches = self.branches(psi, jump, flipped);
                for (case, v) in [Case::Accept, Case::AltAccept, Case::Reject].into_iter().zip(&branches) {
                    for x in 0..block {
                        let (p, state) = self.collapse(v, x);
                        if p > 0.0 {
                            out.push(Outcome {
                                probability: 0.5 * mu * p,
                                event: IterationEvent { case, jump, flipped },
                                state: state.unscale(p.sqrt()),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

impl Unravelling for RegisterUnravelling<'_> {
    fn dim(&self) -> usize {
        self.layout.d
    }

    fn step(&self, psi: &Vector, rng: &mut ChaCha8Rng) -> Result<(Vector, IterationEvent)> {
        check_norm(psi)?;
        let (jump, flipped) = sample_jump(&self.weights, rng);
        let branches = self.branches(psi, jump, flipped);
        let probs: Vec<f64> = branches.iter().map(|v| registers::norm_sqr(v)).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Numerical(format!("branch probabilities sum to {total}")));
        }
        let case = [Case::Accept, Case::AltAccept, Case::Reject][sample_index(&probs, rng)];
        let v = &branches[case.index()];
        let block = self.layout.block();
        let d = self.layout.d;
        let weights: Vec<f64> = (0..block)
            .map(|x| (0..d).map(|m| v[m * block + x].norm_sqr()).sum())
            .collect();
        let x = sample_index(&weights, rng);
        let (p, state) = self.collapse(v, x);
        let state = state.unscale(p.sqrt());
        check_norm(&state)?;
        Ok((state, IterationEvent { case, jump, flipped }))
    }
}

/// Unravelling by Kraus operators of the exact per-jump case maps.
pub struct KrausUnravelling {
    dim: usize,
    weights: Vec<f64>,
    /// `kraus[jump][flipped][case]`.
    kraus: Vec<[[Vec<Mat>; 3]; 2]>,
    /// All operators of one jump and variant stacked row-wise, with the
    /// number of operators per case.
    stacked: Vec<[(Mat, [usize; 3]); 2]>,
}

impl KrausUnravelling {
    /// Choi eigenvalues below this are dropped; they are round-off.
    pub const CUTOFF: f64 = 1e-15;

    pub fn new(fast: &FastChannel, tau: f64) -> Self {
        let d = fast.dim();
        let kraus: Vec<[[Vec<Mat>; 3]; 2]> = (0..fast.jump_count())
            .into_par_iter()
            .map(|c| {
                [false, true].map(|flipped| {
                    fast.case_superoperators(c, flipped, tau).map(|s| s.kraus(Self::CUTOFF))
                })
            })
            .collect();
        let stacked = kraus
            .iter()
            .map(|per_jump| {
                per_jump.each_ref().map(|cases| {
                    let counts = cases.each_ref().map(|ks| ks.len());
                    let total: usize = counts.iter().sum();
                    let mut m = Mat::zeros(total * d, d);
                    for (i, k) in cases.iter().flatten().enumerate() {
                        m.view_mut((i * d, 0), (d, d)).copy_from(k);
                    }
                    (m, counts)
                })
            })
            .collect();
        KrausUnravelling { dim: d, weights: fast.weights().to_vec(), kraus, stacked }
    }

    pub fn kraus_ops(&self, jump: usize, flipped: bool, case: Case) -> &[Mat] {
        &self.kraus[jump][flipped as usize][case.index()]
    }
}

impl Unravelling for KrausUnravelling {
    fn dim(&self) -> usize {
        self.dim
    }

    fn step(&self, psi: &Vector, rng: &mut ChaCha8Rng) -> Result<(Vector, IterationEvent)> {
        check_norm(psi)?;
        let d = self.dim;
        let (jump, flipped) = sample_jump(&self.weights, rng);
        let (stack, counts) = &self.stacked[jump][flipped as usize];
        let image = stack * psi;
        let probs: Vec<f64> = image.as_slice().chunks(d).map(|b| b.iter().map(|z| z.norm_sqr()).sum()).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Numerical(format!("Kraus probabilities sum to {total}")));
        }
        let ki = sample_index(&probs, rng);
        let ci = if ki < counts[0] {
            0
        } else if ki < counts[0] + counts[1] {
            1
        } else {
            2
        };
        let state = Vector::from_column_slice(&image.as_slice()[ki * d..(ki + 1) * d]).unscale(probs[ki].sqrt());
        check_norm(&state)?;
        let case = [Case::Accept, Case::AltAccept, Case::Reject][ci];
        Ok((state, IterationEvent { case, jump, flipped }))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub stream: u64,
    /// Empty unless the chain was run with `keep_events`.
    pub events: Vec<IterationEvent>,
    #[serde(skip)]
    pub final_state: Vector,
    /// Accept, alternate-accept and reject counts.
    pub counts: [u64; 3],
}

/// Generator for chain `stream` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs one chain; per-iteration events are kept only if `keep_events`.
pub fn run_chain(
    sim: &dyn Unravelling,
    initial: &Vector,
    iterations: usize,
    seed: u64,
    stream: u64,
    keep_events: bool,
) -> Result<TrajectoryRecord> {
    if iterations == 0 {
        return Err(Error::Domain("a chain needs at least one iteration".into()));
    }
    let mut rng = chain_rng(seed, stream);
    let mut psi = initial.clone();
    let mut events = Vec::with_capacity(if keep_events { iterations } else { 0 });
    let mut counts = [0u64; 3];
    for _ in 0..iterations {
        let (next, ev) = sim.step(&psi, &mut rng)?;
        counts[ev.case.index()] += 1;
        if keep_events {
            events.push(ev);
        }
        psi = next;
    }
    Ok(TrajectoryRecord { seed, stream, events, final_state: psi, counts })
}

/// Independent chains `0..chains` in parallel; the result is ordered by
/// stream and does not depend on the thread count.
pub fn run_chains(
    sim: &dyn Unravelling,
    initial: &Vector,
    iterations: usize,
    chains: usize,
    seed: u64,
    keep_events: bool,
) -> Result<Vec<TrajectoryRecord>> {
    (0..chains as u64)
        .into_par_iter()
        .map(|s| run_chain(sim, initial, iterations, seed, s, keep_events))
        .collect()
}

/// Average of the final projectors.
pub fn empirical_state(records: &[TrajectoryRecord]) -> Result<Mat> {
    let states: Vec<&Vector> = records.iter().map(|r| &r.final_state).collect();
    average_projector(&states)
}

pub fn average_projector(states: &[&Vector]) -> Result<Mat> {
    if states.is_empty() {
        return Err(Error::Domain("cannot average an empty set of states".into()));
    }
    let d = states[0].len();
    let mut acc = Mat::zeros(d, d);
    for s in states {
        acc += linalg::projector(s);
    }
    Ok(linalg::hermitize(&acc.unscale(states.len() as f64)))
}

/// Bootstrap estimate of the trace-distance fluctuation of the empirical
/// state: RMS of `‖ρ̂* − ρ̂‖₁` over `replicates` resamples.
pub fn bootstrap_sigma(states: &[&Vector], replicates: usize, seed: u64) -> Result<f64> {
    let base = average_projector(states)?;
    let n = states.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..replicates {
        let sample: Vec<&Vector> = (0..n).map(|_| states[rng.random_range(0..n)]).collect();
        let rho = average_projector(&sample)?;
        acc += linalg::trace_norm_hermitian(&(rho - &base)).powi(2);
    }
    Ok((acc / replicates as f64).sqrt())
}

/// Probability of each case for one iteration from `rho`, computed from
/// the averaged case maps.
pub fn case_probabilities(fast: &FastChannel, tau: f64, rho: &Mat) -> [f64; 3] {
    fast.averaged_cases(tau).map(|s| linalg::trace(&s.apply(rho)).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::pauli_jump_ensemble;
    use crate::hamiltonians::{build_tfim, eigensystem};
    use crate::qpe::energy_grid;

    fn setup(r: usize, g: usize) -> (SamplerModel, JumpEnsemble) {
        let es = eigensystem(&build_tfim(2, 1.0, 0.5).unwrap()).unwrap();
        let grid = energy_grid(r, es.kappa).unwrap();
        (SamplerModel::new(&es, &grid, g, 1.0).unwrap(), pauli_jump_ensemble(2).unwrap())
    }

    fn start(d: usize, seed: u64) -> Vector {
        linalg::random_pure_state(d, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn exhaustive_outcomes_average_to_channel() {
        let (model, ens) = setup(2, 3);
        let tau = 0.3;
        let reg = RegisterUnravelling::new(&model, &ens, tau).unwrap();
        let fast = FastChannel::build(&model, &ens).unwrap();
        let psi = start(4, 3);
        let outcomes = reg.all_outcomes(&psi);
        let mut rho = Mat::zeros(4, 4);
        let mut by_case = [Mat::zeros(4, 4), Mat::zeros(4, 4), Mat::zeros(4, 4)];
        for o in &outcomes {
            let p = linalg::projector(&o.state) * linalg::c(o.probability);
            rho += &p;
            by_case[o.event.case.index()] += p;
        }
        let input = linalg::projector(&psi);
        assert!(linalg::max_abs_diff(&rho, &fast.channel(tau).apply(&input)) < 1e-12);
        for (acc, map) in by_case.iter().zip(fast.averaged_cases(tau)) {
            assert!(linalg::max_abs_diff(acc, &map.apply(&input)) < 1e-12);
        }
    }

    #[test]
    fn zero_tau_always_rejects() {
        let (model, ens) = setup(2, 1);
        let reg = RegisterUnravelling::new(&model, &ens, 0.0).unwrap();
        let psi = start(4, 5);
        let rec = run_chain(&reg, &psi, 20, 1, 0, true).unwrap();
        assert_eq!(rec.counts, [0, 0, 20]);
        let overlap = rec.final_state.dotc(&psi).norm();
        assert!((overlap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn chains_are_reproducible() {
        let (model, ens) = setup(2, 1);
        let fast = FastChannel::build(&model, &ens).unwrap();
        let kraus = KrausUnravelling::new(&fast, 0.4);
        let psi = start(4, 9);
        let a = run_chains(&kraus, &psi, 10, 4, 77, true).unwrap();
        let b = run_chains(&kraus, &psi, 10, 4, 77, true).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.events, y.events);
            assert_eq!(x.final_state, y.final_state);
        }
        assert_ne!(a[0].events, a[1].events);
    }

    #[test]
    fn case_frequencies_match_channel() {
        let (model, ens) = setup(2, 1);
        let tau = 0.5;
        let fast = FastChannel::build(&model, &ens).unwrap();
        let reg = RegisterUnravelling::new(&model, &ens, tau).unwrap();
        let kraus = KrausUnravelling::new(&fast, tau);
        let psi = start(4, 11);
        let expected = case_probabilities(&fast, tau, &linalg::projector(&psi));
        let n = 4000;
        for sim in [&reg as &dyn Unravelling, &kraus] {
            let recs = run_chains(sim, &psi, 1, n, 13, false).unwrap();
            for (i, &p) in expected.iter().enumerate() {
                let freq = recs.iter().filter(|r| r.counts[i] == 1).count() as f64 / n as f64;
                let sigma = (p * (1.0 - p) / n as f64).sqrt();
                assert!((freq - p).abs() < 5.0 * sigma + 1e-3, "case {i}: {freq} vs {p}");
            }
        }
    }

    #[test]
    fn kraus_sets_reproduce_case_maps() {
        let (model, ens) = setup(2, 3);
        let fast = FastChannel::build(&model, &ens).unwrap();
        let kraus = KrausUnravelling::new(&fast, 0.3);
        for (ci, case) in [Case::Accept, Case::AltAccept, Case::Reject].into_iter().enumerate() {
            let rebuilt = crate::superop::Superoperator::from_kraus(kraus.kraus_ops(2, true, case));
            let exact = &fast.case_superoperators(2, true, 0.3)[ci];
            assert!(rebuilt.max_abs_diff(exact) < 1e-12);
        }
    }

    #[test]
    fn empty_average_is_rejected() {
        assert!(matches!(empirical_state(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn bootstrap_of_identical_states_is_zero() {
        let psi = start(2, 1);
        let states = vec![&psi; 30];
        assert!(bootstrap_sigma(&states, 20, 2).unwrap() < 1e-12);
    }
}
