//! Monte Carlo statistics of the Kraus-mode unravelling against exact channels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmetro::channel::{pauli_jump_ensemble, FastChannel, SamplerModel};
use qmetro::hamiltonians::{build_tfim, eigensystem};
use qmetro::linalg::{self, Mat, Vector};
use qmetro::qpe::energy_grid;
use qmetro::trajectory::{bootstrap_sigma, case_probabilities, run_chains, KrausUnravelling};

fn fast() -> (FastChannel, Mat) {
    let h = build_tfim(2, 1.0, 0.5).unwrap();
    let es = eigensystem(&h).unwrap();
    let model = SamplerModel::new(&es, &energy_grid(3, es.kappa).unwrap(), 3, 1.0).unwrap();
    (FastChannel::build(&model, &pauli_jump_ensemble(2).unwrap()).unwrap(), h.matrix().clone())
}

fn start() -> Vector {
    linalg::random_pure_state(4, &mut ChaCha8Rng::seed_from_u64(21))
}

fn accept_frequency(fast: &FastChannel, tau: f64, n: usize, seed: u64) -> (f64, f64) {
    let psi = start();
    let sim = KrausUnravelling::new(fast, tau);
    let recs = run_chains(&sim, &psi, 1, n, seed, false).unwrap();
    let freq = recs.iter().filter(|r| r.counts[0] == 1).count() as f64 / n as f64;
    (freq, case_probabilities(fast, tau, &linalg::projector(&psi))[0])
}

#[test]
fn accept_frequency_matches_rate() {
    let (fast, _) = fast();
    let n = 100_000;
    let (freq, p) = accept_frequency(&fast, 0.2, n, 5);
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((freq - p).abs() <= 3.0 * sigma, "{freq} vs {p} (sigma {sigma})");

    // leading order is τ² tr(M_a ρ)
    let (_, p_half) = accept_frequency(&fast, 0.1, 1, 5);
    assert!((p / p_half / 4.0 - 1.0).abs() < 0.05, "{p} vs {p_half}");
}

#[test]
fn empirical_state_tracks_channel_power() {
    let (fast, h) = fast();
    let (tau, k, chains) = (0.2, 50, 10_000);
    let psi = start();
    let sim = KrausUnravelling::new(&fast, tau);
    let recs = run_chains(&sim, &psi, k, chains, 17, false).unwrap();
    let states: Vec<&Vector> = recs.iter().map(|r| &r.final_state).collect();
    let rho_hat = qmetro::trajectory::average_projector(&states).unwrap();

    let e = fast.channel(tau);
    let mut exact = linalg::projector(&psi);
    for _ in 0..k {
        exact = e.apply(&exact);
    }
    let sigma = bootstrap_sigma(&states, 50, 3).unwrap();
    let dist = linalg::trace_norm_hermitian(&(&rho_hat - &exact));
    assert!(dist <= 5.0 * sigma, "distance {dist} vs sigma {sigma}");

    let energies: Vec<f64> = states.iter().map(|s| s.dotc(&(&h * *s)).re).collect();
    let mean = energies.iter().sum::<f64>() / chains as f64;
    let var = energies.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (chains - 1) as f64;
    let target = linalg::trace(&(&h * &exact)).re;
    assert!((mean - target).abs() <= 3.0 * (var / chains as f64).sqrt(), "{mean} vs {target}");
}
