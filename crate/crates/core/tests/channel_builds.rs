use qmetro::channel::{build_reference_channel, pauli_jump_ensemble, FastChannel, SamplerModel};
use qmetro::hamiltonians::{build_tfim, eigensystem};
use qmetro::qpe::energy_grid;
use qmetro::superop::Superoperator;

fn model(r: usize, g: usize, beta: f64) -> SamplerModel {
    let es = eigensystem(&build_tfim(2, 1.0, 0.5).unwrap()).unwrap();
    let grid = energy_grid(r, es.kappa).unwrap();
    SamplerModel::new(&es, &grid, g, beta).unwrap()
}

#[test]
fn fast_matches_reference() {
    let ens = pauli_jump_ensemble(2).unwrap();
    for g in [1, 3] {
        let m = model(2, g, 1.0);
        let fast = FastChannel::build(&m, &ens).unwrap();
        for tau in [0.05, 0.2] {
            let reference = build_reference_channel(&m, &ens, tau).unwrap();
            let cases = fast.averaged_cases(tau);
            let names = ["accept", "alt", "reject"];
            let refs = [&reference.accept, &reference.alt_accept, &reference.reject];
            for i in 0..3 {
                let err = cases[i].max_abs_diff(refs[i]);
                println!("g={g} tau={tau} {} err={err:e}", names[i]);
                assert!(err <= 1e-9);
            }
            let err = fast.channel(tau).max_abs_diff(&reference.total);
            assert!(err <= 1e-9, "total err {err:e}");
        }
    }
}

#[test]
fn zero_tau_is_identity() {
    let ens = pauli_jump_ensemble(2).unwrap();
    let m = model(2, 1, 1.0);
    let reference = build_reference_channel(&m, &ens, 0.0).unwrap();
    assert!(reference.total.max_abs_diff(&Superoperator::identity(4)) < 1e-12);
}
