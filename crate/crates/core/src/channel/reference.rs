//! Channel build by explicit joint-register simulation.

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::{Mat, C64, ONE, ZERO};
use crate::superop::Superoperator;

use super::registers::{Circuit, Layout};
use super::{JumpEnsemble, SamplerModel};

/// The three outcome classes of one iteration and their sum.
#[derive(Debug, Clone)]
pub struct ReferenceChannel {
    pub accept: Superoperator,
    pub alt_accept: Superoperator,
    pub reject: Superoperator,
    pub total: Superoperator,
}

/// `|j⟩⟨j′| ↦ Tr_regs[v_j v_{j′}†]` from per-basis-state output vectors.
fn traced_map(d: usize, outputs: &[Vec<C64>]) -> Mat {
    let block = outputs[0].len() / d;
    let mut s = Mat::zeros(d * d, d * d);
    for j in 0..d {
        for jp in 0..d {
            let (a, b) = (&outputs[j], &outputs[jp]);
            for m in 0..d {
                for mp in 0..d {
                    let mut acc = ZERO;
                    let (ra, rb) = (&a[m * block..(m + 1) * block], &b[mp * block..(mp + 1) * block]);
                    for (x, y) in ra.iter().zip(rb) {
                        acc += x * y.conj();
                    }
                    s[(m + d * mp, j + d * jp)] = acc;
                }
            }
        }
    }
    s
}

/// Case superoperators in the eigenbasis for one jump (already in the
/// eigenbasis) and one QPE variant.
pub(crate) fn case_maps_eigen(
    layout: &Layout,
    model: &SamplerModel,
    jump: &Mat,
    flipped: bool,
    tau: f64,
) -> [Mat; 3] {
    let d = model.dim();
    let circuit = Circuit { layout, model, jump: jump.clone(), flipped, tau };
    let mut outs: [Vec<Vec<C64>>; 3] = Default::default();
    for j in 0..d {
        let mut psi = vec![ZERO; d];
        psi[j] = ONE;
        let b = circuit.branches(&layout.embed(&psi));
        outs[0].push(b.accept);
        outs[1].push(b.alt_accept);
        outs[2].push(b.reject);
    }
    [traced_map(d, &outs[0]), traced_map(d, &outs[1]), traced_map(d, &outs[2])]
}

pub fn build_reference_channel(
    model: &SamplerModel,
    ensemble: &JumpEnsemble,
    tau: f64,
) -> Result<ReferenceChannel> {
    let layout = Layout::for_model(model)?;
    let d = model.dim();
    let jobs: Vec<(usize, bool)> = (0..ensemble.len())
        .flat_map(|c| [(c, false), (c, true)])
        .collect();
    let parts: Vec<[Mat; 3]> = jobs
        .par_iter()
        .map(|&(c, flipped)| {
            let jump = model.in_eigenbasis(&ensemble.operators[c]);
            let w = 0.5 * ensemble.weights[c];
            case_maps_eigen(&layout, model, &jump, flipped, tau).map(|m| m * C64::new(w, 0.0))
        })
        .collect();
    let mut sums = [Mat::zeros(d * d, d * d), Mat::zeros(d * d, d * d), Mat::zeros(d * d, d * d)];
    for p in &parts {
        for (s, m) in sums.iter_mut().zip(p) {
            *s += m;
        }
    }
    let to_comp = |m: &Mat| model.to_computational(&Superoperator::from_matrix(d, m.clone()));
    let accept = to_comp(&sums[0]);
    let alt_accept = to_comp(&sums[1]);
    let reject = to_comp(&sums[2]);
    let total = &(&accept + &alt_accept) + &reject;
    Ok(ReferenceChannel { accept, alt_accept, reject, total })
}
