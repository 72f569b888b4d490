//! Channel build from median-grouped Gram matrices in the energy eigenbasis.
//!
//! Per jump `C` (written `C̃` in the eigenbasis) and QPE variant, the
//! iteration splits exactly as
//!
//! * accept: `τ² M_a`
//! * alternate accept: `τ² M_a − τ⁴ M_a2`
//! * reject: `I − τ² M_r + τ⁴ J_r`
//!
//! with `M_a(ρ) = Σ f(a,b) G⁽ᵇ⁾ ∘ (C̃ (G⁽ᵃ⁾ ∘ ρ) C̃†)`, `M_a2` the same with
//! `f²`, and `M_r(ρ) = Dρ + ρD`. `J_r` needs the phase-estimation unitaries
//! on non-zero register inputs, which enter through the pair sums of
//! [`qpe::median_pair_sum`].

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::{self, c, Mat, C64, ZERO};
use crate::qpe;
use crate::superop::Superoperator;

use super::{ChannelDecomposition, JumpEnsemble, SamplerModel, Variant};

/// Per-jump, per-variant terms as `d² × d²` matrices in the eigenbasis.
#[derive(Debug, Clone)]
pub struct JumpTerms {
    pub m_a: Mat,
    pub m_a2: Mat,
    pub m_r: Mat,
    pub j_r: Mat,
}

impl JumpTerms {
    fn zeros(d: usize) -> Self {
        let z = Mat::zeros(d * d, d * d);
        JumpTerms { m_a: z.clone(), m_a2: z.clone(), m_r: z.clone(), j_r: z }
    }

    fn add_scaled(&mut self, other: &JumpTerms, w: f64) {
        let w = c(w);
        self.m_a += &other.m_a * w;
        self.m_a2 += &other.m_a2 * w;
        self.m_r += &other.m_r * w;
        self.j_r += &other.j_r * w;
    }

    /// `2 M_a − M_r`.
    pub fn lindbladian(&self) -> Mat {
        &self.m_a * c(2.0) - &self.m_r
    }

    /// `J_r − M_a2`.
    pub fn quartic(&self) -> Mat {
        &self.j_r - &self.m_a2
    }
}

/// Jump-independent ingredients for one variant.
struct VariantData {
    /// `A_f[(k + d k′), (j + d j′)] = Σ f(a,b) G⁽ᵇ⁾_{kk′} G⁽ᵃ⁾_{jj′}`.
    a_f: Mat,
    a_f2: Mat,
    /// `h[b] = Σ_a f(a,b) G⁽ᵃ⁾`.
    h: Vec<Mat>,
    /// Diagonals of each `G⁽ᵇ⁾`.
    gram_diag: Vec<Vec<C64>>,
    /// `z[(((j·d + j′)·d + m′)·d + m), (k·d + k′)]`.
    z: Mat,
}

fn weight_sandwich(gvec: &Mat, f: &DMatrix<f64>) -> Mat {
    let ft = f.transpose().map(c);
    gvec * ft * gvec.transpose()
}

impl VariantData {
    fn new(model: &SamplerModel, v: &Variant) -> Self {
        let d = model.dim();
        let size = model.grid_size();
        let f = &model.accept;
        let gvec = v.gram.stacked();
        let a_f = weight_sandwich(&gvec, f);
        let a_f2 = weight_sandwich(&gvec, &f.component_mul(f));
        let h: Vec<Mat> = (0..size)
            .map(|b| {
                (0..size).fold(Mat::zeros(d, d), |acc, a| acc + &v.gram.by_median[a] * c(f[(a, b)]))
            })
            .collect();
        let gram_diag = v
            .gram
            .by_median
            .iter()
            .map(|m| (0..d).map(|k| m[(k, k)]).collect())
            .collect();
        let z = reject_kernel(model, v);
        VariantData { a_f, a_f2, h, gram_diag, z }
    }

    fn terms(&self, d: usize, jump: &Mat) -> JumpTerms {
        let cj = jump.conjugate().kronecker(jump);
        let m_a = self.a_f.component_mul(&cj);
        let m_a2 = self.a_f2.component_mul(&cj);

        let mut dm = Mat::zeros(d, d);
        for (hb, diag) in self.h.iter().zip(&self.gram_diag) {
            let mut inner = Mat::zeros(d, d);
            for m in 0..d {
                for j in 0..d {
                    let mut acc = ZERO;
                    for k in 0..d {
                        acc += jump[(k, m)].conj() * diag[k] * jump[(k, j)];
                    }
                    inner[(m, j)] = acc;
                }
            }
            dm += hb.transpose().component_mul(&inner);
        }
        let id = linalg::identity(d);
        let m_r = id.kronecker(&dm) + dm.transpose().kronecker(&id);

        let mut j_r = Mat::zeros(d * d, d * d);
        for j in 0..d {
            for jp in 0..d {
                for mp in 0..d {
                    for m in 0..d {
                        let row = ((j * d + jp) * d + mp) * d + m;
                        let mut acc = ZERO;
                        for k in 0..d {
                            let left = jump[(k, m)].conj() * jump[(k, j)];
                            for kp in 0..d {
                                let right = jump[(kp, mp)] * jump[(kp, jp)].conj();
                                acc += left * right * self.z[(row, k * d + kp)];
                            }
                        }
                        j_r[(m + d * mp, j + d * jp)] = acc;
                    }
                }
            }
        }
        JumpTerms { m_a, m_a2, m_r, j_r }
    }
}

/// Contracted joint-median sums feeding the quartic reject term:
/// `z[(j,j′,m′,m), (k,k′)] = Σ_{a,b} Q_{j,j′;m′,m}(a,b) · R_{k,k′}(a,b)` where
/// `Q_{u,v;p,q}(a,b) = Σ_{med E=a, med F=b} β_{uE} β*_{vF} Π_i (V_p V_q†)_{f_i e_i}`
/// and `R_{k,k′} = F · Q_{k,k′;k′,k} · Fᵀ`.
fn reject_kernel(model: &SamplerModel, v: &Variant) -> Mat {
    let d = model.dim();
    let size = model.grid_size();
    let g = model.g;
    let beta = &v.beta;
    let transfer: Vec<Mat> = (0..d * d)
        .map(|pq| &v.unitaries[pq / d] * v.unitaries[pq % d].adjoint())
        .collect();
    let pair = |u: usize, w: usize, p: usize, q: usize| -> Mat {
        let t = &transfer[p * d + q];
        let weights = Mat::from_fn(size, size, |e, f| beta[(u, e)] * beta[(w, f)].conj() * t[(f, e)]);
        qpe::median_pair_sum(&weights, g)
    };
    let fc = model.accept.map(c);
    let ft = fc.transpose();
    let r_cols: Vec<Mat> = (0..d * d)
        .into_par_iter()
        .map(|kk| {
            let (k, kp) = (kk / d, kk % d);
            &fc * pair(k, kp, kp, k) * &ft
        })
        .collect();
    let mut r_flat = Mat::zeros(size * size, d * d);
    for (col, r) in r_cols.iter().enumerate() {
        r_flat.set_column(col, &crate::superop::vec_of(r));
    }
    let rows: Vec<Vec<C64>> = (0..d * d * d * d)
        .into_par_iter()
        .map(|row| {
            let (m, mp, jp, j) = (row % d, (row / d) % d, (row / (d * d)) % d, row / (d * d * d));
            let q = pair(j, jp, mp, m);
            let qv = crate::superop::vec_of(&q);
            (0..d * d)
                .map(|col| qv.iter().zip(r_flat.column(col).iter()).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect();
    Mat::from_fn(d * d * d * d, d * d, |row, col| rows[row][col])
}

/// Fast channel: per-jump terms for both variants.
#[derive(Debug, Clone)]
pub struct FastChannel {
    dim: usize,
    weights: Vec<f64>,
    /// `terms[c][flipped as usize]`.
    terms: Vec<[JumpTerms; 2]>,
    averaged: JumpTerms,
    basis: Mat,
}

impl FastChannel {
    pub fn build(model: &SamplerModel, ensemble: &JumpEnsemble) -> Result<Self> {
        let d = model.dim();
        let data: Vec<VariantData> = model.variants.iter().map(|v| VariantData::new(model, v)).collect();
        let terms: Vec<[JumpTerms; 2]> = ensemble
            .operators
            .par_iter()
            .map(|op| {
                let jump = model.in_eigenbasis(op);
                [data[0].terms(d, &jump), data[1].terms(d, &jump)]
            })
            .collect();
        let mut averaged = JumpTerms::zeros(d);
        for (t, &w) in terms.iter().zip(&ensemble.weights) {
            averaged.add_scaled(&t[0], 0.5 * w);
            averaged.add_scaled(&t[1], 0.5 * w);
        }
        Ok(FastChannel {
            dim: d,
            weights: ensemble.weights.clone(),
            terms,
            averaged,
            basis: model.es.eigenvectors.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jump_count(&self) -> usize {
        self.terms.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn comp(&self, m: &Mat) -> Superoperator {
        Superoperator::from_matrix(self.dim, m.clone()).from_basis(&self.basis)
    }

    /// Ensemble- and variant-averaged terms in the eigenbasis.
    pub fn averaged_eigen(&self) -> &JumpTerms {
        &self.averaged
    }

    pub fn jump_terms_eigen(&self, c_index: usize, flipped: bool) -> &JumpTerms {
        &self.terms[c_index][flipped as usize]
    }

    pub fn m_accept(&self) -> Superoperator {
        self.comp(&self.averaged.m_a)
    }

    pub fn m_reject(&self) -> Superoperator {
        self.comp(&self.averaged.m_r)
    }

    pub fn lindbladian(&self) -> Superoperator {
        self.comp(&self.averaged.lindbladian())
    }

    /// The quartic coefficient; it carries no residual `τ` dependence.
    pub fn quartic(&self) -> Superoperator {
        self.comp(&self.averaged.quartic())
    }

    pub fn channel(&self, tau: f64) -> Superoperator {
        let t2 = tau * tau;
        let m = linalg::identity(self.dim * self.dim)
            + self.averaged.lindbladian() * c(t2)
            + self.averaged.quartic() * c(t2 * t2);
        self.comp(&m)
    }

    pub fn decomposition(&self, tau: f64) -> ChannelDecomposition {
        ChannelDecomposition { e_tau: self.channel(tau), l: self.lindbladian(), j_tau: self.quartic(), tau }
    }

    /// Accept, alternate-accept and reject maps for one jump and variant,
    /// in the computational basis.
    pub fn case_superoperators(&self, c_index: usize, flipped: bool, tau: f64) -> [Superoperator; 3] {
        let t = self.jump_terms_eigen(c_index, flipped);
        let t2 = c(tau * tau);
        let t4 = c(tau.powi(4));
        let a = &t.m_a * t2;
        let b = &t.m_a * t2 - &t.m_a2 * t4;
        let r = linalg::identity(self.dim * self.dim) - &t.m_r * t2 + &t.j_r * t4;
        [self.comp(&a), self.comp(&b), self.comp(&r)]
    }

    /// Ensemble-averaged case maps in the computational basis.
    pub fn averaged_cases(&self, tau: f64) -> [Superoperator; 3] {
        let d = self.dim;
        let mut acc = [Superoperator::zeros(d), Superoperator::zeros(d), Superoperator::zeros(d)];
        for (ci, &w) in self.weights.iter().enumerate() {
            for flipped in [false, true] {
                let cases = self.case_superoperators(ci, flipped, tau);
                for (a, s) in acc.iter_mut().zip(&cases) {
                    *a = &*a + &s.scale(0.5 * w);
                }
            }
        }
        acc
    }
}
