//! Dense joint state over (system eigen-index, register 2, register 3, flag).
//!
//! Flat index `((m·R + e)·R + e′)·2 + flag` with `R = N^g`; register tuples
//! are enumerated lexicographically with copy 0 most significant.

use crate::error::{Error, Result};
use crate::linalg::{Mat, C64, ZERO};
use crate::qpe;

use super::SamplerModel;

/// Largest joint vector (complex entries) the register path will allocate.
pub const JOINT_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub d: usize,
    pub n: usize,
    pub g: usize,
    pub reg: usize,
    pub medians: Vec<usize>,
}

impl Layout {
    pub fn new(d: usize, n: usize, g: usize) -> Result<Self> {
        let reg = (n as f64).powi(g as i32);
        let joint = d as f64 * reg * reg * 2.0;
        if joint > JOINT_LIMIT as f64 {
            return Err(Error::Size(format!(
                "joint register state of {joint} amplitudes exceeds the limit of {JOINT_LIMIT}"
            )));
        }
        let reg = reg as usize;
        let mut medians = Vec::with_capacity(reg);
        let mut scratch = Vec::new();
        qpe::for_each_tuple(n, g, |t| medians.push(qpe::median_index(t, &mut scratch)));
        Ok(Layout { d, n, g, reg, medians })
    }

    pub fn for_model(model: &SamplerModel) -> Result<Self> {
        Self::new(model.dim(), model.grid_size(), model.g)
    }

    pub fn len(&self) -> usize {
        self.d * self.reg * self.reg * 2
    }

    /// Registers-only block size for one system index.
    pub fn block(&self) -> usize {
        self.reg * self.reg * 2
    }

    pub fn index(&self, m: usize, e: usize, e2: usize, flag: usize) -> usize {
        ((m * self.reg + e) * self.reg + e2) * 2 + flag
    }

    /// System state in the eigenbasis with all registers and the flag zeroed.
    pub fn embed(&self, psi: &[C64]) -> Vec<C64> {
        let mut v = vec![ZERO; self.len()];
        for (m, &a) in psi.iter().enumerate() {
            v[self.index(m, 0, 0, 0)] = a;
        }
        v
    }

    /// Applies `op` to one base-`n` digit: indices `(o·n + t)·stride + i`.
    fn apply_digit(&self, block: &mut [C64], stride: usize, op: &Mat, tmp: &mut Vec<C64>) {
        let n = self.n;
        let outer = block.len() / (n * stride);
        tmp.resize(n, ZERO);
        for o in 0..outer {
            for i in 0..stride {
                let base = o * n * stride + i;
                for t in 0..n {
                    tmp[t] = block[base + t * stride];
                }
                for t in 0..n {
                    let mut acc = ZERO;
                    for s in 0..n {
                        acc += op[(t, s)] * tmp[s];
                    }
                    block[base + t * stride] = acc;
                }
            }
        }
    }

    /// Applies `ops[m]^{⊗g}` to register 2 of each system component `m`.
    pub fn apply_register2(&self, v: &mut [C64], ops: &[Mat]) {
        let mut tmp = Vec::new();
        let inner = self.reg * 2;
        for m in 0..self.d {
            let block = &mut v[m * self.block()..(m + 1) * self.block()];
            let mut stride = inner;
            for _ in 0..self.g {
                self.apply_digit(block, stride, &ops[m], &mut tmp);
                stride *= self.n;
            }
        }
    }

    /// Applies `ops[m]^{⊗g}` to register 3 of each system component `m`.
    pub fn apply_register3(&self, v: &mut [C64], ops: &[Mat]) {
        let mut tmp = Vec::new();
        let sub = self.reg * 2;
        for m in 0..self.d {
            for e in 0..self.reg {
                let start = m * self.block() + e * sub;
                let block = &mut v[start..start + sub];
                let mut stride = 2;
                for _ in 0..self.g {
                    self.apply_digit(block, stride, &ops[m], &mut tmp);
                    stride *= self.n;
                }
            }
        }
    }

    /// Applies a `d × d` matrix to the system index.
    pub fn apply_system(&self, v: &mut [C64], op: &Mat) {
        let stride = self.block();
        let mut tmp = vec![ZERO; self.d];
        for x in 0..stride {
            for m in 0..self.d {
                tmp[m] = v[m * stride + x];
            }
            for m in 0..self.d {
                let mut acc = ZERO;
                for j in 0..self.d {
                    acc += op[(m, j)] * tmp[j];
                }
                v[m * stride + x] = acc;
            }
        }
    }

    /// Applies the acceptance reflection `W` on the flag, controlled on the
    /// medians of both registers.
    pub fn apply_w(&self, v: &mut [C64], model: &SamplerModel, tau: f64) {
        for m in 0..self.d {
            for e in 0..self.reg {
                for e2 in 0..self.reg {
                    let f = model.accept[(self.medians[e], self.medians[e2])];
                    let w = super::w_block(tau, f);
                    let i0 = self.index(m, e, e2, 0);
                    let (a0, a1) = (v[i0], v[i0 + 1]);
                    v[i0] = a0 * w[0][0] + a1 * w[0][1];
                    v[i0 + 1] = a0 * w[1][0] + a1 * w[1][1];
                }
            }
        }
    }

    /// Zeroes every amplitude whose flag differs from `flag`.
    pub fn project_flag(&self, v: &mut [C64], flag: usize) {
        for (i, a) in v.iter_mut().enumerate() {
            if i % 2 != flag {
                *a = ZERO;
            }
        }
    }
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// The three measurement branches after the forward circuit, for one jump
/// (in the eigenbasis) and one QPE variant.
pub(crate) struct Branches {
    pub accept: Vec<C64>,
    pub alt_accept: Vec<C64>,
    pub reject: Vec<C64>,
}

pub(crate) struct Circuit<'a> {
    pub layout: &'a Layout,
    pub model: &'a SamplerModel,
    pub jump: Mat,
    pub flipped: bool,
    pub tau: f64,
}

impl Circuit<'_> {
    fn unitaries(&self) -> &[Mat] {
        &self.model.variants[self.flipped as usize].unitaries
    }

    fn adjoints(&self) -> Vec<Mat> {
        self.unitaries().iter().map(|u| u.adjoint()).collect()
    }

    /// `U = QPE₁₃ · C · QPE₁₂`.
    pub fn forward(&self, v: &mut [C64]) {
        self.layout.apply_register2(v, self.unitaries());
        self.layout.apply_system(v, &self.jump);
        self.layout.apply_register3(v, self.unitaries());
    }

    pub fn backward(&self, v: &mut [C64]) {
        let adj = self.adjoints();
        self.layout.apply_register3(v, &adj);
        self.layout.apply_system(v, &self.jump.adjoint());
        self.layout.apply_register2(v, &adj);
    }

    /// Branch vectors for a joint input (unnormalised; squared norms are the
    /// branch probabilities).
    pub fn branches(&self, input: &[C64]) -> Branches {
        let l = self.layout;
        let mut phi = input.to_vec();
        self.forward(&mut phi);
        l.apply_w(&mut phi, self.model, self.tau);
        let mut accept = phi.clone();
        l.project_flag(&mut accept, 1);
        let mut zero = phi;
        l.project_flag(&mut zero, 0);
        l.apply_w(&mut zero, self.model, self.tau);
        let mut alt_accept = zero.clone();
        l.project_flag(&mut alt_accept, 1);
        let mut reject = zero;
        l.project_flag(&mut reject, 0);
        self.backward(&mut reject);
        Branches { accept, alt_accept, reject }
    }
}
