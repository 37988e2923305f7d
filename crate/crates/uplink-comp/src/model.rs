//! Covariance assembly shared by the baseline and cooperation formulas.

use crate::channel::EffectiveChannel;
use crate::linalg::{block_diag, diag, identity, rows, weighted_gram, CMatrix};

/// Per-BS views of an effective channel with the receiver noise folded in.
#[derive(Debug, Clone)]
pub(crate) struct Rx {
    pub h: CMatrix,
    pub h_bs: Vec<CMatrix>,
    pub nb: usize,
    pub n_bs: usize,
    pub sigma2: f64,
    ebar2: Vec<Vec<f64>>,
}

impl Rx {
    pub fn new(ec: &EffectiveChannel, sigma2: f64) -> Self {
        let nb = ec.n_bs_antennas;
        let n_bs = ec.n_bs();
        Self {
            h: ec.h_eff.clone(),
            h_bs: (0..n_bs).map(|m| rows(&ec.h_eff, m * nb, nb)).collect(),
            nb,
            n_bs,
            sigma2,
            ebar2: (0..ec.n_rx()).map(|i| (0..ec.n_ue()).map(|k| ec.e_bar[(i, k)].powi(2)).collect()).collect(),
        }
    }

    fn nn_diag(&self, first_row: usize, n: usize, p_total: &[f64]) -> Vec<f64> {
        (first_row..first_row + n)
            .map(|i| self.sigma2 + self.ebar2[i].iter().zip(p_total).map(|(e, p)| e * p).sum::<f64>())
            .collect()
    }

    /// `σ²I + Φvv_m` at base station `m`.
    pub fn nn_bs(&self, m: usize, p_total: &[f64]) -> CMatrix {
        diag(&self.nn_diag(m * self.nb, self.nb, p_total))
    }

    /// `σ²I + Φvv` over all antennas.
    pub fn nn_all(&self, p_total: &[f64]) -> CMatrix {
        diag(&self.nn_diag(0, self.h.nrows(), p_total))
    }

    /// `H_m diag(p) H_mᴴ`.
    pub fn gram_bs(&self, m: usize, p: &[f64]) -> CMatrix {
        weighted_gram(&self.h_bs[m], p)
    }

    /// `H diag(p) Hᴴ` over all antennas.
    pub fn gram_all(&self, p: &[f64]) -> CMatrix {
        weighted_gram(&self.h, p)
    }

    /// Block-diagonal `q_m I` over all antennas; `None` for BSs without quantization noise.
    pub fn quant_noise(&self, q: &[Option<f64>]) -> CMatrix {
        let blocks: Vec<CMatrix> = q.iter().map(|qm| identity(self.nb) * crate::linalg::c(qm.unwrap_or(0.0), 0.0)).collect();
        let refs: Vec<&CMatrix> = blocks.iter().collect();
        block_diag(&refs)
    }
}

/// Power vector with only entry `k` kept.
pub(crate) fn only(p: &[f64], k: usize) -> Vec<f64> {
    p.iter().enumerate().map(|(j, &v)| if j == k { v } else { 0.0 }).collect()
}

/// Power vector restricted to the UEs in `set`.
pub(crate) fn restrict(p: &[f64], set: &[usize]) -> Vec<f64> {
    p.iter().enumerate().map(|(j, &v)| if set.contains(&j) { v } else { 0.0 }).collect()
}

/// Keeps rows/cols of the BSs in `keep`, in order.
pub(crate) fn select_bs(a: &CMatrix, keep: &[usize], nb: usize) -> CMatrix {
    let idx: Vec<usize> = keep.iter().flat_map(|&m| (m * nb)..(m * nb + nb)).collect();
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

/// Compressed description `W y_m + z` of BS `bs`'s antennas with independent
/// quantization noise `z ~ CN(0, diag(q))`.
#[derive(Debug, Clone)]
pub(crate) struct QuantizedView {
    pub bs: usize,
    pub w: CMatrix,
    pub q: Vec<f64>,
}

impl QuantizedView {
    /// Scaled-identity quantization of all antennas.
    pub fn identity(bs: usize, nb: usize, q: f64) -> Self {
        Self { bs, w: identity(nb), q: vec![q; nb] }
    }
}

/// Linear observation of the stacked receive signal: full-resolution rows
/// of some BSs plus quantized views of others.
#[derive(Debug, Clone)]
pub(crate) struct Observation {
    t: CMatrix,
    extra: Vec<f64>,
}

impl Observation {
    pub fn new(rx: &Rx, full: &[usize], views: &[&QuantizedView]) -> Self {
        let n_all = rx.h.nrows();
        let n_rows = full.len() * rx.nb + views.iter().map(|v| v.q.len()).sum::<usize>();
        let mut t = CMatrix::zeros(n_rows, n_all);
        let mut extra = Vec::with_capacity(n_rows);
        let mut r = 0;
        for &m in full {
            for a in 0..rx.nb {
                t[(r, m * rx.nb + a)] = crate::linalg::c(1.0, 0.0);
                extra.push(0.0);
                r += 1;
            }
        }
        for v in views {
            t.view_mut((r, v.bs * rx.nb), (v.q.len(), rx.nb)).copy_from(&v.w);
            extra.extend_from_slice(&v.q);
            r += v.q.len();
        }
        Self { t, extra }
    }

    /// `T A Tᴴ`.
    pub fn project(&self, a: &CMatrix) -> CMatrix {
        &self.t * a * self.t.adjoint()
    }

    /// `T A Tᴴ` plus the quantization noise.
    pub fn noise(&self, a: &CMatrix) -> CMatrix {
        self.project(a) + diag(&self.extra)
    }
}
