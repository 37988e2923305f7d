//! Dense simplex for the tiny rate-split programs
//! `max cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b ≥ 0`, so the origin is feasible.

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

/// Maximizer and optimal value. Bland's rule keeps pivoting finite and the
/// result deterministic.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch("linear program shapes disagree".into()));
    }
    if b.iter().any(|v| !(*v >= -EPS)) {
        return Err(Error::Numerical("linear program needs nonnegative right-hand sides".into()));
    }
    let width = n + m + 1;
    // rows 0..m constraints, row m objective (stored as -c)
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i].max(0.0);
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    for _ in 0..10_000 {
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -EPS) else {
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i][width - 1];
                }
            }
            return Ok((x, t[m][width - 1]));
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                let better = ratio < best_ratio - EPS
                    || ((ratio - best_ratio).abs() <= EPS && leave.is_some_and(|l| basis[i] < basis[l]));
                if leave.is_none() || better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Err(Error::Numerical("linear program is unbounded".into()));
        };
        let pivot = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= pivot;
        }
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r {
                let f = row[enter];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&prow) {
                        *v -= f * p;
                    }
                }
            }
        }
        basis[r] = enter;
    }
    Err(Error::Numerical("simplex iteration limit reached".into()))
}
