//! Dense complex-matrix helpers: Hermitian checks, PD-checked factorizations
//! and the log-determinant rate kernel shared by every region formula.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix used for channels and covariances.
pub type CMatrix = DMatrix<Complex64>;

/// Smallest eigenvalue a noise covariance must exceed to count as positive definite.
pub const PD_TOLERANCE: f64 = 1e-12;

/// Elementwise tolerance for Hermitian symmetry.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(n: usize, m: usize) -> CMatrix {
    CMatrix::zeros(n, m)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

/// Keeps the diagonal, zeroes everything else.
pub fn diag_part(a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| if i == j { a[(i, j)] } else { c(0.0, 0.0) })
}

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

pub fn is_hermitian(a: &CMatrix) -> bool {
    a.is_square()
        && (0..a.nrows()).all(|i| {
            (0..a.ncols()).all(|j| (a[(i, j)] - a[(j, i)].conj()).norm() <= HERMITIAN_TOLERANCE)
        })
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Ascending eigenvalues of the Hermitian part of `a`.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

/// Ascending eigenvalues of the Hermitian part of `a` with unit eigenvectors as columns.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, idx[k])]);
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigenvalues(a).first().copied().unwrap_or(f64::INFINITY)
}

/// Cholesky factor of a matrix that must be PD with smallest eigenvalue above
/// [`PD_TOLERANCE`]. The eigen solver only runs when the cheap bound
/// `λ_min ≥ 1/‖L⁻¹‖_F²` cannot certify the margin.
pub fn checked_cholesky(a: &CMatrix, name: &str) -> Result<Cholesky<Complex64, Dyn>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(Error::NonFinite(name.to_string()));
    }
    let h = hermitian_part(a);
    let not_pd = |m: &CMatrix| Error::NotPositiveDefinite {
        matrix: name.to_string(),
        min_eigenvalue: min_eigenvalue(m),
    };
    let chol = Cholesky::new(h.clone()).ok_or_else(|| not_pd(&h))?;
    let n = h.nrows();
    let l_inv = chol
        .l_dirty()
        .solve_lower_triangular(&identity(n))
        .ok_or_else(|| not_pd(&h))?;
    let frob2: f64 = l_inv.iter().map(|z| z.norm_sqr()).sum();
    if frob2.is_finite() && 1.0 / frob2 > PD_TOLERANCE {
        return Ok(chol);
    }
    if min_eigenvalue(&h) > PD_TOLERANCE {
        Ok(chol)
    } else {
        Err(not_pd(&h))
    }
}

fn log2_det_from_cholesky(chol: &Cholesky<Complex64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0 / std::f64::consts::LN_2
}

/// `log₂|A|` for a Hermitian PD matrix.
pub fn log2_det(a: &CMatrix, name: &str) -> Result<f64> {
    Ok(log2_det_from_cholesky(&checked_cholesky(a, name)?))
}

/// `log₂|I + N⁻¹S|` in bits per channel use.
///
/// `noise` must be Hermitian PD and `signal` Hermitian PSD of the same size.
/// Returns exactly 0 for a zero signal.
pub fn log2_det_rate(noise: &CMatrix, signal: &CMatrix) -> Result<f64> {
    log2_det_rate_named(noise, signal, "noise_cov")
}

/// As [`log2_det_rate`], naming the noise matrix in errors.
pub fn log2_det_rate_named(noise: &CMatrix, signal: &CMatrix, name: &str) -> Result<f64> {
    if noise.shape() != signal.shape() || !noise.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{} but signal is {}x{}",
            noise.nrows(),
            noise.ncols(),
            signal.nrows(),
            signal.ncols()
        )));
    }
    if signal.iter().all(|z| *z == c(0.0, 0.0)) {
        return Ok(0.0);
    }
    if !is_finite(signal) {
        return Err(Error::NonFinite("signal_cov".to_string()));
    }
    let chol = checked_cholesky(noise, name)?;
    // whiten: W = L⁻¹ S L⁻ᴴ, rate = log₂|I + W|
    let l = chol.l_dirty();
    let x = l
        .solve_lower_triangular(&hermitian_part(signal))
        .ok_or_else(|| Error::Numerical(format!("triangular solve failed for {name}")))?;
    let w = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or_else(|| Error::Numerical(format!("triangular solve failed for {name}")))?;
    let n = noise.nrows();
    let iw = hermitian_part(&(identity(n) + w));
    let rate = match Cholesky::new(iw.clone()) {
        Some(ch) => log2_det_from_cholesky(&ch),
        // I + W loses definiteness only through rounding on an indefinite signal
        None => hermitian_eigenvalues(&iw).iter().map(|v| v.max(f64::MIN_POSITIVE).log2()).sum(),
    };
    Ok(rate.max(0.0))
}

/// Covariance of block `a` conditioned on block `b`: `A − C B⁻¹ Cᴴ`, where
/// `cross_ab` is `C = E{y_a y_bᴴ}`.
pub fn conditional_covariance(joint_a: &CMatrix, cross_ab: &CMatrix, joint_b: &CMatrix) -> Result<CMatrix> {
    if !joint_a.is_square()
        || !joint_b.is_square()
        || cross_ab.nrows() != joint_a.nrows()
        || cross_ab.ncols() != joint_b.nrows()
    {
        return Err(Error::DimensionMismatch(format!(
            "conditional covariance blocks {}x{}, {}x{}, {}x{}",
            joint_a.nrows(),
            joint_a.ncols(),
            cross_ab.nrows(),
            cross_ab.ncols(),
            joint_b.nrows(),
            joint_b.ncols()
        )));
    }
    if joint_b.nrows() == 0 {
        return Ok(hermitian_part(joint_a));
    }
    let chol = checked_cholesky(joint_b, "joint_b")?;
    let x = chol
        .l_dirty()
        .solve_lower_triangular(&cross_ab.adjoint())
        .ok_or_else(|| Error::Numerical("triangular solve failed for joint_b".into()))?;
    Ok(hermitian_part(&(joint_a - x.adjoint() * x)))
}

/// Inverse of a Hermitian PD matrix.
pub fn hpd_inverse(a: &CMatrix, name: &str) -> Result<CMatrix> {
    Ok(checked_cholesky(a, name)?.inverse())
}

/// Rows `start..start+len` of `a`.
pub fn rows(a: &CMatrix, start: usize, len: usize) -> CMatrix {
    a.rows(start, len).into_owned()
}

/// Square block `[start, start+len)²` of `a`.
pub fn block(a: &CMatrix, start: usize, len: usize) -> CMatrix {
    a.view((start, start), (len, len)).into_owned()
}

/// Embeds square blocks along the diagonal.
pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(n, n);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
        off += b.nrows();
    }
    out
}

/// `Σ_k p_k h_k h_kᴴ` over the columns of `h`, i.e. `H diag(p) Hᴴ`.
pub fn weighted_gram(h: &CMatrix, p: &[f64]) -> CMatrix {
    let n = h.nrows();
    let mut out = zeros(n, n);
    for (k, &pk) in p.iter().enumerate() {
        if pk == 0.0 {
            continue;
        }
        let col = h.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += col[i] * col[j].conj() * pk;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn col(v: &[Complex64]) -> CMatrix {
        CMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn zero_signal_is_exactly_zero() {
        assert_eq!(log2_det_rate(&identity(2), &zeros(2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn scalar_one_bit() {
        let r = log2_det_rate(&diag(&[1.0]), &diag(&[1.0])).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rank_one_against_cofactor_expansion() {
        let h = col(&[c(1.0, 0.0), c(1.0, 0.0)]);
        let s = &h * h.adjoint();
        let r = log2_det_rate(&diag(&[0.1, 0.1]), &s).unwrap();
        // I + 10·hhᴴ = [[11,10],[10,11]] → det = 121 − 100
        let det = 11.0 * 11.0 - 10.0 * 10.0;
        assert_relative_eq!(r, f64::log2(det), epsilon = 1e-12);
        assert_relative_eq!(r, 21f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let e = log2_det_rate(&identity(2), &identity(3)).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch(_)));
    }

    #[test]
    fn singular_noise_is_named_numerical_error() {
        let e = log2_det_rate_named(&diag(&[1.0, 0.0]), &identity(2), "phi_ii").unwrap_err();
        match e {
            Error::NotPositiveDefinite { matrix, .. } => assert_eq!(matrix, "phi_ii"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conditional_covariance_scalar() {
        let r = conditional_covariance(&diag(&[1.0]), &diag(&[0.9]), &diag(&[1.0])).unwrap();
        assert_relative_eq!(r[(0, 0)].re, 0.19, epsilon = 1e-14);
    }

    #[test]
    fn conditional_covariance_independent_blocks() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.3, 0.1), c(0.3, -0.1), c(1.0, 0.0)]);
        let r = conditional_covariance(&a, &zeros(2, 2), &identity(2)).unwrap();
        assert!((r - a).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn weighted_gram_matches_product() {
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.5), c(0.2, -0.1), c(-0.3, 0.0), c(0.7, 0.7)]);
        let p = [0.4, 1.3];
        let direct = &h * diag(&p) * h.adjoint();
        assert!((weighted_gram(&h, &p) - direct).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn block_diag_places_blocks() {
        let a = diag(&[1.0]);
        let b = diag(&[2.0, 3.0]);
        let d = block_diag(&[&a, &b]);
        assert_eq!(d, diag(&[1.0, 2.0, 3.0]));
    }
}
