//! Small dense linear-algebra helpers shared by the analysis and design code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Eigenvalue margin used for Hurwitz tests.
pub const HURWITZ_MARGIN: f64 = 1e-9;

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Dimension("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    if a.nrows() == 1 {
        return vec![Complex64::new(a[(0, 0)], 0.0)];
    }
    a.complex_eigenvalues().iter().copied().collect()
}

pub fn max_real_eigenvalue(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    a.is_square() && max_real_eigenvalue(a) < -HURWITZ_MARGIN
}

pub fn require_hurwitz(a: &DMatrix<f64>) -> Result<()> {
    require_square(a, "A")?;
    let max_real = max_real_eigenvalue(a);
    if max_real < -HURWITZ_MARGIN {
        Ok(())
    } else {
        Err(Error::NotHurwitz { max_real })
    }
}

pub fn require_square(a: &DMatrix<f64>, name: &str) -> Result<()> {
    if a.is_square() && a.nrows() > 0 {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{name} must be square and non-empty, got {}x{}",
            a.nrows(),
            a.ncols()
        )))
    }
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Sorted (ascending) eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)[0]
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    *symmetric_eigenvalues(m).last().expect("non-empty matrix")
}

/// Requires `m` to be symmetric (to 1e-9 relative) with a strictly positive
/// smallest eigenvalue.
pub fn require_spd(m: &DMatrix<f64>, name: &str) -> Result<()> {
    require_square(m, name)?;
    if !is_symmetric(m, 1e-9) {
        return Err(Error::NotPositiveDefinite(format!("{name} is not symmetric")));
    }
    let lmin = min_eigenvalue(m);
    if lmin > 0.0 {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite(format!(
            "{name} has smallest eigenvalue {lmin:.3e}"
        )))
    }
}

pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// `[b, Ab, ..., A^{n-1} b]`.
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = a * &block;
    }
    out
}

pub fn is_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    rank(&controllability_matrix(a, b), 1e-10) == a.nrows()
}

pub fn is_observable(a: &DMatrix<f64>, c: &DMatrix<f64>) -> bool {
    // c holds output directions as columns (y = c^T x).
    is_controllable(&a.transpose(), c)
}

/// Characteristic polynomial and adjugate expansion via Faddeev–LeVerrier.
///
/// Returns `(coeffs, terms)` where `coeffs` holds `det(sI - A)` with the
/// constant term first (monic, length n+1) and `adj(sI - A) = Σ_k terms[k] s^(n-1-k)`.
pub fn char_poly_adjugate(a: &DMatrix<f64>) -> (Vec<f64>, Vec<DMatrix<f64>>) {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    // descending coefficients c[0] = 1, c[k] multiplies s^(n-k)
    let mut desc = vec![1.0];
    let mut terms = Vec::with_capacity(n);
    let mut m = ident.clone();
    for k in 1..=n {
        terms.push(m.clone());
        let am = a * &m;
        let ck = -am.trace() / k as f64;
        desc.push(ck);
        m = am + &ident * ck;
    }
    desc.reverse();
    (desc, terms)
}

/// Solves the Kronecker form of `A^T P + P A = -Q`.
pub fn solve_lyapunov_kron(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    // vec(A^T P) = (I ⊗ A^T) vec(P); vec(P A) = (A^T ⊗ I) vec(P)
    let k = ident.kronecker(&at) + at.kronecker(&ident);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let lu = k.clone().lu();
    let mut x = lu.solve(&rhs)?;
    // one round of iterative refinement
    let r = &rhs - &k * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    Some(symmetrize(&DMatrix::from_column_slice(n, n, x.as_slice())))
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_poly_of_companion() {
        // s^2 + 3 s + 2
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let (c, terms) = char_poly_adjugate(&a);
        assert_eq!(c.len(), 3);
        assert!((c[0] - 2.0).abs() < 1e-14 && (c[1] - 3.0).abs() < 1e-14 && c[2] == 1.0);
        // adj(sI - A) at s = 1 times (I - A) equals det * I
        let s = 1.0;
        let adj = &terms[0] * s + &terms[1];
        let prod = adj * (DMatrix::identity(2, 2) * s - &a);
        let det = c[0] + c[1] * s + c[2] * s * s;
        assert!((prod - DMatrix::identity(2, 2) * det).norm() < 1e-12);
    }

    #[test]
    fn hurwitz_checks() {
        assert!(is_hurwitz(&DMatrix::from_element(1, 1, -1.0)));
        assert!(!is_hurwitz(&DMatrix::from_element(1, 1, 0.0)));
        let osc = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(!is_hurwitz(&osc));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(5, 5), 1.0);
    }
}
