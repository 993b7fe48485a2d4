use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde_json::{json, Value};

use super::spr::spr_check;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::TransferFunction;

/// Solution of `AᵀP + PA = -Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCertificate {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// Frobenius norm of `AᵀP + PA + Q`.
    pub residual: f64,
}

impl LyapunovCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "P": linalg::matrix_to_rows(&self.p),
            "Q": linalg::matrix_to_rows(&self.q),
            "residual": self.residual,
        })
    }
}

pub fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    (a.transpose() * p + p * a + q).norm()
}

/// Solves the Lyapunov equation for a Hurwitz `A_m` and SPD `Q`.
pub fn lyapunov_solve(am: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<LyapunovCertificate> {
    linalg::require_square(am, "A_m")?;
    linalg::require_square(q, "Q")?;
    if q.nrows() != am.nrows() {
        return Err(Error::Dimension(format!(
            "Q is {}x{} but A_m is {}x{}",
            q.nrows(),
            q.ncols(),
            am.nrows(),
            am.ncols()
        )));
    }
    linalg::require_spd(q, "Q")?;
    linalg::require_hurwitz(am)?;
    let p = linalg::solve_lyapunov_kron(am, q)
        .ok_or_else(|| Error::Infeasible("Lyapunov operator is singular".into()))?;
    linalg::require_spd(&p, "P")?;
    let residual = lyapunov_residual(am, &p, q);
    Ok(LyapunovCertificate {
        p,
        q: q.clone(),
        residual,
    })
}

/// `k0 · vmax` with `k0 = 2 λmax(P) / λmin(Q)`.
pub fn robustness_margin(p: &DMatrix<f64>, q: &DMatrix<f64>, vmax: f64) -> Result<f64> {
    linalg::require_spd(p, "P")?;
    linalg::require_spd(q, "Q")?;
    if !(vmax >= 0.0) || !vmax.is_finite() {
        return Err(Error::InvalidParameter(format!("vmax must be a finite nonnegative number, got {vmax}")));
    }
    Ok(2.0 * linalg::max_eigenvalue(p) / linalg::min_eigenvalue(q) * vmax)
}

/// Affine parameterization `P(y) = P0 + Σ y_i N_i` of the symmetric matrices
/// with `P b = c`.
struct ConstrainedSymmetric {
    p0: DMatrix<f64>,
    basis: Vec<DMatrix<f64>>,
}

fn sym_from_vec(n: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = v[k];
            m[(j, i)] = v[k];
            k += 1;
        }
    }
    m
}

fn constrained_symmetric(b: &DVector<f64>, c: &DVector<f64>) -> Option<ConstrainedSymmetric> {
    let n = b.len();
    let m = n * (n + 1) / 2;
    // Row i of the constraint: Σ_j P_ij b_j = c_i.
    let mut e = DMatrix::zeros(n, m);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            e[(i, k)] += b[j];
            if i != j {
                e[(j, k)] += b[i];
            }
            k += 1;
        }
    }
    let svd = e.clone().svd(true, true);
    let x0 = svd.solve(c, 1e-14).ok()?;
    if (&e * &x0 - c).norm() > 1e-10 * c.norm().max(1.0) {
        return None;
    }
    let v_t = svd.v_t?;
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-12 * smax).count();
    // Full SVD of a wide matrix only returns min(n, m) rows; complete the basis
    // through the orthogonal complement of the row space.
    let row_space = v_t.rows(0, rank).transpose();
    let proj = DMatrix::<f64>::identity(m, m) - &row_space * row_space.transpose();
    let sv = proj.svd(true, false);
    let u = sv.u?;
    let basis = (0..m)
        .filter(|&i| sv.singular_values[i] > 0.5)
        .map(|i| sym_from_vec(n, u.column(i).as_slice()))
        .collect();
    Some(ConstrainedSymmetric {
        p0: sym_from_vec(n, x0.as_slice()),
        basis,
    })
}

/// Smoothed minimum `-μ log Σ exp(-λ_j/μ)` of the eigenvalues of the
/// block-diagonal `diag(P, -(AᵀP+PA))` and its gradient in `y`.
fn soft_min(
    a: &DMatrix<f64>,
    cs: &ConstrainedSymmetric,
    y: &DVector<f64>,
    mu: f64,
) -> (f64, f64, DVector<f64>) {
    let n = a.nrows();
    let p = param(cs, y);
    let l = -(a.transpose() * &p + &p * a);
    let ep = SymmetricEigen::new(p);
    let el = SymmetricEigen::new(linalg::symmetrize(&l));
    let lams: Vec<f64> = ep.eigenvalues.iter().chain(el.eigenvalues.iter()).copied().collect();
    let hard = lams.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = lams.iter().map(|l| (-(l - hard) / mu).exp()).collect();
    let z: f64 = w.iter().sum();
    let value = hard - mu * z.ln();
    let mut grad = DVector::zeros(cs.basis.len());
    for (i, ni) in cs.basis.iter().enumerate() {
        let li = -(a.transpose() * ni + ni * a);
        let mut g = 0.0;
        for j in 0..n {
            let v = ep.eigenvectors.column(j);
            g += w[j] * (v.transpose() * ni * v)[(0, 0)];
            let v = el.eigenvectors.column(j);
            g += w[n + j] * (v.transpose() * &li * v)[(0, 0)];
        }
        grad[i] = g / z;
    }
    (value, hard, grad)
}

fn param(cs: &ConstrainedSymmetric, y: &DVector<f64>) -> DMatrix<f64> {
    cs.basis
        .iter()
        .zip(y.iter())
        .fold(cs.p0.clone(), |acc, (ni, yi)| acc + ni * *yi)
}

/// Searches for a symmetric `P` with `P b = c`, `P > 0` and `AᵀP + PA < 0`
/// by maximizing the smallest eigenvalue of both constraints. Returns the best
/// `P` when the worst eigenvalue margin is positive.
pub(crate) fn kyl_search(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Option<DMatrix<f64>> {
    let cs = constrained_symmetric(b, c)?;
    let scale = cs.p0.norm().max(1e-12);
    let mut y = DVector::zeros(cs.basis.len());
    let (_, mut best_hard, _) = soft_min(a, &cs, &y, scale);
    let mut best_y = y.clone();
    if !cs.basis.is_empty() {
        for &mu_rel in &[1.0, 0.1, 1e-2, 1e-3, 1e-4] {
            let mu = mu_rel * scale;
            let mut step = scale;
            for _ in 0..400 {
                let (f, hard, g) = soft_min(a, &cs, &y, mu);
                if hard > best_hard {
                    best_hard = hard;
                    best_y = y.clone();
                }
                let gn = g.norm();
                if gn < 1e-14 * scale {
                    break;
                }
                let mut accepted = false;
                while step > 1e-16 * scale {
                    let cand = &y + &g * (step / gn);
                    let (fc, _, _) = soft_min(a, &cs, &cand, mu);
                    if fc > f + 1e-4 * step * gn {
                        y = cand;
                        step *= 2.0;
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            let (_, hard, _) = soft_min(a, &cs, &y, mu);
            if hard > best_hard {
                best_hard = hard;
                best_y = y.clone();
            }
        }
    }
    if best_hard > 1e-10 * scale {
        Some(linalg::symmetrize(&param(&cs, &best_y)))
    } else {
        None
    }
}

/// Kalman–Yakubovich solve: symmetric `P > 0` with `AᵀP + PA < 0` and
/// `P b = c` for a minimal realization of an SPR transfer function.
pub fn kyl_solve(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<DMatrix<f64>> {
    linalg::require_square(a, "A")?;
    let n = a.nrows();
    if b.len() != n || c.len() != n {
        return Err(Error::Dimension(format!(
            "A is {n}x{n} but B has {} and C has {} entries",
            b.len(),
            c.len()
        )));
    }
    let bm = DMatrix::from_column_slice(n, 1, b.as_slice());
    let cm = DMatrix::from_column_slice(n, 1, c.as_slice());
    if !linalg::is_controllable(a, &bm) {
        return Err(Error::NonMinimal("(A, B) is not controllable".into()));
    }
    if !linalg::is_observable(a, &cm) {
        return Err(Error::NonMinimal("(A, C) is not observable".into()));
    }
    let w = TransferFunction::from_state_space(a, b, c)?;
    if !spr_check(&w)?.is_spr {
        return Err(Error::Infeasible("transfer function is not strictly positive real".into()));
    }
    kyl_search(a, b, c)
        .ok_or_else(|| Error::Infeasible("no certificate found for an SPR transfer function".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        let v: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        linalg::matrix_from_rows(&v).unwrap()
    }

    #[test]
    fn scalar_lyapunov() {
        let c = lyapunov_solve(&m(&[&[-1.0]]), &m(&[&[2.0]])).unwrap();
        assert!((c.p[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(matches!(lyapunov_solve(&m(&[&[1.0]]), &m(&[&[1.0]])), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn diagonal_lyapunov() {
        let c = lyapunov_solve(&m(&[&[-1.0, 0.0], &[0.0, -2.0]]), &DMatrix::identity(2, 2)).unwrap();
        assert!((c.p[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((c.p[(1, 1)] - 0.25).abs() < 1e-14);
        assert!(c.p[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn scalar_kyl() {
        let one = DVector::from_element(1, 1.0);
        let p = kyl_solve(&m(&[&[-1.0]]), &one, &one).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
        let p = kyl_solve(&m(&[&[-2.0]]), &DVector::from_element(1, 2.0), &one).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn double_pole_is_infeasible() {
        let w = TransferFunction::from_coeffs(&[1.0], &[1.0, 2.0, 1.0]).unwrap();
        let ss = w.realize().unwrap();
        let r = kyl_solve(&ss.a, &ss.b.column(0).into_owned(), &ss.c.row(0).transpose());
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn margin_examples() {
        let p = m(&[&[1.0, 0.0], &[0.0, 4.0]]);
        assert!((robustness_margin(&p, &DMatrix::identity(2, 2), 1.0).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(robustness_margin(&p, &DMatrix::identity(2, 2), 0.0).unwrap(), 0.0);
    }
}
