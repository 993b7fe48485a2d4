use nalgebra::DVector;

use crate::error::{Error, Result};

/// Gaussian radial basis features `exp(−‖x − c_i‖² / (2σ_i²))`.
pub fn rbf_features(x: &DVector<f64>, centers: &[DVector<f64>], widths: &[f64]) -> Result<DVector<f64>> {
    if centers.is_empty() {
        return Err(Error::InvalidParameter("at least one center is required".into()));
    }
    if widths.len() != centers.len() {
        return Err(Error::Dimension(format!(
            "{} widths for {} centers",
            widths.len(),
            centers.len()
        )));
    }
    let mut out = DVector::zeros(centers.len());
    for (i, (c, &s)) in centers.iter().zip(widths).enumerate() {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("width {i} must be positive, got {s}")));
        }
        if c.len() != x.len() {
            return Err(Error::Dimension(format!("center {i} has dimension {}, x has {}", c.len(), x.len())));
        }
        out[i] = (-(x - c).norm_squared() / (2.0 * s * s)).exp();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        let c = vec![DVector::from_element(1, 1.0)];
        let at = rbf_features(&DVector::from_element(1, 1.0), &c, &[1.0]).unwrap();
        assert_eq!(at[0], 1.0);
        let off = rbf_features(&DVector::from_element(1, 0.0), &c, &[1.0]).unwrap();
        assert!((off[0] - 0.606_530_66).abs() < 1e-8);
        let sym = rbf_features(&DVector::from_element(1, 2.0), &c, &[1.0]).unwrap();
        assert_eq!(off[0], sym[0]);
        assert!(rbf_features(&DVector::zeros(1), &[], &[]).is_err());
    }
}
