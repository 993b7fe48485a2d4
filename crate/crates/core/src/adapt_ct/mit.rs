use crate::error::{Error, Result};

/// MIT rule `θ̇ = −k·e·∂e/∂θ`.
pub fn mit_rule_rhs(e: f64, grad_e: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("MIT gain must be positive, got {k}")));
    }
    Ok(-k * e * grad_e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution() {
        assert_eq!(mit_rule_rhs(0.0, 5.0, 1.0).unwrap(), 0.0);
        assert_eq!(mit_rule_rhs(1.0, 2.0, 1.0).unwrap(), -2.0);
        assert!(mit_rule_rhs(1.0, 2.0, -1.0).is_err());
    }
}
