use nalgebra::DVector;

use crate::error::{Error, Result};

fn finite(v: &DVector<f64>, t: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("derivative at t = {t}")))
    }
}

/// Classical fourth-order Runge–Kutta step of `ẋ = f(t, x)`.
pub fn rk4_step<F>(mut rhs: F, x: &DVector<f64>, t: f64, h: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let k1 = rhs(t, x)?;
    finite(&k1, t)?;
    let k2 = rhs(t + 0.5 * h, &(x + &k1 * (0.5 * h)))?;
    finite(&k2, t + 0.5 * h)?;
    let k3 = rhs(t + 0.5 * h, &(x + &k2 * (0.5 * h)))?;
    finite(&k3, t + 0.5 * h)?;
    let k4 = rhs(t + h, &(x + &k3 * h))?;
    finite(&k4, t + h)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Integrates from `t0` over `steps` steps of size `h`.
pub fn rk4_integrate<F>(mut rhs: F, x0: &DVector<f64>, t0: f64, h: f64, steps: usize) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let mut x = x0.clone();
    for k in 0..steps {
        x = rk4_step(&mut rhs, &x, t0 + k as f64 * h, h)?;
    }
    Ok(x)
}
