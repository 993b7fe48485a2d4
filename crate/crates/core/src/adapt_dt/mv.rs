use crate::error::{Error, Result};
use crate::model::{bezout_solve, ArmaxPlant, Polynomial};
use crate::sim::{Disturbance, DisturbanceSpec, DiscreteSystem, Signal};

/// `F`, `G` with `C = AF + z^d G`, and the product `BF`.
pub fn mv_polynomials(plant: &ArmaxPlant) -> Result<(Polynomial, Polynomial, Polynomial)> {
    plant.validate()?;
    let (f, g) = bezout_solve(&plant.a_poly(), &plant.c_poly(), plant.d)?;
    let bf = &plant.b_poly() * &f;
    Ok((f, g, bf))
}

/// Minimum-variance control with known parameters:
/// `(BF)u_k = C y*_{k+d} − G y_k`, solved for `u_k`.
///
/// Histories are most recent first: `y_hist[0] = y_k`, `u_hist[0] = u_{k−1}`,
/// `y_star[0] = y*_{k+d}`. Missing entries read as zero.
pub fn min_variance_control_known(plant: &ArmaxPlant, y_hist: &[f64], u_hist: &[f64], y_star: &[f64]) -> Result<f64> {
    if !plant.is_minimum_phase() {
        return Err(Error::NonMinimumPhase(format!("zeros of B at {:?}", plant.b_zeros())));
    }
    let (_, g, bf) = mv_polynomials(plant)?;
    let at = |s: &[f64], i: usize| s.get(i).copied().unwrap_or(0.0);
    let c = plant.c_poly();
    let mut rhs: f64 = c.coeffs().iter().enumerate().map(|(i, ci)| ci * at(y_star, i)).sum();
    rhs -= g.coeffs().iter().enumerate().map(|(i, gi)| gi * at(y_hist, i)).sum::<f64>();
    rhs -= bf.coeffs().iter().enumerate().skip(1).map(|(j, bj)| bj * at(u_hist, j - 1)).sum::<f64>();
    Ok(rhs / bf.coeff(0))
}

/// Known-parameter minimum-variance loop, for reference runs.
#[derive(Debug, Clone)]
pub struct MinVarianceLoop {
    pub plant: ArmaxPlant,
    pub setpoint: Signal,
    noise: Disturbance,
    y: Vec<f64>,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl MinVarianceLoop {
    pub fn new(plant: ArmaxPlant, setpoint: Signal, noise: &DisturbanceSpec) -> Result<Self> {
        plant.validate()?;
        setpoint.validate()?;
        if !plant.is_minimum_phase() {
            return Err(Error::NonMinimumPhase(format!("zeros of B at {:?}", plant.b_zeros())));
        }
        Ok(MinVarianceLoop {
            plant,
            setpoint,
            noise: Disturbance::new(noise)?,
            y: Vec::new(),
            u: Vec::new(),
            w: Vec::new(),
        })
    }
}

impl DiscreteSystem for MinVarianceLoop {
    fn channel_names(&self) -> Vec<String> {
        ["y", "u", "y_star", "e", "w"].map(String::from).to_vec()
    }

    fn step(&mut self, k: usize) -> Result<Vec<f64>> {
        let w = self.noise.sample(k as f64);
        self.w.insert(0, w);
        let y = self.plant.output(&self.y, &self.u, &self.w);
        self.y.insert(0, y);
        let d = self.plant.d;
        let ys: Vec<f64> = (0..self.plant.c_poly().coeffs().len())
            .map(|i| {
                let j = (k + d) as f64 - i as f64;
                if j >= 0.0 {
                    self.setpoint.eval(j)
                } else {
                    0.0
                }
            })
            .collect();
        let u = min_variance_control_known(&self.plant, &self.y, &self.u, &ys)?;
        self.u.insert(0, u);
        let depth = self.plant.history_depth() + self.plant.d + self.plant.b.len() + 2;
        self.y.truncate(depth);
        self.u.truncate(depth);
        self.w.truncate(depth);
        let ysk = self.setpoint.eval(k as f64);
        Ok(vec![y, u, ysk, y - ysk, w])
    }
}
