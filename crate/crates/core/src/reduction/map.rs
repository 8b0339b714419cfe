//! Time-1 maps of the reduced flow and pseudo-trajectory defects.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, LabError, Result};
use crate::reduction::ReducedSystem;

/// Reduced states beyond this norm abort the map.
const OVERFLOW_GUARD: f64 = 1e6;

/// `T(v)`: the reduced flow over unit time by fixed-step RK4.
#[derive(Debug, Clone)]
pub struct DiscreteMap {
    sys: ReducedSystem,
    steps: usize,
}

/// Build the time-1 map of a reduced system (RK4 with the configured inner
/// step, rounded so that an integer number of steps covers unit time).
pub fn reduced_map(sys: &ReducedSystem) -> DiscreteMap {
    let steps = (1.0 / sys.cfg.inner_dt).round().max(1.0) as usize;
    DiscreteMap {
        sys: sys.clone(),
        steps,
    }
}

impl DiscreteMap {
    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    pub fn system(&self) -> &ReducedSystem {
        &self.sys
    }

    pub fn inner_dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    fn guard(v: &DVector<f64>) -> Result<()> {
        if !(v.norm() <= OVERFLOW_GUARD) {
            return Err(LabError::Divergence(format!(
                "reduced state left the ball of radius {OVERFLOW_GUARD:e}"
            )));
        }
        Ok(())
    }

    /// `T(v)`.
    pub fn eval(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(self.dim(), v.len())?;
        let h = self.inner_dt();
        let mut v = v.clone();
        let mut warm: Option<DVector<f64>> = None;
        for _ in 0..self.steps {
            let (k1, w1) = self.sys.rhs(&v, warm.as_ref())?;
            let (k2, w2) = self.sys.rhs(&(&v + &k1 * (0.5 * h)), Some(&w1))?;
            let (k3, w3) = self.sys.rhs(&(&v + &k2 * (0.5 * h)), Some(&w2))?;
            let (k4, w4) = self.sys.rhs(&(&v + &k3 * h), Some(&w3))?;
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            Self::guard(&v)?;
            warm = Some(w4);
        }
        Ok(v)
    }

    /// `T(v)` and `DT(v)` from the variational equation `Y′ = DF(v) Y`,
    /// integrated with the same RK4 stages.
    pub fn eval_with_jacobian(&self, v: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        check_len(self.dim(), v.len())?;
        let h = self.inner_dt();
        let m = self.dim();
        let mut v = v.clone();
        let mut y = DMatrix::identity(m, m);
        let mut warm: Option<(DVector<f64>, DMatrix<f64>)> = None;
        for _ in 0..self.steps {
            let (w0, x0) = match &warm {
                Some((w, x)) => (Some(w), Some(x)),
                None => (None, None),
            };
            let (k1, j1, w1, x1) = self.sys.rhs_jacobian_warm(&v, w0, x0)?;
            let y1 = &j1 * &y;
            let (k2, j2, w2, x2) =
                self.sys
                    .rhs_jacobian_warm(&(&v + &k1 * (0.5 * h)), Some(&w1), Some(&x1))?;
            let y2 = &j2 * (&y + &y1 * (0.5 * h));
            let (k3, j3, w3, x3) =
                self.sys
                    .rhs_jacobian_warm(&(&v + &k2 * (0.5 * h)), Some(&w2), Some(&x2))?;
            let y3 = &j3 * (&y + &y2 * (0.5 * h));
            let (k4, j4, w4, x4) = self
                .sys
                .rhs_jacobian_warm(&(&v + &k3 * h), Some(&w3), Some(&x3))?;
            let y4 = &j4 * (&y + &y3 * h);
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            y += (y1 + y2 * 2.0 + y3 * 2.0 + y4) * (h / 6.0);
            Self::guard(&v)?;
            warm = Some((w4, x4));
        }
        Ok((v, y))
    }

    /// Orbit `v, T(v), …` of `len` points.
    pub fn orbit(&self, v0: &DVector<f64>, len: usize) -> Result<Vec<DVector<f64>>> {
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return Ok(out);
        }
        out.push(v0.clone());
        for k in 1..len {
            let next = self.eval(&out[k - 1])?;
            out.push(next);
        }
        Ok(out)
    }

    /// Largest spectral norm of `DT` over the given points.
    pub fn lipschitz_estimate(&self, points: &[DVector<f64>]) -> Result<f64> {
        let mut best: f64 = 0.0;
        for p in points {
            let (_, j) = self.eval_with_jacobian(p)?;
            best = best.max(j.svd(false, false).singular_values.max());
        }
        Ok(best)
    }
}

/// `max_k |T(x_k) − x_{k+1}|`.
pub fn pseudo_trajectory_defect(seq: &[DVector<f64>], map: &DiscreteMap) -> Result<f64> {
    if seq.len() < 2 {
        return Err(LabError::InvalidArgument(
            "a pseudo-trajectory needs at least two points".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for w in seq.windows(2) {
        worst = worst.max((map.eval(&w[0])? - &w[1]).norm());
    }
    Ok(worst)
}
