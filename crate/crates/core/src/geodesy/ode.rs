//! The Fisher geodesic equation
//! `Σ'' = Σ'Σ⁻¹Σ' − μ'μ'ᵀ`, `μ'' = Σ'Σ⁻¹μ'`, integrated with classical RK4.

use nalgebra::{DMatrix, DVector};

use super::{uniform_grid, SampledCurve};
use crate::error::{check_dim, GeomError, Result};
use crate::manifold::{connection_coeff, GaussianPoint, TangentVector};
use crate::spd::{SpdMatrix, SymMatrix, PIVOT_FLOOR};

pub const DEFAULT_STEPS_PER_UNIT: usize = 1000;
pub const MIN_STEPS: usize = 16;

/// `∇_{c'}c' = c'' + Γ(c', c')`; zero exactly along Fisher geodesics.
pub fn covariant_accel(
    point: &GaussianPoint,
    vel: &TangentVector,
    acc: &TangentVector,
) -> Result<TangentVector> {
    check_dim(point.dim(), acc.dim())?;
    Ok(acc.add(&connection_coeff(point, vel, vel)?))
}

#[derive(Clone)]
struct State {
    sigma: DMatrix<f64>,
    mu: DVector<f64>,
    dsigma: DMatrix<f64>,
    dmu: DVector<f64>,
}

impl State {
    fn axpy(&self, h: f64, k: &State) -> State {
        State {
            sigma: &self.sigma + &k.sigma * h,
            mu: &self.mu + &k.mu * h,
            dsigma: &self.dsigma + &k.dsigma * h,
            dmu: &self.dmu + &k.dmu * h,
        }
    }

    fn symmetrize(&mut self) {
        self.sigma = (&self.sigma + self.sigma.transpose()) * 0.5;
        self.dsigma = (&self.dsigma + self.dsigma.transpose()) * 0.5;
    }

    /// Time derivative of the first-order system, or `None` when Σ is not
    /// safely positive definite.
    fn rate(&self) -> Option<State> {
        let chol = self.sigma.clone().cholesky()?;
        let l = chol.l_dirty();
        if (0..l.nrows()).any(|i| l[(i, i)] * l[(i, i)] <= PIVOT_FLOOR * self.sigma[(i, i)]) {
            return None;
        }
        let w = chol.solve(&self.dsigma);
        let u = chol.solve(&self.dmu);
        let acc = &self.dsigma * w - &self.dmu * self.dmu.transpose();
        Some(State {
            sigma: self.dsigma.clone(),
            mu: self.dmu.clone(),
            dsigma: (&acc + acc.transpose()) * 0.5,
            dmu: &self.dsigma * u,
        })
    }

    fn rk4(&self, h: f64) -> Option<State> {
        let k1 = self.rate()?;
        let k2 = self.axpy(0.5 * h, &k1).rate()?;
        let k3 = self.axpy(0.5 * h, &k2).rate()?;
        let k4 = self.axpy(h, &k3).rate()?;
        let mut next = self.axpy(h / 6.0, &k1);
        next = next.axpy(h / 3.0, &k2);
        next = next.axpy(h / 3.0, &k3);
        next = next.axpy(h / 6.0, &k4);
        next.symmetrize();
        Some(next)
    }

    fn split(&self) -> Result<(GaussianPoint, TangentVector)> {
        let sigma = SpdMatrix::new(SymMatrix::symmetrize(self.sigma.clone()))?;
        let p = GaussianPoint::new(sigma, self.mu.clone())?;
        let v = TangentVector::new(SymMatrix::symmetrize(self.dsigma.clone()), self.dmu.clone())?;
        Ok((p, v))
    }
}

fn check_args(p0: &GaussianPoint, v0: &TangentVector, t_end: f64, steps: usize) -> Result<()> {
    check_dim(p0.dim(), v0.dim())?;
    if steps < MIN_STEPS {
        return Err(GeomError::Domain(format!(
            "need at least {MIN_STEPS} steps, got {steps}"
        )));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(GeomError::Domain(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if !v0.coords().iter().all(|x| x.is_finite()) {
        return Err(GeomError::Domain("initial velocity is not finite".into()));
    }
    Ok(())
}

fn start(p0: &GaussianPoint, v0: &TangentVector) -> State {
    State {
        sigma: p0.sigma().as_matrix().clone(),
        mu: p0.mu().clone(),
        dsigma: v0.x().as_matrix().clone(),
        dmu: v0.v().clone(),
    }
}

fn lost_definiteness(t: f64) -> GeomError {
    GeomError::SingularInput(format!("covariance lost definiteness near t = {t}"))
}

/// Integrates the geodesic through `(p0, v0)` on `[0, t_end]` with `steps`
/// fixed RK4 steps, returning every node with its velocity.
pub fn fisher_geodesic_ode(
    p0: &GaussianPoint,
    v0: &TangentVector,
    t_end: f64,
    steps: usize,
) -> Result<SampledCurve> {
    check_args(p0, v0, t_end, steps)?;
    let h = t_end / steps as f64;
    let params = uniform_grid(0.0, t_end, steps);
    let mut state = start(p0, v0);
    let mut points = Vec::with_capacity(steps + 1);
    let mut vels = Vec::with_capacity(steps + 1);
    for (k, &t) in params.iter().enumerate() {
        let (p, v) = state.split().map_err(|_| lost_definiteness(t))?;
        points.push(p);
        vels.push(v);
        if k < steps {
            state = state.rk4(h).ok_or_else(|| lost_definiteness(t))?;
        }
    }
    SampledCurve::new(params, points, Some(vels))
}

/// Endpoint and final velocity only; used by the shooting solver.
pub fn geodesic_endpoint(
    p0: &GaussianPoint,
    v0: &TangentVector,
    t_end: f64,
    steps: usize,
) -> Result<(GaussianPoint, TangentVector)> {
    check_args(p0, v0, t_end, steps)?;
    let h = t_end / steps as f64;
    let mut state = start(p0, v0);
    for k in 0..steps {
        state = state
            .rk4(h)
            .ok_or_else(|| lost_definiteness(k as f64 * h))?;
    }
    state.split().map_err(|_| lost_definiteness(t_end))
}
