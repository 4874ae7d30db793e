//! Two-point boundary problem for Fisher geodesics by single shooting.
//!
//! The unknown is the initial velocity `v₀` at `p₁`. Damped Newton drives
//! the endpoint of the integrated geodesic onto `p₂`, with a forward
//! difference Jacobian. The first guess is the Killing geodesic's chord:
//! the Killing logarithm in `Pos₁(n+1)` pulled back through `dΦ`.

use nalgebra::DVector;

use super::ode::geodesic_endpoint;
use crate::error::{check_dim, GeomError, Result};
use crate::killing::{dphi_inv, killing_log, phi};
use crate::manifold::{fisher_norm, tangent_dim, GaussianPoint, TangentVector};
use crate::sampling::Sampler;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    /// RK4 steps on `[0, 1]`.
    pub steps: usize,
    pub max_iterations: usize,
    /// Perturbed restarts after the Killing-chord attempt.
    pub restarts: usize,
    /// Jacobian step, relative to `1 + ‖v₀‖∞`.
    pub fd_step: f64,
    /// Endpoint tolerance, relative to `1 + ‖p₂‖∞` in coordinates.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            steps: 500,
            max_iterations: 100,
            restarts: 8,
            fd_step: 1e-6,
            tolerance: 1e-10,
            seed: 0,
        }
    }
}

/// Smallest damping factor tried in the line search.
const DAMPING_FLOOR: f64 = 1.0 / (1u32 << 20) as f64;

#[derive(Debug, Clone, PartialEq)]
pub struct BvpSolution {
    pub v0: TangentVector,
    /// `‖v₀‖`, the length of the geodesic on `[0, 1]`.
    pub distance: f64,
    /// Final endpoint gap in coordinates (max norm).
    pub residual: f64,
    /// Newton iterations over all attempts.
    pub iterations: usize,
    /// Restarts used before convergence.
    pub restarts: usize,
}

struct Shooter<'a> {
    p1: &'a GaussianPoint,
    target: DVector<f64>,
    opts: BvpOptions,
}

impl Shooter<'_> {
    fn residual(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let v = TangentVector::from_coords(self.p1.dim(), x.as_slice()).ok()?;
        let (end, _) = geodesic_endpoint(self.p1, &v, 1.0, self.opts.steps).ok()?;
        Some(end.coords() - &self.target)
    }

    /// One damped Newton run. Returns the final iterate, its residual norm
    /// and the iteration count.
    fn newton(&self, mut x: DVector<f64>, tol: f64) -> (DVector<f64>, f64, usize) {
        let Some(mut r) = self.residual(&x) else {
            return (x, f64::INFINITY, 0);
        };
        let d = x.len();
        for iter in 0..self.opts.max_iterations {
            let norm = r.amax();
            if norm <= tol {
                return (x, norm, iter);
            }
            let h = self.opts.fd_step * (1.0 + x.amax());
            let mut jac = nalgebra::DMatrix::zeros(d, d);
            for k in 0..d {
                let mut xk = x.clone();
                xk[k] += h;
                let Some(rk) = self.residual(&xk) else {
                    return (x, norm, iter);
                };
                jac.set_column(k, &((rk - &r) / h));
            }
            let Some(step) = jac.lu().solve(&(-&r)) else {
                return (x, norm, iter);
            };
            let mut lambda = 1.0;
            let mut accepted = None;
            while lambda >= DAMPING_FLOOR {
                let candidate = &x + &step * lambda;
                if let Some(rc) = self.residual(&candidate) {
                    if rc.amax() < norm {
                        accepted = Some((candidate, rc));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((xn, rn)) => {
                    x = xn;
                    r = rn;
                }
                None => return (x, norm, iter + 1),
            }
        }
        let norm = r.amax();
        (x, norm, self.opts.max_iterations)
    }
}

/// Initial velocity of the Killing geodesic from `p1` to `p2`, expressed as a
/// Fisher tangent vector at `p1`.
pub fn killing_chord(p1: &GaussianPoint, p2: &GaussianPoint) -> Result<TangentVector> {
    let y = killing_log(&phi(p1)?, &phi(p2)?)?;
    dphi_inv(p1, &y)
}

pub fn solve_geodesic_bvp(
    p1: &GaussianPoint,
    p2: &GaussianPoint,
    opts: &BvpOptions,
) -> Result<BvpSolution> {
    check_dim(p1.dim(), p2.dim())?;
    let n = p1.dim();
    if p1 == p2 {
        return Ok(BvpSolution {
            v0: TangentVector::zero(n),
            distance: 0.0,
            residual: 0.0,
            iterations: 0,
            restarts: 0,
        });
    }
    let target = p2.coords();
    let tol = opts.tolerance * (1.0 + target.amax());
    let shooter = Shooter {
        p1,
        target,
        opts: *opts,
    };
    let guess = killing_chord(p1, p2)?.coords();
    let spread = guess.amax().max(1e-3);
    let mut sampler = Sampler::new(opts.seed);
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    for attempt in 0..=opts.restarts {
        let start = if attempt == 0 {
            guess.clone()
        } else {
            let size = 0.5 * spread * attempt as f64 / opts.restarts as f64;
            &guess + sampler.gaussian_vector(tangent_dim(n)) * size
        };
        let (x, res, iters) = shooter.newton(start, tol);
        iterations += iters;
        best = best.min(res);
        if res <= tol {
            let v0 = TangentVector::from_coords(n, x.as_slice())?;
            let distance = fisher_norm(p1, &v0)?;
            return Ok(BvpSolution {
                v0,
                distance,
                residual: res,
                iterations,
                restarts: attempt,
            });
        }
    }
    Err(GeomError::NoConvergence {
        iterations,
        residual: best,
    })
}

/// Fisher distance by shooting with default options.
pub fn fisher_distance_bvp(p1: &GaussianPoint, p2: &GaussianPoint) -> Result<f64> {
    Ok(solve_geodesic_bvp(p1, p2, &BvpOptions::default())?.distance)
}
