//! Geodesics and distances inside a leaf of fixed mean.
//!
//! A leaf is totally geodesic and isometric to `Pos(n)` with
//! `½ tr(Σ⁻¹XΣ⁻¹Y)`. With `A = √Σ₀` and `A⁻¹Σ₁A⁻¹ = T Δ Tᵀ` the geodesic
//! is `γ(t) = A T exp(tΛ) Tᵀ A`, `Λ = log Δ`, and its length is
//! `sqrt(½ Σ log² λᵢ)` over the eigenvalues of `Σ₀⁻¹Σ₁`.

use nalgebra::{DMatrix, DVector};

use super::quadrature::Quadrature;
use super::{uniform_grid, CurveEvaluator, CurveJet, SampledCurve};
use crate::error::{check_dim, GeomError, Result};
use crate::killing::UnimodularSpd;
use crate::manifold::{fisher_norm, GaussianPoint, TangentVector};
use crate::spd::{gen_eigvals, spd_sqrt, SpdMatrix, SymMatrix};

const MEAN_TOL: f64 = 1e-12;

/// The leaf geodesic from `(Σ₀, μ)` at `t = 0` to `(Σ₁, μ)` at `t = 1`.
#[derive(Debug, Clone)]
pub struct LeafGeodesic {
    // A T
    frame: DMatrix<f64>,
    log_eigs: DVector<f64>,
    mu: DVector<f64>,
}

impl LeafGeodesic {
    pub fn new(sigma0: &SpdMatrix, sigma1: &SpdMatrix, mu: DVector<f64>) -> Result<Self> {
        check_dim(sigma0.dim(), sigma1.dim())?;
        check_dim(sigma0.dim(), mu.len())?;
        let a = spd_sqrt(sigma0)?;
        let ai = a.inverse();
        let inner = SpdMatrix::new(SymMatrix::symmetrize(ai * sigma1.as_matrix() * ai))?;
        let (eigs, t) = inner.eigen();
        let log_eigs = DVector::from_iterator(eigs.len(), eigs.iter().map(|l| l.ln()));
        Ok(Self {
            frame: a.as_matrix() * t,
            log_eigs,
            mu,
        })
    }

    /// The geodesic through `p` with Σ-velocity `x`, so that `γ(1)` is the
    /// exponential map of `(x, 0)`.
    pub fn from_velocity(p: &GaussianPoint, x: &SymMatrix) -> Result<Self> {
        check_dim(p.dim(), x.dim())?;
        let a = spd_sqrt(p.sigma())?;
        let ai = a.inverse();
        let inner = SymMatrix::symmetrize(ai * x.as_matrix() * ai);
        let eig = nalgebra::SymmetricEigen::new(inner.into_matrix());
        Ok(Self {
            frame: a.as_matrix() * eig.eigenvectors,
            log_eigs: eig.eigenvalues,
            mu: p.mu().clone(),
        })
    }

    fn sigma_with(&self, t: f64, power: i32) -> DMatrix<f64> {
        let d = DVector::from_iterator(
            self.log_eigs.len(),
            self.log_eigs.iter().map(|l| l.powi(power) * (t * l).exp()),
        );
        &self.frame * DMatrix::from_diagonal(&d) * self.frame.transpose()
    }

    pub fn point(&self, t: f64) -> Result<GaussianPoint> {
        let sigma = SpdMatrix::new(SymMatrix::symmetrize(self.sigma_with(t, 0)))?;
        GaussianPoint::new(sigma, self.mu.clone())
    }

    /// Fisher length of the whole segment `t ∈ [0, 1]`.
    pub fn length(&self) -> f64 {
        (0.5 * self.log_eigs.norm_squared()).sqrt()
    }
}

impl CurveEvaluator for LeafGeodesic {
    fn jet(&self, t: f64) -> Result<CurveJet> {
        let n = self.mu.len();
        let zero = DVector::zeros(n);
        Ok(CurveJet {
            point: self.point(t)?,
            vel: TangentVector::new(SymMatrix::symmetrize(self.sigma_with(t, 1)), zero.clone())?,
            acc: TangentVector::new(SymMatrix::symmetrize(self.sigma_with(t, 2)), zero)?,
        })
    }

    fn reference_integral(&self, _t: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// Samples the leaf geodesic from `Σ₀` to `Σ₁` (mean zero) at `samples`
/// equally spaced parameters in `[0, 1]`.
pub fn leaf_geodesic(
    sigma0: &SpdMatrix,
    sigma1: &SpdMatrix,
    samples: usize,
) -> Result<SampledCurve> {
    if samples < 2 {
        return Err(GeomError::Domain(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let curve = LeafGeodesic::new(sigma0, sigma1, DVector::zeros(sigma0.dim()))?;
    SampledCurve::from_evaluator(&curve, &uniform_grid(0.0, 1.0, samples - 1))
}

/// Closed-form Fisher distance between two normals with the same mean.
pub fn fisher_distance_leaf(p1: &GaussianPoint, p2: &GaussianPoint) -> Result<f64> {
    check_dim(p1.dim(), p2.dim())?;
    let gap = (p1.mu() - p2.mu()).amax();
    if gap > MEAN_TOL * (1.0 + p1.mu().amax()) {
        return Err(GeomError::Domain(format!("means differ by {gap:e}")));
    }
    Ok(log_spectrum_norm(&gen_eigvals(p2.sigma(), p1.sigma())?))
}

/// Distance in `Pos₁(n+1)` for the metric `½ tr(P⁻¹YP⁻¹Y)`.
pub fn killing_distance(p1: &UnimodularSpd, p2: &UnimodularSpd) -> Result<f64> {
    check_dim(p1.dim(), p2.dim())?;
    Ok(log_spectrum_norm(&gen_eigvals(p2.as_spd(), p1.as_spd())?))
}

fn log_spectrum_norm(eigs: &[f64]) -> f64 {
    (0.5 * eigs.iter().map(|l| l.ln().powi(2)).sum::<f64>()).sqrt()
}

/// `∫ₐᵇ ‖c'(t)‖ dt` for the Fisher metric.
pub fn fisher_length(
    curve: &impl CurveEvaluator,
    a: f64,
    b: f64,
    quad: &Quadrature,
) -> Result<f64> {
    quad.integrate(a, b, |t| {
        let j = curve.jet(t)?;
        fisher_norm(&j.point, &j.vel)
    })
}
