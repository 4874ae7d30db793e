//! The Killing geodesic orthogonal to the leaves and its failure to be a
//! Fisher geodesic.
//!
//! Through the standard normal with velocity `(0, 2e₁)` the Killing
//! geodesic is `c(t) = (diag(C⁻², C⁻¹I), tanh(2t) e₁)` with `C = cosh(2t)`.
//! Its Fisher covariant acceleration is `(diag(−4/C⁴, −4/C³ I), 0)`, of norm
//! `2√(2n)/C²`, so `∫₀ᵗ‖∇_{c'}c'‖ = √(2n) tanh(2t)` stays bounded.

use nalgebra::{DMatrix, DVector};

use super::ode::covariant_accel;
use super::{CurveEvaluator, CurveJet};
use crate::error::{check_dim, GeomError, Result};
use crate::manifold::{
    affine_act, affine_act_tangent, fisher_norm, AffineElement, GaussianPoint, TangentVector,
};
use crate::spd::{SpdMatrix, SymMatrix};

const SIGMA_COMPONENT_TOL: f64 = 1e-12;

fn diag_tangent(first: f64, rest: f64, n: usize, mean: f64) -> Result<TangentVector> {
    let mut d = vec![rest; n];
    d[0] = first;
    let mut v = DVector::zeros(n);
    v[0] = mean;
    TangentVector::new(SymMatrix::from_diagonal(&d), v)
}

/// Point, velocity and acceleration of the canonical transversal Killing
/// geodesic in dimension `n`.
pub fn transversal_killing_curve(
    n: usize,
    t: f64,
) -> Result<(GaussianPoint, TangentVector, TangentVector)> {
    if n == 0 {
        return Err(GeomError::Domain("dimension must be positive".into()));
    }
    let c = (2.0 * t).cosh();
    let s = (2.0 * t).sinh();
    let (c2, c3, c4) = (c * c, c * c * c, c * c * c * c);
    let mut diag = vec![1.0 / c; n];
    diag[0] = 1.0 / c2;
    let mut mu = DVector::zeros(n);
    mu[0] = (2.0 * t).tanh();
    let point = GaussianPoint::new(SpdMatrix::new(SymMatrix::from_diagonal(&diag))?, mu)?;
    let vel = diag_tangent(-4.0 * s / c3, -2.0 * s / c2, n, 2.0 / c2)?;
    let acc = diag_tangent(
        (-8.0 + 16.0 * s * s) / c4,
        (-4.0 + 4.0 * s * s) / c3,
        n,
        -8.0 * s / c3,
    )?;
    Ok((point, vel, acc))
}

/// [`transversal_killing_curve`] as a [`CurveEvaluator`].
#[derive(Debug, Clone, Copy)]
pub struct TransversalKillingCurve {
    pub n: usize,
}

impl CurveEvaluator for TransversalKillingCurve {
    fn jet(&self, t: f64) -> Result<CurveJet> {
        let (point, vel, acc) = transversal_killing_curve(self.n, t)?;
        Ok(CurveJet { point, vel, acc })
    }

    fn reference_integral(&self, t: f64) -> Option<f64> {
        Some((2.0 * self.n as f64).sqrt() * (2.0 * t).tanh())
    }
}

/// The Killing geodesic through `p0` with a velocity `v0 = (0, v)`
/// orthogonal to the leaf, obtained from the canonical curve by an affine
/// isometry and a linear reparameterization.
#[derive(Debug, Clone)]
pub struct TransversalGeodesic {
    n: usize,
    // maps the canonical picture back to the data
    to_data: AffineElement,
    speed: f64,
}

impl TransversalGeodesic {
    pub fn new(p0: &GaussianPoint, v0: &TangentVector) -> Result<Self> {
        let (g, rescale) = normalize_transversal(p0, v0)?;
        Ok(Self {
            n: p0.dim(),
            to_data: g.inverse()?,
            speed: 1.0 / rescale,
        })
    }

    /// Fisher speed `‖v₀‖`.
    pub fn speed(&self) -> f64 {
        self.speed
    }
}

impl CurveEvaluator for TransversalGeodesic {
    fn jet(&self, t: f64) -> Result<CurveJet> {
        // canonical speed is 2
        let k = 0.5 * self.speed;
        let (p, v, a) = transversal_killing_curve(self.n, k * t)?;
        Ok(CurveJet {
            point: affine_act(&self.to_data, &p)?,
            vel: affine_act_tangent(&self.to_data, &v)?.scale(k),
            acc: affine_act_tangent(&self.to_data, &a)?.scale(k * k),
        })
    }

    /// Evaluated on the canonical curve: the affine action is a Fisher
    /// isometry, and far out the data-side covariance is too ill conditioned
    /// to be represented.
    fn accel_norm(&self, t: f64) -> Result<f64> {
        let k = 0.5 * self.speed;
        let (p, v, a) = transversal_killing_curve(self.n, k * t)?;
        Ok(k * k * fisher_norm(&p, &covariant_accel(&p, &v, &a)?)?)
    }

    fn reference_integral(&self, t: f64) -> Option<f64> {
        let k = 0.5 * self.speed;
        Some(k * (2.0 * self.n as f64).sqrt() * (2.0 * k * t).tanh())
    }
}

/// An affine isometry `g = (TA, −TAμ₀)` with `AᵀA = Σ₀⁻¹` and `T`
/// orthogonal, and the factor `1/‖v₀‖`, such that `g` maps `p0` to the
/// standard normal and `v0/‖v₀‖` to `(0, e₁)`.
///
/// `T` is a rotation when `n ≥ 2`; for `n = 1` and a negative velocity it
/// is the reflection `−1`.
pub fn normalize_transversal(
    p0: &GaussianPoint,
    v0: &TangentVector,
) -> Result<(AffineElement, f64)> {
    check_dim(p0.dim(), v0.dim())?;
    let sigma_part = v0.x().as_matrix().amax();
    if sigma_part > SIGMA_COMPONENT_TOL {
        return Err(GeomError::Domain(format!(
            "velocity has a covariance component of size {sigma_part:e}"
        )));
    }
    let speed = fisher_norm(p0, v0)?;
    if speed.is_nan() || speed <= 0.0 {
        return Err(GeomError::Domain("velocity is zero".into()));
    }
    let l_inv = p0
        .sigma()
        .chol_factor()
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::SingularInput("Cholesky factor".into()))?;
    let u = &l_inv * v0.v() / speed;
    let a = rotation_to_e1(&u) * l_inv;
    let b = -(&a * p0.mu());
    Ok((AffineElement::new(a, b)?, 1.0 / speed))
}

/// An orthogonal matrix sending the unit vector `u` to `e₁`.
fn rotation_to_e1(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    let mut w = u.clone();
    w[0] -= 1.0;
    let ww = w.norm_squared();
    if ww < 1e-30 {
        return DMatrix::identity(n, n);
    }
    // Householder reflection with H u = e₁
    let mut h = DMatrix::identity(n, n) - &w * w.transpose() * (2.0 / ww);
    if n >= 2 {
        // flipping a row orthogonal to the image keeps H u = e₁, fixes det = 1
        h.row_mut(n - 1).neg_mut();
    }
    h
}
