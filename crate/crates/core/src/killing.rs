//! The symmetric space `Pos₁(n+1)` of unimodular positive definite matrices
//! and its relation to the normal family.
//!
//! `Φ(Σ, μ) = det(Σ)^{−1/(n+1)} [[Σ + μμᵀ, μ], [μᵀ, 1]]` is a diffeomorphism
//! onto `Pos₁(n+1)`. It intertwines the affine action on normals with
//! `P ↦ ρ(g) P ρ(g)ᵀ`, where `ρ` is [`aff_embed`]. The Killing metric used here
//! is `½ tr(P⁻¹ Y₁ P⁻¹ Y₂)`; other references scale it differently, which
//! changes distances by a constant factor only.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, GeomError, Result};
use crate::manifold::{AffineElement, GaussianPoint, TangentVector};
use crate::spd::{spd_sqrt, sym_exp, sym_log, SpdMatrix, SymMatrix};

/// Relative determinant drift tolerated before renormalization is flagged.
pub const UNIMODULAR_TOL: f64 = 1e-10;
/// Absolute trace tolerance for [`TracelessSym`].
pub const TRACE_TOL: f64 = 1e-12;

/// A positive definite matrix with determinant one.
#[derive(Debug, Clone, PartialEq)]
pub struct UnimodularSpd {
    mat: SpdMatrix,
    renormalized: bool,
}

impl UnimodularSpd {
    /// Inputs within [`UNIMODULAR_TOL`] of determinant one are kept as
    /// they are; others are rescaled by `det^{−1/m}` and flagged.
    pub fn new(mat: SpdMatrix) -> Result<Self> {
        let m = mat.dim() as f64;
        let log_det = mat.log_det();
        let renormalized = log_det.abs() > UNIMODULAR_TOL;
        if !renormalized {
            return Ok(Self { mat, renormalized });
        }
        let scaled = mat.as_sym().scale((-log_det / m).exp());
        Ok(Self {
            mat: SpdMatrix::new(scaled)?,
            renormalized,
        })
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::new(SpdMatrix::from_matrix(m)?)
    }

    pub fn identity(m: usize) -> Self {
        Self {
            mat: SpdMatrix::identity(m),
            renormalized: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn as_spd(&self) -> &SpdMatrix {
        &self.mat
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.mat.as_matrix()
    }

    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }
}

/// A symmetric matrix with zero trace, i.e. a tangent vector of `Pos₁` at
/// the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct TracelessSym(SymMatrix);

impl TracelessSym {
    pub fn new(s: SymMatrix) -> Result<Self> {
        let tr = s.trace();
        if tr.abs() > TRACE_TOL * (1.0 + s.as_matrix().amax()) {
            return Err(GeomError::Domain(format!("trace {tr:e} is not zero")));
        }
        Ok(Self(s))
    }

    /// Removes the trace part.
    pub fn project(s: &SymMatrix) -> Self {
        let m = s.dim();
        let shift = s.trace() / m as f64;
        Self(s - &SymMatrix::identity(m).scale(shift))
    }

    pub fn from_row_slice(m: usize, entries: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::from_row_slice(m, entries)?)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.0.as_matrix()
    }
}

fn block(top_left: &DMatrix<f64>, col: &DVector<f64>, corner: f64) -> DMatrix<f64> {
    let n = col.len();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(top_left);
    m.view_mut((0, n), (n, 1)).copy_from(col);
    m.view_mut((n, 0), (1, n)).copy_from(&col.transpose());
    m[(n, n)] = corner;
    m
}

pub fn phi(p: &GaussianPoint) -> Result<UnimodularSpd> {
    let n = p.dim();
    let mu = p.mu();
    let scale = (-p.sigma().log_det() / (n + 1) as f64).exp();
    let m = block(&(p.sigma().as_matrix() + mu * mu.transpose()), mu, 1.0) * scale;
    UnimodularSpd::new(SpdMatrix::new(SymMatrix::symmetrize(m))?)
}

/// Inverse of [`phi`]. Only the ratios of entries are used, so the input
/// scale does not matter.
pub fn phi_inv(p: &UnimodularSpd) -> Result<GaussianPoint> {
    let m = p.as_matrix();
    let n = p.dim() - 1;
    let corner = m[(n, n)];
    if corner <= 0.0 {
        return Err(GeomError::Domain(
            "bottom-right entry is not positive".into(),
        ));
    }
    let mu: DVector<f64> = m.column(n).rows(0, n) / corner;
    let sigma = m.view((0, 0), (n, n)) / corner - &mu * mu.transpose();
    let sigma = SpdMatrix::new(SymMatrix::symmetrize(sigma))
        .map_err(|e| GeomError::Domain(format!("recovered covariance: {e}")))?;
    GaussianPoint::new(sigma, mu)
}

/// `ρ(A, b) = det(A)^{−1/(n+1)} [[A, b], [0, 1]]`.
pub fn aff_embed(g: &AffineElement) -> Result<DMatrix<f64>> {
    let det = g.det();
    if det <= 0.0 {
        return Err(GeomError::Domain(format!(
            "det A = {det:e} is not positive"
        )));
    }
    let n = g.dim();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(g.a());
    m.view_mut((0, n), (n, 1)).copy_from(g.b());
    m[(n, n)] = 1.0;
    Ok(m * det.powf(-1.0 / (n + 1) as f64))
}

/// `P ↦ S P Sᵀ` for `det S = 1`.
pub fn sl_act(s: &DMatrix<f64>, p: &UnimodularSpd) -> Result<UnimodularSpd> {
    check_dim(p.dim(), s.nrows())?;
    check_dim(p.dim(), s.ncols())?;
    let det = s.determinant();
    if (det - 1.0).abs() > UNIMODULAR_TOL.sqrt() {
        return Err(GeomError::Domain(format!("det S = {det} is not one")));
    }
    UnimodularSpd::from_matrix(s * p.as_matrix() * s.transpose())
}

/// `dΦ` at the standard normal:
/// `[[X − (trX/(n+1)) I, v], [vᵀ, −trX/(n+1)]]`.
pub fn dphi_identity(t: &TangentVector) -> TracelessSym {
    let n = t.dim();
    let shift = t.x().trace() / (n + 1) as f64;
    let top = t.x().as_matrix() - DMatrix::identity(n, n) * shift;
    TracelessSym(SymMatrix::symmetrize(block(&top, t.v(), -shift)))
}

/// `dΦ_p(t)`, transported from the standard normal by equivariance with the
/// frame `g = (chol Σ, μ)`.
///
/// The result is tangent to `Pos₁` at `Φ(p)`, so it satisfies
/// `tr(Φ(p)⁻¹ Y) = 0` rather than `tr Y = 0`.
pub fn dphi(p: &GaussianPoint, t: &TangentVector) -> Result<SymMatrix> {
    check_dim(p.dim(), t.dim())?;
    let g = AffineElement::from_point(p);
    let base = affine_pullback_tangent(&g, t)?;
    let rho = aff_embed(&g)?;
    Ok(SymMatrix::symmetrize(
        &rho * dphi_identity(&base).as_matrix() * rho.transpose(),
    ))
}

/// Inverse of [`dphi`]. Components of `y` normal to `Pos₁` are discarded.
pub fn dphi_inv(p: &GaussianPoint, y: &SymMatrix) -> Result<TangentVector> {
    check_dim(p.dim() + 1, y.dim())?;
    let n = p.dim();
    let g = AffineElement::from_point(p);
    let rho_inv = aff_embed(&g)?
        .try_inverse()
        .ok_or_else(|| GeomError::SingularInput("affine frame".into()))?;
    let y0 = &rho_inv * y.as_matrix() * rho_inv.transpose();
    // at the identity: v = y, X = Y₁₁ − y₂₂ I
    let corner = y0[(n, n)];
    let x0 = y0.view((0, 0), (n, n)) - DMatrix::identity(n, n) * corner;
    let v0: DVector<f64> = y0.column(n).rows(0, n).into_owned();
    let a = g.a();
    Ok(TangentVector::from_parts_unchecked(
        a * x0 * a.transpose(),
        a * v0,
    ))
}

fn affine_pullback_tangent(g: &AffineElement, t: &TangentVector) -> Result<TangentVector> {
    let a_inv = g
        .a()
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::SingularInput("affine frame".into()))?;
    Ok(TangentVector::from_parts_unchecked(
        &a_inv * t.x().as_matrix() * a_inv.transpose(),
        &a_inv * t.v(),
    ))
}

/// Killing metric in `(Σ, μ)` coordinates:
/// `vᵀΣ⁻¹w + ½tr(Σ⁻¹XΣ⁻¹Y) − tr(Σ⁻¹X) tr(Σ⁻¹Y) / (2(n+1))`.
pub fn killing_inner(p: &GaussianPoint, t1: &TangentVector, t2: &TangentVector) -> Result<f64> {
    check_dim(p.dim(), t1.dim())?;
    check_dim(p.dim(), t2.dim())?;
    let n = p.dim() as f64;
    let si = p.sigma_inv();
    let a = si * t1.x().as_matrix();
    let b = si * t2.x().as_matrix();
    let mean = t1.v().dot(&(si * t2.v()));
    Ok(mean + 0.5 * (&a * &b).trace() - a.trace() * b.trace() / (2.0 * (n + 1.0)))
}

pub fn killing_norm(p: &GaussianPoint, t: &TangentVector) -> Result<f64> {
    Ok(killing_inner(p, t, t)?.max(0.0).sqrt())
}

/// `½ tr(P⁻¹ Y₁ P⁻¹ Y₂)` for tangent vectors of `Pos₁` at `P`.
pub fn killing_inner_matrix(p: &UnimodularSpd, y1: &SymMatrix, y2: &SymMatrix) -> Result<f64> {
    check_dim(p.dim(), y1.dim())?;
    check_dim(p.dim(), y2.dim())?;
    let pi = p.as_spd().inverse();
    Ok(0.5 * (pi * y1.as_matrix() * pi * y2.as_matrix()).trace())
}

/// Levi-Civita connection of the Killing metric on a leaf of fixed mean,
/// `−½(XΣ⁻¹Y + YΣ⁻¹X)`. It coincides with the Fisher one there.
pub fn killing_connection_sigma(
    p: &GaussianPoint,
    x: &SymMatrix,
    y: &SymMatrix,
) -> Result<SymMatrix> {
    check_dim(p.dim(), x.dim())?;
    check_dim(p.dim(), y.dim())?;
    let si = p.sigma_inv();
    let (xm, ym) = (x.as_matrix(), y.as_matrix());
    let s = xm * si * ym + ym * si * xm;
    Ok(SymMatrix::symmetrize(s * -0.5))
}

/// `t ↦ R exp(2t X₀) R` with `R = √P₀`: the orbit of a one-parameter
/// subgroup, a Killing geodesic through `P₀` with velocity `2 R X₀ R`.
pub fn symmetric_geodesic(p0: &UnimodularSpd, x0: &TracelessSym, t: f64) -> Result<UnimodularSpd> {
    check_dim(p0.dim(), x0.dim())?;
    let r = spd_sqrt(p0.as_spd())?;
    let e = sym_exp(&x0.as_sym().scale(2.0 * t))?;
    UnimodularSpd::from_matrix(r.as_matrix() * e.as_matrix() * r.as_matrix())
}

/// The generator `X₀` for which [`symmetric_geodesic`] starts with velocity
/// `velocity`, i.e. `½ R⁻¹ V R⁻¹`.
pub fn generator_for_velocity(p0: &UnimodularSpd, velocity: &SymMatrix) -> Result<TracelessSym> {
    check_dim(p0.dim(), velocity.dim())?;
    let r = spd_sqrt(p0.as_spd())?;
    let ri = r.inverse();
    let x = SymMatrix::symmetrize(ri * velocity.as_matrix() * ri * 0.5);
    // a velocity tangent to Pos₁ gives a traceless generator; drop roundoff
    Ok(TracelessSym::project(&x))
}

/// Initial velocity at `p1` of the Killing geodesic reaching `p2` at time 1.
pub fn killing_log(p1: &UnimodularSpd, p2: &UnimodularSpd) -> Result<SymMatrix> {
    check_dim(p1.dim(), p2.dim())?;
    let r = spd_sqrt(p1.as_spd())?;
    let ri = r.inverse();
    let inner = SpdMatrix::new(SymMatrix::symmetrize(ri * p2.as_matrix() * ri))?;
    let l = sym_log(&inner)?;
    Ok(SymMatrix::symmetrize(
        r.as_matrix() * l.as_matrix() * r.as_matrix(),
    ))
}

/// `Ψ(Σ) = (log det Σ, det(Σ)^{−1/n} Σ)`, an isometry from `Pos(n)` with
/// `½tr(Σ⁻¹XΣ⁻¹Y)` onto `ℝ × Pos₁(n)` with the metric of [`product_metric`].
pub fn psi_product(sigma: &SpdMatrix) -> Result<(f64, UnimodularSpd)> {
    let alpha = sigma.log_det();
    Ok((alpha, UnimodularSpd::new(sigma.clone())?))
}

/// `dΨ_Σ(X) = (tr(Σ⁻¹X), det^{−1/n}(X − tr(Σ⁻¹X)/n · Σ))`.
pub fn dpsi_product(sigma: &SpdMatrix, x: &SymMatrix) -> Result<(f64, SymMatrix)> {
    check_dim(sigma.dim(), x.dim())?;
    let n = sigma.dim() as f64;
    let s = (sigma.inverse() * x.as_matrix()).trace();
    let scale = (-sigma.log_det() / n).exp();
    let y = (x.as_matrix() - sigma.as_matrix() * (s / n)) * scale;
    Ok((s, SymMatrix::symmetrize(y)))
}

/// `st/(2n) + ½ tr(Σ₁⁻¹Y₁Σ₁⁻¹Y₂)` at `(α, Σ₁)`.
pub fn product_metric(
    base: &UnimodularSpd,
    t1: (f64, &SymMatrix),
    t2: (f64, &SymMatrix),
) -> Result<f64> {
    let n = base.dim() as f64;
    Ok(t1.0 * t2.0 / (2.0 * n) + killing_inner_matrix(base, t1.1, t2.1)?)
}

/// `A · (α, Σ₁) = (α + 2 log|det A|, |det A|^{−2/n} A Σ₁ Aᵀ)`, the image of
/// `Σ ↦ AΣAᵀ` under Ψ.
pub fn gl_act_product(
    a: &DMatrix<f64>,
    point: (f64, &UnimodularSpd),
) -> Result<(f64, UnimodularSpd)> {
    check_dim(point.1.dim(), a.nrows())?;
    let det = a.determinant();
    if det == 0.0 {
        return Err(GeomError::SingularInput("A is singular".into()));
    }
    let moved = UnimodularSpd::from_matrix(a * point.1.as_matrix() * a.transpose())?;
    Ok((point.0 + 2.0 * det.abs().ln(), moved))
}
