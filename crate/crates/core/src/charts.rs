//! Exponential-family coordinates of the normal family.
//!
//! * e-flat chart `(Θ, θ) = (−½Σ⁻¹, Σ⁻¹μ)`
//! * m-flat chart `(Ξ, ξ) = (Σ + μμᵀ, μ)`
//!
//! Matrix blocks are paired with the trace form `⟨A, B⟩ = tr(AB)`. In chart
//! coordinates a symmetric block is expanded in the basis `S_ij` of
//! [`crate::spd::sym_basis`], so its coordinates are the upper triangular
//! entries. With that convention the gradient of the potential in θ
//! coordinates is `η_ij = tr(Ξ S_ij)`, i.e. `Ξ_ii` on the diagonal and
//! `2 Ξ_ij` off it; [`legendre_eta`] undoes the factor 2 when it rebuilds Ξ.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, GeomError, Result};
use crate::manifold::{fisher_inner, tangent_dim, GaussianPoint, TangentVector};
use crate::sampling::Sampler;
use crate::spd::{sym_basis_indices, sym_dim, SpdMatrix, SymMatrix};

/// Charts refuse points whose eigenvalue ratio is within this margin of zero.
pub const CHART_MARGIN: f64 = 1e-10;

/// Relative step for first derivatives of the potential.
pub const FIRST_DIFF_STEP: f64 = 1e-5;
/// Relative step for second derivatives of the potential.
pub const SECOND_DIFF_STEP: f64 = 1e-4;

fn step_for(coords: &[f64], rel: f64) -> f64 {
    rel * (1.0 + coords.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// A point in the e-flat chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPoint {
    theta_mat: SymMatrix,
    theta: DVector<f64>,
    // −Θ, validated
    neg: SpdMatrix,
}

impl ThetaPoint {
    pub fn new(theta_mat: SymMatrix, theta: DVector<f64>) -> Result<Self> {
        check_dim(theta_mat.dim(), theta.len())?;
        let neg = SpdMatrix::with_margin(-&theta_mat, CHART_MARGIN)
            .map_err(|e| GeomError::SingularInput(format!("Θ is not negative definite: {e}")))?;
        Ok(Self {
            theta_mat,
            theta,
            neg,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta_mat(&self) -> &SymMatrix {
        &self.theta_mat
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    /// Upper triangle of Θ followed by θ.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.theta_mat.coords();
        c.extend(self.theta.iter());
        c
    }

    pub fn from_coords(n: usize, coords: &[f64]) -> Result<Self> {
        check_dim(tangent_dim(n), coords.len())?;
        let (s, v) = coords.split_at(sym_dim(n));
        Self::new(SymMatrix::from_coords(n, s)?, DVector::from_column_slice(v))
    }
}

/// A point in the m-flat chart.
#[derive(Debug, Clone, PartialEq)]
pub struct XiPoint {
    xi_mat: SymMatrix,
    xi: DVector<f64>,
    // Ξ − ξξᵀ, validated; this is Σ
    cov: SpdMatrix,
}

impl XiPoint {
    pub fn new(xi_mat: SymMatrix, xi: DVector<f64>) -> Result<Self> {
        check_dim(xi_mat.dim(), xi.len())?;
        let cov = SymMatrix::symmetrize(xi_mat.as_matrix() - &xi * xi.transpose());
        let cov = SpdMatrix::with_margin(cov, CHART_MARGIN).map_err(|e| {
            GeomError::SingularInput(format!("Ξ − ξξᵀ is not positive definite: {e}"))
        })?;
        Ok(Self { xi_mat, xi, cov })
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn xi_mat(&self) -> &SymMatrix {
        &self.xi_mat
    }

    pub fn xi(&self) -> &DVector<f64> {
        &self.xi
    }

    /// Dual coordinates `η`: `tr(Ξ S_ij)` for `i <= j`, then ξ.
    pub fn eta_coords(&self) -> Vec<f64> {
        let m = self.xi_mat.as_matrix();
        let mut c: Vec<f64> = sym_basis_indices(self.dim())
            .into_iter()
            .map(|ix| {
                if ix.i == ix.j {
                    m[(ix.i, ix.i)]
                } else {
                    2.0 * m[(ix.i, ix.j)]
                }
            })
            .collect();
        c.extend(self.xi.iter());
        c
    }

    pub fn from_eta_coords(n: usize, eta: &[f64]) -> Result<Self> {
        check_dim(tangent_dim(n), eta.len())?;
        let (s, v) = eta.split_at(sym_dim(n));
        let mut m = DMatrix::zeros(n, n);
        for (ix, &c) in sym_basis_indices(n).iter().zip(s) {
            let entry = if ix.i == ix.j { c } else { 0.5 * c };
            m[(ix.i, ix.j)] = entry;
            m[(ix.j, ix.i)] = entry;
        }
        Self::new(SymMatrix::new(m)?, DVector::from_column_slice(v))
    }
}

pub fn to_theta(p: &GaussianPoint) -> Result<ThetaPoint> {
    let si = p.sigma_inv();
    let theta_mat = SymMatrix::symmetrize(si * -0.5);
    ThetaPoint::new(theta_mat, si * p.mu())
}

/// `Σ = −½Θ⁻¹`, `μ = Σθ`.
pub fn from_theta(q: &ThetaPoint) -> Result<GaussianPoint> {
    let sigma = SymMatrix::symmetrize(q.neg.inverse() * 0.5);
    let sigma = SpdMatrix::new(sigma)?;
    let mu = sigma.as_matrix() * &q.theta;
    GaussianPoint::new(sigma, mu)
}

pub fn to_xi(p: &GaussianPoint) -> Result<XiPoint> {
    let mu = p.mu();
    let xi_mat = SymMatrix::symmetrize(p.sigma().as_matrix() + mu * mu.transpose());
    XiPoint::new(xi_mat, mu.clone())
}

/// `μ = ξ`, `Σ = Ξ − ξξᵀ`.
pub fn from_xi(q: &XiPoint) -> Result<GaussianPoint> {
    GaussianPoint::new(q.cov.clone(), q.xi.clone())
}

/// Which closed form of the potential to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    SigmaMu,
    Theta,
    Xi,
}

/// A point expressed in one of the three charts.
#[derive(Debug, Clone)]
pub enum ChartPoint {
    SigmaMu(GaussianPoint),
    Theta(ThetaPoint),
    Xi(XiPoint),
}

impl ChartPoint {
    pub fn from_point(p: &GaussianPoint, chart: Chart) -> Result<Self> {
        Ok(match chart {
            Chart::SigmaMu => Self::SigmaMu(p.clone()),
            Chart::Theta => Self::Theta(to_theta(p)?),
            Chart::Xi => Self::Xi(to_xi(p)?),
        })
    }
}

/// `ψ(Σ, μ) = ½μᵀΣ⁻¹μ + ½ log det(2πΣ)`.
pub fn psi_sigma_mu(p: &GaussianPoint) -> f64 {
    let n = p.dim() as f64;
    let quad = p.mu().dot(&(p.sigma_inv() * p.mu()));
    0.5 * quad + 0.5 * (n * (2.0 * PI).ln() + p.sigma().log_det())
}

/// `ψ(Θ, θ) = −¼θᵀΘ⁻¹θ − ½ log det(−π⁻¹Θ)`.
///
/// The quadratic term needs `Θ⁻¹`: substituting `Θ = −½Σ⁻¹`, `θ = Σ⁻¹μ`
/// gives `−¼θᵀΘ⁻¹θ = ½μᵀΣ⁻¹μ`, whereas `θᵀΘθ` would not reproduce ψ(Σ, μ).
pub fn psi_theta(q: &ThetaPoint) -> f64 {
    let n = q.dim() as f64;
    // −Θ⁻¹ = (−Θ)⁻¹
    let quad = q.theta.dot(&(q.neg.inverse() * &q.theta));
    0.25 * quad - 0.5 * (q.neg.log_det() - n * PI.ln())
}

/// `ψ(Ξ, ξ) = ½ξᵀ(Ξ − ξξᵀ)⁻¹ξ + ½ log det(2π(Ξ − ξξᵀ))`.
///
/// Uses `Ξ − ξξᵀ` in the quadratic term too (it equals Σ); a literal
/// `Σ − ξξᵀ` there is not a function of the chart and would break
/// agreement with the other two forms.
pub fn psi_xi(q: &XiPoint) -> f64 {
    let n = q.dim() as f64;
    let quad = q.xi.dot(&(q.cov.inverse() * &q.xi));
    0.5 * quad + 0.5 * (n * (2.0 * PI).ln() + q.cov.log_det())
}

pub fn potential(p: &ChartPoint) -> f64 {
    match p {
        ChartPoint::SigmaMu(p) => psi_sigma_mu(p),
        ChartPoint::Theta(q) => psi_theta(q),
        ChartPoint::Xi(q) => psi_xi(q),
    }
}

fn psi_at_theta_coords(n: usize, coords: &[f64]) -> Result<f64> {
    Ok(psi_theta(&ThetaPoint::from_coords(n, coords)?))
}

/// Central-difference gradient of ψ over the θ-chart coordinates; this is
/// the dual coordinate vector η.
pub fn legendre_gradient(q: &ThetaPoint) -> Result<Vec<f64>> {
    let n = q.dim();
    let x = q.coords();
    let h = step_for(&x, FIRST_DIFF_STEP);
    (0..x.len())
        .map(|a| {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[a] += h;
            minus[a] -= h;
            Ok((psi_at_theta_coords(n, &plus)? - psi_at_theta_coords(n, &minus)?) / (2.0 * h))
        })
        .collect()
}

/// The Legendre image of `q`, with `∂ψ/∂θ` computed by finite differences.
pub fn legendre_eta(q: &ThetaPoint) -> Result<XiPoint> {
    XiPoint::from_eta_coords(q.dim(), &legendre_gradient(q)?)
}

/// `⟨θ, η⟩ − ψ(θ)` with the trace pairing on matrix blocks:
/// `θᵀξ + tr(ΘΞ) − ψ`.
pub fn dual_potential(q: &ThetaPoint) -> Result<f64> {
    let eta = to_xi(&from_theta(q)?)?;
    Ok(pairing(q, &eta) - psi_theta(q))
}

/// ψ* evaluated at a point given in the m-flat chart.
pub fn dual_potential_at(eta: &XiPoint) -> Result<f64> {
    let q = to_theta(&from_xi(eta)?)?;
    Ok(pairing(&q, eta) - psi_theta(&q))
}

/// `θᵀξ + tr(ΘΞ)`, equal to the coordinate dot product of θ and η.
pub fn pairing(q: &ThetaPoint, eta: &XiPoint) -> f64 {
    q.theta.dot(&eta.xi) + (q.theta_mat.as_matrix() * eta.xi_mat.as_matrix()).trace()
}

/// Fisher metric in θ-chart coordinates, obtained by pushing the coordinate
/// directions through the differential of [`from_theta`].
pub fn theta_chart_metric(q: &ThetaPoint) -> Result<DMatrix<f64>> {
    let p = from_theta(q)?;
    let theta_inv = -q.neg.inverse();
    let sigma = p.sigma().as_matrix();
    let n = q.dim();
    let dirs: Vec<TangentVector> = TangentVector::basis(n)
        .into_iter()
        .map(|e| {
            // dΣ = ½Θ⁻¹ dΘ Θ⁻¹, dμ = dΣ θ + Σ dθ
            let ds = &theta_inv * e.x().as_matrix() * &theta_inv * 0.5;
            let dm = &ds * &q.theta + sigma * e.v();
            TangentVector::from_parts_unchecked(ds, dm)
        })
        .collect();
    let d = dirs.len();
    let mut g = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let v = fisher_inner(&p, &dirs[a], &dirs[b])?;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

/// Step control for [`hessian_check_with`].
#[derive(Debug, Clone, Copy)]
pub struct HessianOptions {
    /// Step relative to `1 + ‖coords‖∞`.
    pub rel_step: f64,
    /// Combine steps `h` and `h/2` to cancel the leading error term.
    pub richardson: bool,
}

impl Default for HessianOptions {
    fn default() -> Self {
        Self {
            rel_step: SECOND_DIFF_STEP,
            richardson: true,
        }
    }
}

fn fd_hessian(f: impl Fn(&[f64]) -> Result<f64>, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let d = x.len();
    let f0 = f(x)?;
    let eval = |moves: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(k, s) in moves {
            y[k] += s;
        }
        f(&y)
    };
    let mut hess = DMatrix::zeros(d, d);
    for a in 0..d {
        let v = (eval(&[(a, h)])? - 2.0 * f0 + eval(&[(a, -h)])?) / (h * h);
        hess[(a, a)] = v;
        for b in (a + 1)..d {
            let v =
                (eval(&[(a, h), (b, h)])? - eval(&[(a, h), (b, -h)])? - eval(&[(a, -h), (b, h)])?
                    + eval(&[(a, -h), (b, -h)])?)
                    / (4.0 * h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    Ok(hess)
}

fn fd_hessian_opts(
    f: impl Fn(&[f64]) -> Result<f64> + Copy,
    x: &[f64],
    opts: HessianOptions,
) -> Result<DMatrix<f64>> {
    let h = step_for(x, opts.rel_step);
    let coarse = fd_hessian(f, x, h)?;
    if !opts.richardson {
        return Ok(coarse);
    }
    let fine = fd_hessian(f, x, 0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Finite-difference Hessian of ψ over θ-chart coordinates compared with
/// [`theta_chart_metric`].
///
/// Returns `max |H − G| / max(1, max |G|)`: an absolute residual wherever the
/// metric entries are of order one, relative where they are large.
pub fn hessian_check(q: &ThetaPoint) -> Result<f64> {
    hessian_check_with(q, HessianOptions::default())
}

pub fn hessian_check_with(q: &ThetaPoint, opts: HessianOptions) -> Result<f64> {
    let n = q.dim();
    let hess = fd_hessian_opts(|c: &[f64]| psi_at_theta_coords(n, c), &q.coords(), opts)?;
    let g = theta_chart_metric(q)?;
    Ok(scaled_residual(&hess, &g))
}

/// The dual statement: the Hessian of ψ* over η coordinates is the inverse
/// of the θ-chart metric. Same residual convention as [`hessian_check`].
pub fn hessian_check_dual(q: &ThetaPoint) -> Result<f64> {
    let n = q.dim();
    let eta = to_xi(&from_theta(q)?)?;
    let f = |c: &[f64]| dual_potential_at(&XiPoint::from_eta_coords(n, c)?);
    let hess = fd_hessian_opts(f, &eta.eta_coords(), HessianOptions::default())?;
    let g_inv = theta_chart_metric(q)?
        .try_inverse()
        .ok_or_else(|| GeomError::SingularInput("θ-chart metric".into()))?;
    Ok(scaled_residual(&hess, &g_inv))
}

fn scaled_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(1.0);
    (a - b).amax() / scale
}

/// `∇⁽ᵉ⁾_Z X` for constant-coefficient fields in the `(Σ, μ)` chart: the
/// second derivative of the θ-chart map, pulled back through its Jacobian.
pub fn e_connection(
    p: &GaussianPoint,
    z: &TangentVector,
    x: &TangentVector,
) -> Result<TangentVector> {
    check_dim(p.dim(), z.dim())?;
    check_dim(p.dim(), x.dim())?;
    let si = p.sigma_inv();
    let sigma = p.sigma().as_matrix();
    let mu = p.mu();
    let (zm, xm) = (z.x().as_matrix(), x.x().as_matrix());
    let szsx = si * zm * si * xm * si;
    let sxsz = si * xm * si * zm * si;
    // second derivatives of Θ = −½Σ⁻¹ and θ = Σ⁻¹μ
    let d2_theta_mat = (&szsx + &sxsz) * -0.5;
    let d2_theta = (&szsx + &sxsz) * mu - si * xm * si * z.v() - si * zm * si * x.v();
    // inverse Jacobian: X = 2ΣdΘΣ, v = Σdθ + XΣ⁻¹μ
    let out_x = sigma * d2_theta_mat * sigma * 2.0;
    let out_v = sigma * d2_theta + &out_x * (si * mu);
    Ok(TangentVector::from_parts_unchecked(out_x, out_v))
}

/// `∇⁽ᵐ⁾_Z X` for constant-coefficient fields, from the ξ-chart map.
pub fn m_connection(
    p: &GaussianPoint,
    z: &TangentVector,
    x: &TangentVector,
) -> Result<TangentVector> {
    check_dim(p.dim(), z.dim())?;
    check_dim(p.dim(), x.dim())?;
    // D²Ξ = vzᵀ + zvᵀ, D²ξ = 0; the inverse Jacobian leaves this unchanged
    let vz = x.v() * z.v().transpose();
    Ok(TangentVector::from_parts_unchecked(
        &vz + vz.transpose(),
        DVector::zeros(p.dim()),
    ))
}

/// Residuals of the duality and averaging identities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityResidual {
    /// worst `|Z g(X,Y) − g(∇ᵉ_Z X, Y) − g(X, ∇ᵐ_Z Y)|`
    pub duality: f64,
    /// worst max-norm of `½(∇ᵉ + ∇ᵐ) − ∇`
    pub averaging: f64,
}

impl DualityResidual {
    pub fn max(&self) -> f64 {
        self.duality.max(self.averaging)
    }
}

/// Checks `Z g(X, Y) = g(∇⁽ᵉ⁾_Z X, Y) + g(X, ∇⁽ᵐ⁾_Z Y)` on `sample_count`
/// random triples of unit-length constant-coefficient fields, the metric
/// derivative taken by central differences with step `1e-5·(1 + ‖Σ‖∞)`.
/// Also checks that the average of the two connections is the Levi-Civita
/// connection. The triples are drawn from a fixed seed.
pub fn dual_connection_check(p: &GaussianPoint, sample_count: usize) -> Result<DualityResidual> {
    dual_connection_check_seeded(p, sample_count, 0x0d0a1)
}

pub fn dual_connection_check_seeded(
    p: &GaussianPoint,
    sample_count: usize,
    seed: u64,
) -> Result<DualityResidual> {
    let n = p.dim();
    let mut sampler = Sampler::new(seed);
    let h = FIRST_DIFF_STEP * (1.0 + p.sigma().as_matrix().amax());
    let unit = |t: TangentVector| -> Result<TangentVector> {
        let norm = fisher_inner(p, &t, &t)?.sqrt();
        Ok(t.scale(1.0 / norm))
    };
    let mut worst = DualityResidual {
        duality: 0.0,
        averaging: 0.0,
    };
    for _ in 0..sample_count {
        let z = unit(sampler.tangent(n))?;
        let x = unit(sampler.tangent(n))?;
        let y = unit(sampler.tangent(n))?;
        let plus = p.offset(&z, h)?;
        let minus = p.offset(&z, -h)?;
        let lhs = (fisher_inner(&plus, &x, &y)? - fisher_inner(&minus, &x, &y)?) / (2.0 * h);
        let rhs = fisher_inner(p, &e_connection(p, &z, &x)?, &y)?
            + fisher_inner(p, &x, &m_connection(p, &z, &y)?)?;
        worst.duality = worst.duality.max((lhs - rhs).abs());

        let avg = e_connection(p, &z, &x)?
            .add(&m_connection(p, &z, &x)?)
            .scale(0.5);
        let lc = crate::manifold::connection_coeff(p, &z, &x)?;
        worst.averaging = worst.averaging.max(avg.sub(&lc).max_abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e1(n: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[0] = 1.0;
        v
    }

    #[test]
    fn theta_chart_examples() {
        let q = to_theta(&GaussianPoint::standard(2)).unwrap();
        assert_eq!(q.theta_mat(), &SymMatrix::identity(2).scale(-0.5));
        assert_eq!(q.theta(), &DVector::zeros(2));
        let p = GaussianPoint::from_slices(&[2.0, 0.0, 0.0, 2.0], &[1.0, 0.0]).unwrap();
        let q = to_theta(&p).unwrap();
        assert_relative_eq!(q.theta_mat().as_matrix()[(0, 0)], -0.25, epsilon = 1e-15);
        assert_relative_eq!(q.theta()[0], 0.5, epsilon = 1e-15);
        assert_eq!(q.theta()[1], 0.0);
    }

    #[test]
    fn xi_chart_examples() {
        let q = to_xi(&GaussianPoint::standard(3)).unwrap();
        assert_eq!(q.xi_mat(), &SymMatrix::identity(3));
        let p = GaussianPoint::new(SpdMatrix::identity(2), e1(2)).unwrap();
        let q = to_xi(&p).unwrap();
        assert_eq!(q.xi_mat(), &SymMatrix::from_diagonal(&[2.0, 1.0]));
        assert_eq!(q.xi(), &e1(2));
    }

    #[test]
    fn chart_domain_is_guarded() {
        let bad = ThetaPoint::new(SymMatrix::identity(2), DVector::zeros(2));
        assert!(matches!(bad, Err(GeomError::SingularInput(_))));
        // Ξ − ξξᵀ = 0
        let bad = XiPoint::new(SymMatrix::from_diagonal(&[1.0, 0.0]), e1(2));
        assert!(bad.is_err());
    }

    #[test]
    fn chart_roundtrips() {
        let mut s = Sampler::new(17);
        for n in 1..=3 {
            for _ in 0..200 {
                let p = s.point(n);
                let back = from_theta(&to_theta(&p).unwrap()).unwrap();
                let rel = (back.sigma().as_matrix() - p.sigma().as_matrix()).norm()
                    / p.sigma().as_matrix().norm();
                assert!(rel <= 1e-12, "theta roundtrip {rel:e}");
                assert!((back.mu() - p.mu()).norm() <= 1e-12 * (1.0 + p.mu().norm()));
                let back = from_xi(&to_xi(&p).unwrap()).unwrap();
                let rel = (back.sigma().as_matrix() - p.sigma().as_matrix()).norm()
                    / p.sigma().as_matrix().norm();
                assert!(rel <= 1e-12, "xi roundtrip {rel:e}");
            }
        }
    }

    #[test]
    fn potential_examples() {
        let two_pi = 2.0 * PI;
        let p = GaussianPoint::standard(2);
        assert_relative_eq!(psi_sigma_mu(&p), two_pi.ln(), epsilon = 1e-14);
        let p1 = GaussianPoint::new(SpdMatrix::identity(2), e1(2)).unwrap();
        assert_relative_eq!(psi_sigma_mu(&p1), 0.5 + two_pi.ln(), epsilon = 1e-14);
        let via_theta = potential(&ChartPoint::from_point(&p, Chart::Theta).unwrap());
        assert_relative_eq!(via_theta, two_pi.ln(), epsilon = 1e-14);
    }

    #[test]
    fn potentials_agree_across_charts() {
        let mut s = Sampler::new(23);
        for n in 1..=3 {
            for _ in 0..100 {
                let p = s.point(n);
                let a = psi_sigma_mu(&p);
                let b = psi_theta(&to_theta(&p).unwrap());
                let c = psi_xi(&to_xi(&p).unwrap());
                let scale = a.abs().max(1.0);
                assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
                assert!((a - c).abs() <= 1e-12 * scale, "{a} vs {c}");
            }
        }
    }

    #[test]
    fn legendre_gradient_uses_doubled_off_diagonal_convention() {
        let p = GaussianPoint::from_slices(&[1.5, 0.4, 0.4, 0.8], &[0.3, -0.7]).unwrap();
        let q = to_theta(&p).unwrap();
        let grad = legendre_gradient(&q).unwrap();
        let xi = to_xi(&p).unwrap();
        let m = xi.xi_mat().as_matrix();
        // coordinates (0,0), (0,1), (1,1), then ξ
        assert!((grad[0] - m[(0, 0)]).abs() < 1e-5);
        assert!((grad[1] - 2.0 * m[(0, 1)]).abs() < 1e-5);
        assert!((grad[2] - m[(1, 1)]).abs() < 1e-5);
        assert!((grad[3] - 0.3).abs() < 1e-5);
        assert!((grad[4] + 0.7).abs() < 1e-5);
    }

    #[test]
    fn legendre_eta_matches_xi_chart() {
        let q = to_theta(&GaussianPoint::standard(2)).unwrap();
        let eta = legendre_eta(&q).unwrap();
        assert!(eta.xi().amax() < 1e-10);
        let q = to_theta(&GaussianPoint::new(SpdMatrix::identity(2), e1(2)).unwrap()).unwrap();
        let eta = legendre_eta(&q).unwrap();
        assert!((eta.xi() - e1(2)).amax() < 1e-5);

        let mut s = Sampler::new(4);
        for _ in 0..50 {
            let p = s.point(2);
            let eta = legendre_eta(&to_theta(&p).unwrap()).unwrap();
            let want = to_xi(&p).unwrap();
            assert!((eta.xi_mat().as_matrix() - want.xi_mat().as_matrix()).amax() < 1e-5);
            assert!((eta.xi() - want.xi()).amax() < 1e-5);
        }
    }

    #[test]
    fn dual_potential_values() {
        // one-dimensional hand computation: ψ* = −½(1 + log(2πσ²)) at μ = 0
        for s2 in [0.3, 1.0, 4.0] {
            let p = GaussianPoint::from_slices(&[s2], &[0.0]).unwrap();
            let got = dual_potential(&to_theta(&p).unwrap()).unwrap();
            assert_relative_eq!(got, -0.5 * (1.0 + (2.0 * PI * s2).ln()), epsilon = 1e-13);
        }
        // Legendre identity and agreement with the η-side evaluation
        let p = GaussianPoint::from_slices(&[2.0, 0.0, 0.0, 2.0], &[0.0, 0.0]).unwrap();
        let q = to_theta(&p).unwrap();
        let eta = to_xi(&p).unwrap();
        let lhs = psi_theta(&q) + dual_potential(&q).unwrap();
        assert!((lhs - pairing(&q, &eta)).abs() < 1e-10);
        assert!((dual_potential_at(&eta).unwrap() - dual_potential(&q).unwrap()).abs() < 1e-12);
        // with μ = 0 the pairing is tr(ΘΞ) = −n/2
        assert_relative_eq!(pairing(&q, &eta), -1.0, epsilon = 1e-14);
    }

    #[test]
    fn hessian_check_examples() {
        let q = to_theta(&GaussianPoint::standard(2)).unwrap();
        assert!(hessian_check(&q).unwrap() <= 1e-4);
        let p = GaussianPoint::from_slices(&[2.0, 0.0, 0.0, 0.5], &[0.0, 1.0]).unwrap();
        let q = to_theta(&p).unwrap();
        assert!(hessian_check(&q).unwrap() <= 1e-4);
        assert!(hessian_check_dual(&q).unwrap() <= 1e-4);
    }

    #[test]
    fn hessian_residual_is_second_order() {
        let p = GaussianPoint::from_slices(&[2.0, 0.3, 0.3, 0.5], &[0.4, 1.0]).unwrap();
        let q = to_theta(&p).unwrap();
        let r = |h| {
            hessian_check_with(
                &q,
                HessianOptions {
                    rel_step: h,
                    richardson: false,
                },
            )
            .unwrap()
        };
        let ratio = r(2e-2) / r(1e-2);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn connections_average_to_levi_civita_and_are_dual() {
        let r = dual_connection_check(&GaussianPoint::standard(2), 100).unwrap();
        assert!(r.duality <= 1e-5 && r.averaging <= 1e-5, "{r:?}");
        let mut s = Sampler::new(9);
        let p = s.point(2);
        let here = dual_connection_check(&p, 50).unwrap();
        assert!(here.max() <= 1e-5, "{here:?}");
    }

    #[test]
    fn e_connection_is_flat_in_theta_chart() {
        // a straight line in θ coordinates is an e-geodesic: its (Σ, μ) image
        // has acceleration −Γᵉ(c', c')
        let p = GaussianPoint::from_slices(&[1.2, 0.2, 0.2, 0.7], &[0.5, -0.1]).unwrap();
        let q = to_theta(&p).unwrap();
        let dir = [0.1, -0.05, 0.2, 0.3, -0.2];
        let h = 1e-4;
        let at = |s: f64| {
            let c: Vec<f64> = q.coords().iter().zip(dir).map(|(a, d)| a + s * d).collect();
            from_theta(&ThetaPoint::from_coords(2, &c).unwrap())
                .unwrap()
                .coords()
        };
        let (c0, cp, cm) = (at(0.0), at(h), at(-h));
        let vel = (&cp - &cm) / (2.0 * h);
        let acc = (&cp - &c0 * 2.0 + &cm) / (h * h);
        let vel = TangentVector::from_coords(2, vel.as_slice()).unwrap();
        let gamma = e_connection(&p, &vel, &vel).unwrap();
        let residual = (acc + gamma.coords()).amax();
        assert!(residual < 1e-5, "{residual}");
    }
}
