//! The invariant suite behind `normgeo verify`.
//!
//! Every check draws its cases from a [`Sampler`] seeded with the suite seed
//! plus a per-check offset, so checks are independent of each other and of
//! the order they run in.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::charts::{
    dual_connection_check, from_theta, from_xi, hessian_check, psi_sigma_mu, psi_theta, psi_xi,
    to_theta, to_xi,
};
use crate::error::Result;
use crate::geodesy::quadrature::Quadrature;
use crate::geodesy::{
    covariant_accel, defect, fisher_distance_bvp, fisher_distance_leaf, fisher_geodesic_ode,
    fisher_length, transversal_killing_curve, CurveEvaluator, LeafGeodesic,
    TransversalKillingCurve, DEFAULT_T_MAX,
};
use crate::killing::{
    aff_embed, dphi, dphi_identity, dpsi_product, generator_for_velocity, killing_inner,
    killing_inner_matrix, phi, phi_inv, product_metric, psi_product, symmetric_geodesic,
    TracelessSym, UnimodularSpd,
};
use crate::manifold::{
    affine_act, affine_act_tangent, connection_coeff, curvature, fiber_second_fundamental_form,
    fisher_inner, fisher_norm, GaussianPoint, TangentVector,
};
use crate::sampling::Sampler;
use crate::spd::{gen_eigvals, spd_sqrt, sym_exp, sym_log, SpdMatrix, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    fn cases(self, full: usize) -> usize {
        match self {
            Level::Fast => full.div_ceil(10).max(3),
            Level::Full => full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceProfile {
    Default,
    Strict,
}

impl ToleranceProfile {
    pub fn factor(self) -> f64 {
        match self {
            ToleranceProfile::Default => 1.0,
            ToleranceProfile::Strict => 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub level: Level,
    pub seed: u64,
    pub profile: ToleranceProfile,
    /// Extra multiplier on every tolerance; a tiny value forces failures.
    pub tolerance_scale: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            level: Level::Fast,
            seed: 0,
            profile: ToleranceProfile::Default,
            tolerance_scale: 1.0,
        }
    }
}

type Check = fn(&mut Sampler, usize) -> Result<f64>;

/// `(name, base tolerance, cases at full level, check)`.
const CHECKS: &[(&str, f64, usize, Check)] = &[
    ("spd_function_roundtrips", 1e-11, 100, spd_roundtrips),
    ("gen_eigvals_congruence", 1e-9, 100, gen_eig_congruence),
    ("connection_symmetry", 0.0, 100, connection_symmetry),
    ("curvature_identities", 1e-12, 100, curvature_identities),
    ("curvature_fd_oracle", 1e-5, 20, curvature_fd_agreement),
    (
        "pure_mean_sectional_quarter",
        1e-12,
        10,
        pure_mean_sectional,
    ),
    ("fiber_second_fundamental_form", 0.0, 10, fiber_form),
    ("fisher_affine_invariance", 1e-11, 200, fisher_invariance),
    ("killing_affine_invariance", 1e-11, 200, killing_invariance),
    ("phi_equivariance", 1e-11, 200, phi_equivariance),
    (
        "killing_is_half_trace_pullback",
        1e-12,
        100,
        killing_pullback,
    ),
    ("non_isometry_constants", 1e-12, 30, non_isometry),
    ("psi_product_isometry", 1e-10, 100, psi_isometry),
    ("chart_roundtrips", 1e-12, 100, chart_roundtrips),
    ("potential_agreement", 1e-12, 100, potential_agreement),
    ("hessian_metric", 1e-4, 100, hessian_metric),
    ("dual_connections", 1e-5, 100, dual_connections),
    ("leaf_confinement", 1e-12, 10, leaf_confinement),
    ("energy_conservation", 1e-7, 10, energy_conservation),
    ("leaf_distance_vs_quadrature", 1e-4, 50, leaf_vs_quadrature),
    ("leaf_distance_vs_shooting", 1e-4, 20, leaf_vs_shooting),
    ("leaf_vs_symmetric_geodesic", 1e-8, 20, leaf_vs_symmetric),
    ("transversal_closed_form_chain", 1e-10, 3, transversal_chain),
    ("defect_quadrature_and_bound", 1e-8, 3, defect_bound),
    ("not_a_fisher_geodesic", 1e-12, 3, negative_control),
    ("shooting_triangle_inequality", 1e-3, 10, triangle),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs every check. Errors inside a check count as a failure with an
/// infinite residual.
pub fn run_suite(config: &SuiteConfig) -> Vec<CheckResult> {
    let scale = config.profile.factor() * config.tolerance_scale;
    CHECKS
        .iter()
        .enumerate()
        .map(|(k, &(name, tol, full, check))| {
            let cases = config.level.cases(full);
            let mut sampler =
                Sampler::new(config.seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
            let worst = check(&mut sampler, cases).unwrap_or(f64::INFINITY);
            let tolerance = tol * scale;
            CheckResult {
                name: name.to_string(),
                cases,
                worst,
                tolerance,
                passed: worst <= tolerance,
            }
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn dims(k: usize) -> usize {
    1 + k % 3
}

fn unit(p: &GaussianPoint, t: TangentVector) -> Result<TangentVector> {
    let norm = fisher_norm(p, &t)?;
    Ok(t.scale(1.0 / norm))
}

fn spd_roundtrips(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let p = s.spd(dims(k) + 1);
        let m = p.as_matrix();
        let r = spd_sqrt(&p)?;
        worst = worst.max((r.as_matrix() * r.as_matrix() - m).amax() / m.amax());
        let back = sym_exp(&sym_log(&p)?)?;
        worst = worst.max((back.as_matrix() - m).amax() / m.amax());
    }
    Ok(worst)
}

fn gen_eig_congruence(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = dims(k) + 1;
        let (a, b) = (s.spd(n), s.spd(n));
        let g = s.affine(n);
        let cong = |m: &SpdMatrix| {
            SpdMatrix::new(SymMatrix::symmetrize(
                g.a() * m.as_matrix() * g.a().transpose(),
            ))
        };
        let before = gen_eigvals(&a, &b)?;
        let after = gen_eigvals(&cong(&a)?, &cong(&b)?)?;
        for (x, y) in before.iter().zip(&after) {
            worst = worst.max((x - y).abs() / x.abs());
        }
    }
    Ok(worst)
}

fn connection_symmetry(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = dims(k);
        let p = s.point(n);
        let (a, b) = (s.tangent(n), s.tangent(n));
        worst = worst.max(
            connection_coeff(&p, &a, &b)?
                .sub(&connection_coeff(&p, &b, &a)?)
                .max_abs(),
        );
    }
    Ok(worst)
}

fn curvature_identities(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = dims(k);
        let p = s.point(n);
        let t: Vec<TangentVector> = (0..4)
            .map(|_| unit(&p, s.tangent(n)))
            .collect::<Result<_>>()?;
        let r =
            |a: usize, b: usize, c: usize, d: usize| curvature(&p, [&t[a], &t[b], &t[c], &t[d]]);
        let base = r(0, 1, 2, 3)?;
        worst = worst.max((base + r(1, 0, 2, 3)?).abs());
        worst = worst.max((base + r(0, 1, 3, 2)?).abs());
        worst = worst.max((base - r(2, 3, 0, 1)?).abs());
        worst = worst.max((base + r(1, 2, 0, 3)? + r(2, 0, 1, 3)?).abs());
    }
    Ok(worst)
}

/// `R(X,Y,Z,W)` from finite differences of the Christoffel map:
/// `R(X,Y)Z = (D_XΓ)(Y,Z) − (D_YΓ)(X,Z) + Γ(X,Γ(Y,Z)) − Γ(Y,Γ(X,Z))`.
pub fn curvature_fd(p: &GaussianPoint, t: [&TangentVector; 4], h: f64) -> Result<f64> {
    let [x, y, z, w] = t;
    let d_gamma =
        |dir: &TangentVector, a: &TangentVector, b: &TangentVector| -> Result<TangentVector> {
            let plus = connection_coeff(&p.offset(dir, h)?, a, b)?;
            let minus = connection_coeff(&p.offset(dir, -h)?, a, b)?;
            Ok(plus.sub(&minus).scale(0.5 / h))
        };
    let rz = d_gamma(x, y, z)?
        .sub(&d_gamma(y, x, z)?)
        .add(&connection_coeff(p, x, &connection_coeff(p, y, z)?)?)
        .sub(&connection_coeff(p, y, &connection_coeff(p, x, z)?)?);
    fisher_inner(p, &rz, w)
}

fn curvature_fd_agreement(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let p = s.point(2);
        let t: Vec<TangentVector> = (0..4)
            .map(|_| unit(&p, s.tangent(2)))
            .collect::<Result<_>>()?;
        let exact = curvature(&p, [&t[0], &t[1], &t[2], &t[3]])?;
        let fd = curvature_fd(&p, [&t[0], &t[1], &t[2], &t[3]], 1e-5)?;
        worst = worst.max((exact - fd).abs());
    }
    Ok(worst)
}

fn pure_mean_sectional(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = 2 + k % 3;
        let p = GaussianPoint::new(SpdMatrix::identity(n), s.gaussian_vector(n))?;
        let e = |i: usize| {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            TangentVector::mean_dir(v)
        };
        let (a, b) = (e(0), e(n - 1));
        worst = worst.max((curvature(&p, [&a, &b, &b, &a])? - 0.25).abs());
    }
    Ok(worst)
}

fn fiber_form(_: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=cases.min(4) {
        let p = GaussianPoint::standard(n);
        for i in 0..n {
            for j in 0..n {
                let mut ei = DVector::zeros(n);
                ei[i] = 1.0;
                let mut ej = DVector::zeros(n);
                ej[j] = 1.0;
                let mut half = DMatrix::zeros(n, n);
                half[(i, j)] += 0.5;
                half[(j, i)] += 0.5;
                let b = fiber_second_fundamental_form(i, j, n)?;
                let gamma = connection_coeff(
                    &p,
                    &TangentVector::mean_dir(ei),
                    &TangentVector::mean_dir(ej),
                )?;
                worst = worst.max((b.as_matrix() - &half).amax());
                worst = worst.max((gamma.x().as_matrix() - &half).amax());
            }
        }
    }
    Ok(worst)
}

fn fisher_invariance(s: &mut Sampler, cases: usize) -> Result<f64> {
    invariance(s, cases, fisher_inner)
}

fn killing_invariance(s: &mut Sampler, cases: usize) -> Result<f64> {
    invariance(s, cases, killing_inner)
}

fn invariance(
    s: &mut Sampler,
    cases: usize,
    metric: fn(&GaussianPoint, &TangentVector, &TangentVector) -> Result<f64>,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = dims(k);
        let (p, g) = (s.point(n), s.affine(n));
        let (a, b) = (s.tangent(n), s.tangent(n));
        let before = metric(&p, &a, &b)?;
        let after = metric(
            &affine_act(&g, &p)?,
            &affine_act_tangent(&g, &a)?,
            &affine_act_tangent(&g, &b)?,
        )?;
        let scale = metric(&p, &a, &a)?.abs().sqrt() * metric(&p, &b, &b)?.abs().sqrt();
        worst = worst.max((before - after).abs() / scale.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

fn phi_equivariance(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = dims(k);
        let (p, g) = (s.point(n), s.affine(n));
        let rho = aff_embed(&g)?;
        let lhs = phi(&affine_act(&g, &p)?)?;
        let rhs = &rho * phi(&p)?.as_matrix() * rho.transpose();
        worst = worst.max((lhs.as_matrix() - &rhs).norm() / rhs.norm());
    }
    Ok(worst)
}

fn killing_pullback(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = dims(k);
        let p = GaussianPoint::standard(n);
        let (a, b) = (s.tangent(n), s.tangent(n));
        let id = UnimodularSpd::identity(n + 1);
        let via =
            killing_inner_matrix(&id, dphi_identity(&a).as_sym(), dphi_identity(&b).as_sym())?;
        worst = worst.max(rel(killing_inner(&p, &a, &b)?, via));
        // away from the identity through the transported differential
        let q = s.point(n);
        let via = killing_inner_matrix(&phi(&q)?, &dphi(&q, &a)?, &dphi(&q, &b)?)?;
        worst = worst.max(rel(killing_inner(&q, &a, &b)?, via));
    }
    Ok(worst)
}

fn non_isometry(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = [2, 3, 5][k % 3];
        let lambda = s.uniform(-3.0, 3.0);
        let p = GaussianPoint::standard(n);
        let t = TangentVector::sigma_dir(SymMatrix::identity(n).scale(lambda));
        let nf = n as f64;
        let l2 = lambda * lambda;
        worst = worst.max(((fisher_inner(&p, &t, &t)? - 0.5 * nf * l2) / (0.5 * nf * l2)).abs());
        let want = 0.5 * nf / (nf + 1.0) * l2;
        worst = worst.max(((killing_inner(&p, &t, &t)? - want) / want).abs());
    }
    Ok(worst)
}

fn psi_isometry(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = 2 + k % 2;
        let sigma = s.spd(n);
        let p = GaussianPoint::new(sigma.clone(), DVector::zeros(n))?;
        let (x, y) = (s.sym(n), s.sym(n));
        let want = fisher_inner(
            &p,
            &TangentVector::sigma_dir(x.clone()),
            &TangentVector::sigma_dir(y.clone()),
        )?;
        let (_, base) = psi_product(&sigma)?;
        let (dx, dy) = (dpsi_product(&sigma, &x)?, dpsi_product(&sigma, &y)?);
        worst = worst.max(rel(
            product_metric(&base, (dx.0, &dx.1), (dy.0, &dy.1))?,
            want,
        ));
    }
    Ok(worst)
}

fn chart_roundtrips(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let p = s.point(dims(k));
        let c = p.coords();
        let scale = 1.0 + c.amax();
        worst = worst.max((from_theta(&to_theta(&p)?)?.coords() - &c).amax() / scale);
        worst = worst.max((from_xi(&to_xi(&p)?)?.coords() - &c).amax() / scale);
    }
    Ok(worst)
}

fn potential_agreement(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let p = s.point(dims(k));
        let a = psi_sigma_mu(&p);
        worst = worst.max(rel(psi_theta(&to_theta(&p)?), a));
        worst = worst.max(rel(psi_xi(&to_xi(&p)?), a));
    }
    Ok(worst)
}

fn hessian_metric(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let p = s.point(1 + k % 2);
        worst = worst.max(hessian_check(&to_theta(&p)?)?);
    }
    Ok(worst)
}

fn dual_connections(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let p = s.point(1 + k % 2);
        worst = worst.max(dual_connection_check(&p, 5)?.max());
    }
    Ok(worst)
}

fn leaf_confinement(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = dims(k);
        let p = s.point(n);
        let x = s.sym(n).scale(0.5);
        let c = fisher_geodesic_ode(&p, &TangentVector::sigma_dir(x), 1.0, 200)?;
        for q in c.points() {
            worst = worst.max((q.mu() - p.mu()).amax());
        }
    }
    Ok(worst)
}

fn energy_conservation(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = dims(k);
        let p = s.point(n);
        let v = unit(&p, s.tangent(n))?;
        let c = fisher_geodesic_ode(&p, &v, 1.0, 1000)?;
        for (q, w) in c.points().iter().zip(c.velocities().unwrap_or_default()) {
            worst = worst.max((fisher_inner(q, w, w)? - 1.0).abs());
        }
    }
    Ok(worst)
}

fn same_mean_pair(s: &mut Sampler, n: usize) -> Result<(GaussianPoint, GaussianPoint)> {
    let mu = s.gaussian_vector(n);
    Ok((
        GaussianPoint::new(s.spd(n), mu.clone())?,
        GaussianPoint::new(s.spd(n), mu)?,
    ))
}

fn leaf_vs_quadrature(s: &mut Sampler, cases: usize) -> Result<f64> {
    let quad = Quadrature::default();
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let (p1, p2) = same_mean_pair(s, 2 + k % 2)?;
        let closed = fisher_distance_leaf(&p1, &p2)?;
        let curve = LeafGeodesic::new(p1.sigma(), p2.sigma(), p1.mu().clone())?;
        worst = worst.max((fisher_length(&curve, 0.0, 1.0, &quad)? - closed).abs() / closed);
    }
    Ok(worst)
}

fn leaf_vs_shooting(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let (p1, p2) = same_mean_pair(s, 2 + k % 2)?;
        let closed = fisher_distance_leaf(&p1, &p2)?;
        worst = worst.max((fisher_distance_bvp(&p1, &p2)? - closed).abs() / closed);
    }
    Ok(worst)
}

fn leaf_vs_symmetric(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = 2 + k % 2;
        let (p1, p2) = same_mean_pair(s, n)?;
        let leaf = LeafGeodesic::new(p1.sigma(), p2.sigma(), p1.mu().clone())?;
        let big = phi(&p1)?;
        let vel = dphi(&p1, &leaf.jet(0.0)?.vel)?;
        let x0 = generator_for_velocity(&big, &vel)?;
        for j in 0..=10 {
            let t = j as f64 / 10.0;
            let via = phi_inv(&symmetric_geodesic(&big, &x0, t)?)?;
            let direct = leaf.point(t)?;
            worst = worst.max((via.coords() - direct.coords()).amax());
        }
    }
    Ok(worst)
}

fn canonical_generator(n: usize) -> Result<TracelessSym> {
    let mut x = DMatrix::zeros(n + 1, n + 1);
    x[(0, n)] = 1.0;
    x[(n, 0)] = 1.0;
    TracelessSym::new(SymMatrix::new(x)?)
}

fn transversal_chain(_: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=cases {
        let x0 = canonical_generator(n)?;
        for j in 0..=40 {
            let t = -2.0 + 0.1 * j as f64;
            let (p, v, a) = transversal_killing_curve(n, t)?;
            let via = phi_inv(&symmetric_geodesic(
                &UnimodularSpd::identity(n + 1),
                &x0,
                t,
            )?)?;
            worst = worst.max((via.coords() - p.coords()).amax());
            let ca = covariant_accel(&p, &v, &a)?;
            let c = (2.0 * t).cosh();
            worst =
                worst.max((fisher_norm(&p, &ca)? - 2.0 * (2.0 * n as f64).sqrt() / (c * c)).abs());
        }
    }
    Ok(worst)
}

fn defect_bound(_: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=cases {
        let report = defect(&TransversalKillingCurve { n }, DEFAULT_T_MAX, 64)?;
        worst = worst.max(report.max_reference_error().unwrap_or(f64::INFINITY));
        let bound = (2.0 * n as f64).sqrt() / DEFAULT_T_MAX + 1e-6;
        worst = worst.max(report.last_estimate() - bound);
        let late = report
            .t_values
            .iter()
            .zip(&report.defect_estimates)
            .filter(|(t, _)| **t >= 1.0);
        let decreasing = late
            .map(|(_, d)| *d)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] < w[0]);
        if !decreasing {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

fn negative_control(_: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=cases {
        let curve = TransversalKillingCurve { n };
        let j = curve.jet(0.0)?;
        let norm = fisher_norm(&j.point, &covariant_accel(&j.point, &j.vel, &j.acc)?)?;
        if norm <= 0.1 {
            return Ok(f64::INFINITY);
        }
        worst = worst.max((norm - 2.0 * (2.0 * n as f64).sqrt()).abs());
    }
    Ok(worst)
}

fn triangle(s: &mut Sampler, cases: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..cases {
        let n = 1 + k % 2;
        let (a, b, c) = (s.point(n), s.point(n), s.point(n));
        let (ab, bc, ac) = (
            fisher_distance_bvp(&a, &b)?,
            fisher_distance_bvp(&b, &c)?,
            fisher_distance_bvp(&a, &c)?,
        );
        worst = worst.max(ac - ab - bc);
    }
    Ok(worst.max(0.0))
}
