//! Property tests for the geometric invariants. Each case draws its inputs
//! from a [`Sampler`] seeded by proptest, so failures shrink to a seed.

use nalgebra::DVector;
use normgeo::charts::{from_theta, from_xi, psi_sigma_mu, psi_theta, psi_xi, to_theta, to_xi};
use normgeo::geodesy::{defect, fisher_geodesic_ode, TransversalGeodesic};
use normgeo::killing::{aff_embed, dpsi_product, killing_inner, phi, product_metric, psi_product};
use normgeo::manifold::{
    affine_act, affine_act_tangent, connection_coeff, curvature, fisher_inner, fisher_norm,
    AffineElement, GaussianPoint, TangentVector,
};
use normgeo::sampling::Sampler;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn unit(p: &GaussianPoint, t: TangentVector) -> TangentVector {
    let norm = fisher_norm(p, &t).unwrap();
    t.scale(1.0 / norm)
}

fn case() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_compatibility((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let p = s.point(n);
        let (a, b, c) = (s.tangent(n), s.tangent(n), s.tangent(n));
        let h = 1e-5 * (1.0 + p.sigma().as_matrix().amax());
        let plus = fisher_inner(&p.offset(&a, h).unwrap(), &b, &c).unwrap();
        let minus = fisher_inner(&p.offset(&a, -h).unwrap(), &b, &c).unwrap();
        let lhs = (plus - minus) / (2.0 * h);
        let rhs = fisher_inner(&p, &connection_coeff(&p, &a, &b).unwrap(), &c).unwrap()
            + fisher_inner(&p, &b, &connection_coeff(&p, &a, &c).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-5 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn connection_is_symmetric((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let p = s.point(n);
        let (a, b) = (s.tangent(n), s.tangent(n));
        prop_assert_eq!(connection_coeff(&p, &a, &b).unwrap(), connection_coeff(&p, &b, &a).unwrap());
    }

    #[test]
    fn affine_action_is_an_isometry((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let (p, g) = (s.point(n), s.affine(n));
        let (a, b) = (s.tangent(n), s.tangent(n));
        let (gp, ga, gb) = (
            affine_act(&g, &p).unwrap(),
            affine_act_tangent(&g, &a).unwrap(),
            affine_act_tangent(&g, &b).unwrap(),
        );
        let scale = fisher_norm(&p, &a).unwrap() * fisher_norm(&p, &b).unwrap();
        let f = fisher_inner(&p, &a, &b).unwrap();
        prop_assert!((f - fisher_inner(&gp, &ga, &gb).unwrap()).abs() <= 1e-12 * scale.max(1.0));
        let k = killing_inner(&p, &a, &b).unwrap();
        prop_assert!((k - killing_inner(&gp, &ga, &gb).unwrap()).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn curvature_symmetries((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let p = s.point(n);
        let t: Vec<TangentVector> = (0..4).map(|_| unit(&p, s.tangent(n))).collect();
        let r = |a: usize, b: usize, c: usize, d: usize| curvature(&p, [&t[a], &t[b], &t[c], &t[d]]).unwrap();
        let base = r(0, 1, 2, 3);
        prop_assert!((base + r(1, 0, 2, 3)).abs() <= 1e-12);
        prop_assert!((base + r(0, 1, 3, 2)).abs() <= 1e-12);
        prop_assert!((base - r(2, 3, 0, 1)).abs() <= 1e-12);
        prop_assert!((base + r(1, 2, 0, 3) + r(2, 0, 1, 3)).abs() <= 1e-12);
    }

    #[test]
    fn curvature_reduces_to_the_standard_point((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let p = s.point(n);
        let t: Vec<TangentVector> = (0..4).map(|_| s.tangent(n)).collect();
        let to_standard = AffineElement::from_point(&p).inverse().unwrap();
        let moved: Vec<TangentVector> = t.iter().map(|x| affine_act_tangent(&to_standard, x).unwrap()).collect();
        let here = curvature(&p, [&t[0], &t[1], &t[2], &t[3]]).unwrap();
        let there = curvature(&GaussianPoint::standard(n), [&moved[0], &moved[1], &moved[2], &moved[3]]).unwrap();
        let scale: f64 = t.iter().map(|x| fisher_norm(&p, x).unwrap()).product();
        prop_assert!((here - there).abs() <= 1e-10 * scale.max(1.0), "{here} vs {there}");
    }

    #[test]
    fn fisher_minus_killing_is_the_trace_product((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let p = s.point(n);
        let (a, b) = (s.tangent(n), s.tangent(n));
        let si = p.sigma_inv();
        let term = (si * a.x().as_matrix()).trace() * (si * b.x().as_matrix()).trace() / (2.0 * (n as f64 + 1.0));
        let diff = fisher_inner(&p, &a, &b).unwrap() - killing_inner(&p, &a, &b).unwrap();
        prop_assert!((diff - term).abs() <= 1e-12 * (1.0 + term.abs()));
    }

    #[test]
    fn phi_is_equivariant((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let (p, g) = (s.point(n), s.affine(n));
        let rho = aff_embed(&g).unwrap();
        let lhs = phi(&affine_act(&g, &p).unwrap()).unwrap();
        let base = phi(&p).unwrap();
        let rhs = &rho * base.as_matrix() * rho.transpose();
        prop_assert!((lhs.as_matrix() - &rhs).norm() <= 1e-11 * base.as_matrix().norm() * rho.norm().powi(2));
    }

    #[test]
    fn psi_pulls_back_the_product_metric((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let sigma = s.spd(n + 1);
        let (x, y) = (s.sym(n + 1), s.sym(n + 1));
        let p = GaussianPoint::new(sigma.clone(), DVector::zeros(n + 1)).unwrap();
        let want = fisher_inner(&p, &TangentVector::sigma_dir(x.clone()), &TangentVector::sigma_dir(y.clone())).unwrap();
        let (_, base) = psi_product(&sigma).unwrap();
        let (dx, dy) = (dpsi_product(&sigma, &x).unwrap(), dpsi_product(&sigma, &y).unwrap());
        prop_assert!(rel(product_metric(&base, (dx.0, &dx.1), (dy.0, &dy.1)).unwrap(), want) <= 1e-10);
    }

    #[test]
    fn charts_round_trip_and_potentials_agree((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let p = s.point(n);
        let c = p.coords();
        let scale = 1.0 + c.amax();
        prop_assert!((from_theta(&to_theta(&p).unwrap()).unwrap().coords() - &c).amax() <= 1e-12 * scale);
        prop_assert!((from_xi(&to_xi(&p).unwrap()).unwrap().coords() - &c).amax() <= 1e-12 * scale);
        let psi = psi_sigma_mu(&p);
        prop_assert!(rel(psi_theta(&to_theta(&p).unwrap()), psi) <= 1e-12);
        prop_assert!(rel(psi_xi(&to_xi(&p).unwrap()), psi) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn geodesic_energy_is_conserved((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let p = s.point(n);
        let v = unit(&p, s.tangent(n));
        let c = fisher_geodesic_ode(&p, &v, 1.0, 1000).unwrap();
        for (q, w) in c.points().iter().zip(c.velocities().unwrap()) {
            prop_assert!((fisher_inner(q, w, w).unwrap() - 1.0).abs() <= 1e-7);
        }
    }

    #[test]
    fn leaf_geodesics_keep_the_mean((seed, n) in case()) {
        let mut s = Sampler::new(seed);
        let p = s.point(n);
        let c = fisher_geodesic_ode(&p, &TangentVector::sigma_dir(s.sym(n).scale(0.5)), 1.0, 200).unwrap();
        for q in c.points() {
            prop_assert!((q.mu() - p.mu()).amax() <= 1e-12);
        }
    }

    #[test]
    fn defect_partial_integrals_are_monotone((seed, n) in case(), t_max in 1.0..60.0f64) {
        let mut s = Sampler::new(seed);
        let p = s.point(n);
        let curve = TransversalGeodesic::new(&p, &TangentVector::mean_dir(s.gaussian_vector(n))).unwrap();
        let report = defect(&curve, t_max, 64).unwrap();
        prop_assert!(report.partial_integrals.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(report.max_reference_error().unwrap() <= 1e-8 * (1.0 + curve.speed()));
    }

    #[test]
    fn report_numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = serde_json::to_string(&x).unwrap();
        prop_assert_eq!(serde_json::from_str::<f64>(&text).unwrap(), x);
    }
}
