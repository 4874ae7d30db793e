//! Geodesics, distances and the geodesic defect.

mod defect;
mod leaf;
mod ode;
pub mod quadrature;
mod shooting;
mod transversal;

pub use defect::{defect, defect_on_grid, geometric_grid, DefectReport, DEFAULT_T_MAX};
pub use leaf::{
    fisher_distance_leaf, fisher_length, killing_distance, leaf_geodesic, LeafGeodesic,
};
pub use ode::{
    covariant_accel, fisher_geodesic_ode, geodesic_endpoint, DEFAULT_STEPS_PER_UNIT, MIN_STEPS,
};
pub use shooting::{fisher_distance_bvp, solve_geodesic_bvp, BvpOptions, BvpSolution};
pub use transversal::{
    normalize_transversal, transversal_killing_curve, TransversalGeodesic, TransversalKillingCurve,
};

use std::cmp::Ordering;

use crate::error::{check_dim, GeomError, Result};
use crate::manifold::{fisher_norm, GaussianPoint, TangentVector};

/// Position, velocity and acceleration of a curve at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveJet {
    pub point: GaussianPoint,
    pub vel: TangentVector,
    pub acc: TangentVector,
}

/// A curve known in closed form up to second order.
pub trait CurveEvaluator {
    fn jet(&self, t: f64) -> Result<CurveJet>;

    /// `‖∇_{c'}c'‖` at `t`. Curves that are isometric images of a simpler
    /// curve can evaluate it there, where it is better conditioned.
    fn accel_norm(&self, t: f64) -> Result<f64> {
        let j = self.jet(t)?;
        fisher_norm(&j.point, &ode::covariant_accel(&j.point, &j.vel, &j.acc)?)
    }

    /// `∫₀ᵗ ‖∇_{c'}c'‖ ds` when it is known analytically.
    fn reference_integral(&self, _t: f64) -> Option<f64> {
        None
    }
}

impl<F> CurveEvaluator for F
where
    F: Fn(f64) -> Result<CurveJet>,
{
    fn jet(&self, t: f64) -> Result<CurveJet> {
        self(t)
    }
}

/// A curve sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    params: Vec<f64>,
    points: Vec<GaussianPoint>,
    velocities: Option<Vec<TangentVector>>,
}

impl SampledCurve {
    pub fn new(
        params: Vec<f64>,
        points: Vec<GaussianPoint>,
        velocities: Option<Vec<TangentVector>>,
    ) -> Result<Self> {
        check_dim(params.len(), points.len())?;
        if let Some(v) = &velocities {
            check_dim(params.len(), v.len())?;
        }
        if params.is_empty() {
            return Err(GeomError::Domain("empty curve".into()));
        }
        if params
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
        {
            return Err(GeomError::Domain(
                "curve parameters must increase strictly".into(),
            ));
        }
        let n = points[0].dim();
        for p in &points {
            check_dim(n, p.dim())?;
        }
        if let Some(vs) = &velocities {
            for v in vs {
                check_dim(n, v.dim())?;
            }
        }
        Ok(Self {
            params,
            points,
            velocities,
        })
    }

    /// Samples `curve` at the given parameters.
    pub fn from_evaluator(curve: &impl CurveEvaluator, params: &[f64]) -> Result<Self> {
        let jets = params
            .iter()
            .map(|&t| curve.jet(t))
            .collect::<Result<Vec<_>>>()?;
        let (points, vels) = jets.into_iter().map(|j| (j.point, j.vel)).unzip();
        Self::new(params.to_vec(), points, Some(vels))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[GaussianPoint] {
        &self.points
    }

    pub fn velocities(&self) -> Option<&[TangentVector]> {
        self.velocities.as_deref()
    }

    pub fn first(&self) -> &GaussianPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &GaussianPoint {
        &self.points[self.points.len() - 1]
    }
}

/// `k + 1` equally spaced parameters on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect()
}
