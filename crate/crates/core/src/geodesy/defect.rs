//! The geodesic defect `δ(c) = lim (1/t) ∫₀ᵗ ‖∇_{c'}c'‖ ds`.

use std::cmp::Ordering;

use super::quadrature::{Quadrature, NODES_PER_UNIT};
use super::CurveEvaluator;
use crate::error::{GeomError, Result};

pub const DEFAULT_T_MAX: f64 = 50.0;
const GRID_POINTS: usize = 41;
const GRID_START: f64 = 1.0 / 16.0;

/// Running integrals of the covariant acceleration norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub t_values: Vec<f64>,
    /// `‖∇_{c'}c'‖` at each grid value.
    pub integrands: Vec<f64>,
    /// `∫₀ᵗ ‖∇_{c'}c'‖ ds`.
    pub partial_integrals: Vec<f64>,
    /// `partial_integrals[k] / t_values[k]`.
    pub defect_estimates: Vec<f64>,
    /// Analytic partial integrals, when the curve provides them.
    pub closed_form_reference: Option<Vec<f64>>,
}

impl DefectReport {
    /// Largest gap between quadrature and analytic partial integrals.
    pub fn max_reference_error(&self) -> Option<f64> {
        let refs = self.closed_form_reference.as_ref()?;
        Some(
            self.partial_integrals
                .iter()
                .zip(refs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    pub fn last_estimate(&self) -> f64 {
        *self.defect_estimates.last().expect("non-empty grid")
    }
}

/// `count` geometrically spaced values ending at `t_max`, starting at
/// `min(1/16, t_max)`.
pub fn geometric_grid(t_max: f64, count: usize) -> Vec<f64> {
    let start = GRID_START.min(t_max);
    if count <= 1 || start == t_max {
        return vec![t_max];
    }
    let ratio = (t_max / start).powf(1.0 / (count - 1) as f64);
    let mut grid: Vec<f64> = (0..count).map(|k| start * ratio.powi(k as i32)).collect();
    grid[count - 1] = t_max;
    grid
}

/// Defect report on the default geometric grid up to `t_max`, using
/// `quadrature_points` Gauss–Legendre nodes per unit panel.
pub fn defect(
    curve: &impl CurveEvaluator,
    t_max: f64,
    quadrature_points: usize,
) -> Result<DefectReport> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(GeomError::Domain(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    defect_on_grid(
        curve,
        &geometric_grid(t_max, GRID_POINTS),
        quadrature_points,
    )
}

/// Defect report at the given strictly increasing positive grid.
pub fn defect_on_grid(
    curve: &impl CurveEvaluator,
    grid: &[f64],
    quadrature_points: usize,
) -> Result<DefectReport> {
    if grid.is_empty()
        || grid[0] <= 0.0
        || grid
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
    {
        return Err(GeomError::Domain(
            "grid must be positive and strictly increasing".into(),
        ));
    }
    let quad = Quadrature::new(if quadrature_points == 0 {
        NODES_PER_UNIT
    } else {
        quadrature_points
    });
    let integrand = |t: f64| curve.accel_norm(t);
    let mut partial = Vec::with_capacity(grid.len());
    let mut running = 0.0;
    let mut lo = 0.0;
    for &t in grid {
        running += quad.integrate(lo, t, integrand)?;
        partial.push(running);
        lo = t;
    }
    let integrands = grid
        .iter()
        .map(|&t| integrand(t))
        .collect::<Result<Vec<_>>>()?;
    let defect_estimates = partial.iter().zip(grid).map(|(p, t)| p / t).collect();
    let closed_form_reference = grid
        .iter()
        .map(|&t| curve.reference_integral(t))
        .collect::<Option<Vec<_>>>();
    Ok(DefectReport {
        t_values: grid.to_vec(),
        integrands,
        partial_integrals: partial,
        defect_estimates,
        closed_form_reference,
    })
}
