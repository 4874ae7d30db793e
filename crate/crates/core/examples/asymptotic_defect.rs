//! The Killing geodesic orthogonal to the covariance leaf is not a Fisher
//! geodesic, but its averaged covariant acceleration decays like 1/t.

use normgeo::geodesy::{defect, TransversalGeodesic, DEFAULT_T_MAX};
use normgeo::manifold::{GaussianPoint, TangentVector};

fn main() -> normgeo::Result<()> {
    let p0 = GaussianPoint::from_slices(&[2.0, 0.3, 0.3, 1.0], &[1.0, -1.0])?;
    let v0 = TangentVector::from_slices(&[0.0; 4], &[0.5, 1.5])?;
    let curve = TransversalGeodesic::new(&p0, &v0)?;
    let report = defect(&curve, DEFAULT_T_MAX, 64)?;
    let reference = report
        .closed_form_reference
        .as_ref()
        .expect("known in closed form");

    println!(
        "{:>10} {:>14} {:>14} {:>14}",
        "t", "integrand", "δ(t)", "analytic δ(t)"
    );
    for k in (0..report.t_values.len()).step_by(5) {
        let t = report.t_values[k];
        println!(
            "{t:>10.4} {:>14.6e} {:>14.6e} {:>14.6e}",
            report.integrands[k],
            report.defect_estimates[k],
            reference[k] / t
        );
    }
    println!(
        "max quadrature error {:.2e}",
        report.max_reference_error().unwrap_or(f64::NAN)
    );
    Ok(())
}
