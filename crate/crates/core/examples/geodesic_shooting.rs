//! Fisher distance between normals with different means by shooting.

use normgeo::geodesy::killing_distance;
use normgeo::geodesy::{fisher_geodesic_ode, solve_geodesic_bvp, BvpOptions};
use normgeo::killing::phi;
use normgeo::manifold::{fisher_inner, GaussianPoint};

fn main() -> normgeo::Result<()> {
    let p1 = GaussianPoint::from_slices(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0])?;
    let p2 = GaussianPoint::from_slices(&[0.5, 0.1, 0.1, 2.0], &[1.5, -0.5])?;

    let sol = solve_geodesic_bvp(&p1, &p2, &BvpOptions::default())?;
    println!("Fisher distance  {:.12}", sol.distance);
    println!(
        "Killing distance {:.12}",
        killing_distance(&phi(&p1)?, &phi(&p2)?)?
    );
    println!(
        "Newton iterations {}, endpoint gap {:.2e}",
        sol.iterations, sol.residual
    );

    let curve = fisher_geodesic_ode(&p1, &sol.v0, 1.0, 1000)?;
    let end = curve.last();
    let v = &curve.velocities().expect("recorded")[curve.len() - 1];
    println!("endpoint μ = {:?}", end.mu().as_slice());
    println!(
        "final energy {:.12} (initial {:.12})",
        fisher_inner(end, v, v)?,
        sol.distance.powi(2)
    );
    Ok(())
}
