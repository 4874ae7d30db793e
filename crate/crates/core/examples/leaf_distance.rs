//! Closed-form distance between normals with a common mean, checked against
//! the length of the geodesic by quadrature.

use normgeo::geodesy::quadrature::Quadrature;
use normgeo::geodesy::{fisher_distance_leaf, fisher_length, killing_distance, LeafGeodesic};
use normgeo::killing::phi;
use normgeo::manifold::GaussianPoint;

fn main() -> normgeo::Result<()> {
    let p1 = GaussianPoint::from_slices(&[1.0, 0.2, 0.2, 0.5], &[0.0, 1.0])?;
    let p2 = GaussianPoint::from_slices(&[3.0, -0.5, -0.5, 2.0], &[0.0, 1.0])?;

    let closed = fisher_distance_leaf(&p1, &p2)?;
    let curve = LeafGeodesic::new(p1.sigma(), p2.sigma(), p1.mu().clone())?;
    let by_quadrature = fisher_length(&curve, 0.0, 1.0, &Quadrature::default())?;
    println!("closed form   {closed:.15}");
    println!("quadrature    {by_quadrature:.15}");
    println!(
        "Killing       {:.15}",
        killing_distance(&phi(&p1)?, &phi(&p2)?)?
    );

    println!("midpoint Σ:\n{}", curve.point(0.5)?.sigma().as_matrix());
    Ok(())
}
