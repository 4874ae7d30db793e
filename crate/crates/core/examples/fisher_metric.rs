//! Fisher metric, Christoffel symbols and curvature at a bivariate normal.

use normgeo::manifold::{connection_coeff, curvature, fisher_inner, GaussianPoint, TangentVector};

fn main() -> normgeo::Result<()> {
    let p = GaussianPoint::from_slices(&[2.0, 0.3, 0.3, 1.0], &[1.0, -1.0])?;
    let scale = TangentVector::from_slices(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0])?;
    let shift = TangentVector::from_slices(&[0.0, 0.0, 0.0, 0.0], &[1.0, 0.0])?;

    println!("g(scale, scale) = {:.6}", fisher_inner(&p, &scale, &scale)?);
    println!("g(shift, shift) = {:.6}", fisher_inner(&p, &shift, &shift)?);
    println!("g(scale, shift) = {:.6}", fisher_inner(&p, &scale, &shift)?);

    let gamma = connection_coeff(&p, &shift, &shift)?;
    println!("Γ(shift, shift) Σ-part:\n{}", gamma.x().as_matrix());

    let e1 = TangentVector::from_slices(&[0.0; 4], &[1.0, 0.0])?;
    let e2 = TangentVector::from_slices(&[0.0; 4], &[0.0, 1.0])?;
    let k = curvature(&GaussianPoint::standard(2), [&e1, &e2, &e2, &e1])?;
    println!("sectional curvature of the mean plane at (I, 0): {k}");
    Ok(())
}
