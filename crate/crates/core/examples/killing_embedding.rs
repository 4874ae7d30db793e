//! The embedding into unimodular positive matrices and the Killing metric.

use normgeo::killing::{dphi, killing_inner, killing_inner_matrix, phi, phi_inv, psi_product};
use normgeo::manifold::{fisher_inner, GaussianPoint, TangentVector};

fn main() -> normgeo::Result<()> {
    let p = GaussianPoint::from_slices(&[2.0, 0.5, 0.5, 1.0], &[1.0, 0.0])?;
    let big = phi(&p)?;
    println!("Φ(p) =\n{}", big.as_matrix());
    println!("det Φ(p) = {:.15}", big.as_matrix().determinant());
    println!("Φ⁻¹ recovers μ = {:?}", phi_inv(&big)?.mu().as_slice());

    let t = TangentVector::from_slices(&[1.0, 0.0, 0.0, 1.0], &[0.0, 1.0])?;
    let fisher = fisher_inner(&p, &t, &t)?;
    let killing = killing_inner(&p, &t, &t)?;
    let y = dphi(&p, &t)?;
    println!("Fisher  |t|² = {fisher:.12}");
    println!("Killing |t|² = {killing:.12}");
    println!("½tr((P⁻¹Y)²) = {:.12}", killing_inner_matrix(&big, &y, &y)?);

    let (log_det, unimodular) = psi_product(p.sigma())?;
    println!(
        "Ψ(Σ) = ({log_det:.6}, det {:.3})",
        unimodular.as_matrix().determinant()
    );
    Ok(())
}
