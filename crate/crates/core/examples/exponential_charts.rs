//! Natural and expectation coordinates, potentials and the Hessian structure.

use normgeo::charts::{
    dual_connection_check, dual_potential, hessian_check, legendre_eta, pairing, psi_sigma_mu,
    psi_theta, to_theta, to_xi,
};
use normgeo::manifold::GaussianPoint;

fn main() -> normgeo::Result<()> {
    let p = GaussianPoint::from_slices(&[1.5, -0.4, -0.4, 0.8], &[0.5, 2.0])?;
    let theta = to_theta(&p)?;
    let xi = to_xi(&p)?;
    println!("θ coordinates: {:?}", theta.coords());
    println!("η coordinates: {:?}", xi.eta_coords());

    println!("ψ(Σ, μ) = {:.12}", psi_sigma_mu(&p));
    println!("ψ(θ)    = {:.12}", psi_theta(&theta));

    // Legendre duality: ψ(θ) + ψ*(η) = ⟨θ, η⟩
    let eta = legendre_eta(&theta)?;
    let gap = psi_theta(&theta) + dual_potential(&theta)? - pairing(&theta, &eta);
    println!("Fenchel gap: {gap:.3e}");

    println!("Hessian residual: {:.3e}", hessian_check(&theta)?);
    let dual = dual_connection_check(&p, 10)?;
    println!("dual connection residual: {:.3e}", dual.max());
    Ok(())
}
