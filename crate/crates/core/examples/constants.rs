//! Solves for γ and L₀ and prints the residuals of their defining equations.

use treetails::numerics::{solve_gamma, solve_l0, Constants};

fn main() -> treetails::Result<()> {
    for tol in [1e-6, 1e-10, 1e-14] {
        println!("tol {tol:>7.0e}: gamma = {:.12}, l0 = {:.12}", solve_gamma(tol), solve_l0(tol));
    }
    let c = Constants::new(1e-14)?;
    println!("residual e^(2/g) - 2/g - 12/7 = {:.3e}", c.gamma_residual());
    println!("residual e^L - 6L^2          = {:.3e}", c.l0_residual());
    Ok(())
}
