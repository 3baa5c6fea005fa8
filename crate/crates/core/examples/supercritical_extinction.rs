//! Supercritical fast diffusion (n = 3, m = 1/2) from a bump: extinction time
//! on three grids and the fitted rate.
//!
//! cargo run --release --example supercritical_extinction

use fdlab::asymptotics::{fit_rate, theoretical_rates, RateModel, DEFAULT_WINDOW};
use fdlab::pde::{bump_state, RadialGrid, RadialSolver, SolverControl, Stretching};

fn main() -> fdlab::Result<()> {
    let (expected, _) = theoretical_rates(3, 0.5)?;
    for m_int in [256, 512, 1024] {
        let g = RadialGrid::new(3, 1.0, m_int, Stretching::Uniform)?;
        let rec = RadialSolver::new(g.clone(), SolverControl::default())?.simulate_to_extinction(&bump_state(&g, 0.5, 1.0))?;
        let t = rec.t_est.expect("enough samples near extinction");
        let fit = fit_rate(&rec.samples, t, RateModel::PurePower, DEFAULT_WINDOW)?;
        println!("M={m_int}: T = {t:.10}, power = {:.5} (expected {expected}), rms = {:.1e}", fit.power, fit.rms_residual);
    }
    Ok(())
}
