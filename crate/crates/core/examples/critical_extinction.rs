//! Critical extinction (n = 3, m = 1/5) from single-bubble ansatz data:
//! log-corrected vs pure power fits and the dilation track.
//!
//! cargo run --release --example critical_extinction [intervals]

use fdlab::asymptotics::{extract_mu_tilde, fit_rate, RateModel, DEFAULT_WINDOW};
use fdlab::bubbles::{critical_m, Ansatz, AnsatzConfig};
use fdlab::greens::DomainSpec;
use fdlab::params::{DilationConvention, ScalingLaw};
use fdlab::pde::{init_from_ansatz, Form, RadialGrid, RadialSolver, SolverControl, Stretching};

fn main() -> fdlab::Result<()> {
    let intervals = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2048);
    let t0 = 2.0;
    let law = ScalingLaw::new(3, t0, DilationConvention::WithP)?;
    let a = Ansatz::new(AnsatzConfig::solved(DomainSpec::unit_ball(3), vec![vec![0.0; 3]], 0.4, &law)?, law)?;
    let g = RadialGrid::new(3, 1.0, intervals, Stretching::Graded)?;
    let w0 = init_from_ansatz(&a, t0, &g, Form::WForm, 1.0)?;
    let rec = RadialSolver::new(g, SolverControl::default())?.simulate_to_extinction(&w0)?;
    let t = rec.t_est.expect("enough samples near extinction");
    let log = fit_rate(&rec.samples, t, RateModel::LogCorrected, DEFAULT_WINDOW)?;
    let pure = fit_rate(&rec.samples, t, RateModel::PurePower, DEFAULT_WINDOW)?;
    let mt = extract_mu_tilde(&rec.samples, t, 3, critical_m(3), DEFAULT_WINDOW)?;
    println!("T = {t:.8} (+- {:.1e}), {} samples", rec.t_ci.unwrap_or(f64::NAN), rec.samples.len());
    println!("log-corrected: power {:.4}, log power {:.3}, rms {:.2e}", log.power, log.log_power, log.rms_residual);
    println!("pure power:    power {:.4}, rms {:.2e}", pure.power, pure.rms_residual);
    println!("mu-tilde: beta {:.4}, correlation {:.4}, rms {:.3}", mt.beta, mt.correlation, mt.rms);
    Ok(())
}
