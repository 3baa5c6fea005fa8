//! Error of the single-bubble ansatz at the bubble center, and the dilation
//! projection with the solved `b` against a detuned one.
//!
//! cargo run --release --example ansatz_residual

use fdlab::bubbles::{Ansatz, AnsatzConfig, ProjectionOptions};
use fdlab::greens::DomainSpec;
use fdlab::params::{DilationConvention, ScalingLaw};

fn main() -> fdlab::Result<()> {
    let law = ScalingLaw::new(3, 100.0, DilationConvention::WithP)?;
    let cfg = AnsatzConfig::solved(DomainSpec::unit_ball(3), vec![vec![0.0; 3]], 0.4, &law)?;
    let a = Ansatz::new(cfg.clone(), law)?;
    let mut detuned = cfg;
    detuned.b[0] *= 1.5;
    let d = Ansatz::with_profile(detuned, law, a.profile_arc())?;
    let opts = ProjectionOptions::default();
    for t in [100.0, 1000.0, 10000.0] {
        let mu0 = law.mu0(t)?;
        let s = a.scaled_residual(0, &[0.0; 3], t, &opts)?;
        let radius = 0.9 * a.cfg.eps_cutoff / (2.0 * d.mu(t)?[0]);
        let solved = a.project_residual(4, 1, t, radius, &opts)?;
        let off = d.project_residual(4, 1, t, radius, &opts)?;
        println!("t={t}: mu0 = {mu0:.3e}, scaled S(0) = {s:.3e}, dilation projection {solved:.3e} vs detuned {off:.3e}");
    }
    Ok(())
}
