//! The same ansatz data evolved as fast diffusion (then transformed) and as
//! the Yamabe-type flow, compared at matched times.
//!
//! cargo run --release --example transformation_equivalence

use fdlab::bubbles::{Ansatz, AnsatzConfig};
use fdlab::greens::DomainSpec;
use fdlab::params::{DilationConvention, ScalingLaw};
use fdlab::pde::{init_from_ansatz, Form, RadialGrid, RadialSolver, SolverControl, Stretching, Transformation};

fn main() -> fdlab::Result<()> {
    let t0 = 2.0;
    let law = ScalingLaw::new(3, t0, DilationConvention::WithP)?;
    let a = Ansatz::new(AnsatzConfig::solved(DomainSpec::unit_ball(3), vec![vec![0.0; 3]], 0.4, &law)?, law)?;
    let g = RadialGrid::new(3, 1.0, 512, Stretching::Graded)?;
    let u0 = init_from_ansatz(&a, t0, &g, Form::UForm, 1.0)?;
    let tr = Transformation::new(u0.m, 1.0)?.with_origin(t0);
    let w0 = tr.u_to_w(&u0)?;
    let ts: Vec<f64> = (1..=5).map(|k| t0 + 0.5 * k as f64).collect();
    let taus = ts.iter().map(|t| tr.t_to_tau(*t)).collect::<fdlab::Result<Vec<f64>>>()?;

    let cw = SolverControl { output_times: taus.clone(), t_end: taus.last().copied(), ..Default::default() };
    let rw = RadialSolver::new(g.clone(), cw)?.simulate_to_extinction(&w0)?;
    let cu = SolverControl { output_times: ts.clone(), t_end: ts.last().copied(), ..Default::default() };
    let ru = RadialSolver::new(g, cu)?.simulate_yamabe(&u0)?;
    for (w, u) in rw.snapshots.iter().zip(&ru.snapshots) {
        let via_w = tr.w_to_u(w)?;
        let d = via_w.values.iter().zip(&u.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        println!("t = {:.2}: sup u = {:.4}, sup |difference| = {d:.2e}", u.t, u.sup());
    }
    Ok(())
}
