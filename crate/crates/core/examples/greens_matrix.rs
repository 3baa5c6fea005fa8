//! Interaction matrix for points in the unit ball and in a box, with its
//! positive definiteness.
//!
//! cargo run --example greens_matrix

use fdlab::greens::{pd_report, robin_matrix, DomainSpec};

fn main() -> fdlab::Result<()> {
    for s in [0.2, 0.4, 0.6] {
        let pts = vec![vec![s, 0.0, 0.0], vec![-s, 0.0, 0.0]];
        let m = robin_matrix(&DomainSpec::unit_ball(3), &pts)?;
        let r = pd_report(&m)?;
        println!(
            "ball, q = ±{s}: H = {:.6}, G = {:.6}, eigenvalues {:?}, PD = {}",
            m.diagonal(0),
            m.green_between(0, 1),
            m.eigenvalues()?,
            r.positive_definite
        );
    }
    let cube = DomainSpec::cube(vec![1.0, 1.0, 1.0]).with_bvp_nodes(65);
    let m = robin_matrix(&cube, &[vec![0.3, 0.5, 0.5], vec![0.7, 0.5, 0.5]])?;
    println!("cube pair: {:?}", m.entries);
    Ok(())
}
