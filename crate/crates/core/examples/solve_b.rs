//! Dilation weights `b_j` for a few configurations, with the gradient of the
//! reduced functional at the solution.
//!
//! cargo run --example solve_b

use fdlab::greens::{robin_matrix, DomainSpec};
use fdlab::params::{solve_b, BSystem};

fn main() -> fdlab::Result<()> {
    let configs: Vec<(usize, Vec<Vec<f64>>)> = vec![
        (3, vec![vec![0.0; 3]]),
        (3, vec![vec![0.4, 0.0, 0.0], vec![-0.4, 0.0, 0.0]]),
        (3, vec![vec![0.5, 0.0, 0.0], vec![-0.25, 0.4, 0.0], vec![-0.25, -0.4, 0.0]]),
        (5, vec![vec![0.3, 0.0, 0.0, 0.0, 0.0], vec![0.0, 0.3, 0.0, 0.0, 0.0]]),
    ];
    for (n, q) in configs {
        let sys = BSystem::new(n, robin_matrix(&DomainSpec::unit_ball(n), &q)?)?;
        match solve_b(&sys) {
            Ok(b) => {
                let g = sys.grad_i(&b)?;
                println!("n={n} k={}: b = {b:.6?}, |grad I| = {:.1e}", q.len(), g.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
            Err(e) => println!("n={n} k={}: {e}", q.len()),
        }
    }
    Ok(())
}
