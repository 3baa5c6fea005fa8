//! The radial correction `p₀` and the constants `c₁, c₂` for n = 3..6.
//!
//! cargo run --example correction_profile

use fdlab::bubbles::{correction_p0, p0_default_grid};
use fdlab::params::constants_c1_c2;

fn main() -> fdlab::Result<()> {
    for n in 3..=6 {
        let (c1, c2) = constants_c1_c2(n)?;
        let p0 = correction_p0(&p0_default_grid(), n)?;
        let samples: Vec<f64> = [0.0, 1.0, 5.0, 20.0].iter().map(|&r| p0.eval(r)).collect();
        println!("n={n}: c1 = {c1:.6}, c2 = {c2:.6}, p0(0, 1, 5, 20) = {samples:.4?}");
    }
    Ok(())
}
