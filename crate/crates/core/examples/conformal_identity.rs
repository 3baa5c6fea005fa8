//! Stereographic intertwining of the flat and conformal Laplacians, checked by
//! finite differences at two step sizes.
//!
//! cargo run --example conformal_identity

use fdlab::sphere::{conformal_laplacian_check, default_samples, lifted_kernel_eigen_check, test_suite};

fn main() -> fdlab::Result<()> {
    let n = 3;
    let samples = default_samples(n);
    for (name, f) in test_suite(n) {
        let a = conformal_laplacian_check(&f, &samples, 0.1)?;
        let b = conformal_laplacian_check(&f, &samples, 0.05)?;
        println!("{name:>20}: mismatch {a:.2e} -> {b:.2e}, order {:.2}", (a / b).log2());
    }
    for i in 1..=n + 1 {
        println!("lifted Z_{i}: eigen mismatch {:.1e}", lifted_kernel_eigen_check(n, i, &samples, 0.02)?);
    }
    Ok(())
}
