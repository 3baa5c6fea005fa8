//! Residuals of the separable steady equation for each convention of the
//! Loewner–Nirenberg family; only the adopted one vanishes.
//!
//! cargo run --example loewner_nirenberg

use fdlab::bubbles::LoewnerNirenbergForm;
use fdlab::checks::loewner_nirenberg_residuals;

fn main() {
    for n in 3..=6 {
        for (form, r) in LoewnerNirenbergForm::ALL.iter().zip(loewner_nirenberg_residuals(n)) {
            println!("n={n} {form:?}: max residual {r:.2e}");
        }
    }
}
