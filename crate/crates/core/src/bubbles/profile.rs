//! The bubble `U`, its kernel functions `Z_1 … Z_{n+1}`, and the
//! Loewner–Nirenberg steady profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{alpha_n, norm};

/// Critical exponent `p = (n+2)/(n−2)`.
pub fn critical_p(n: usize) -> f64 {
    (n as f64 + 2.0) / (n as f64 - 2.0)
}

/// Critical fast-diffusion exponent `m_s = (n−2)/(n+2) = 1/p`.
pub fn critical_m(n: usize) -> f64 {
    (n as f64 - 2.0) / (n as f64 + 2.0)
}

/// `U(r) = α_n (1 + r²)^{−(n−2)/2}`.
pub fn bubble_u_radial(n: usize, r: f64) -> f64 {
    alpha_n(n) * (1.0 + r * r).powf(-(n as f64 - 2.0) / 2.0)
}

/// `U'(r) = −(n−2) α_n r (1 + r²)^{−n/2}`.
pub fn bubble_u_radial_derivative(n: usize, r: f64) -> f64 {
    -(n as f64 - 2.0) * alpha_n(n) * r * (1.0 + r * r).powf(-(n as f64) / 2.0)
}

pub fn bubble_u(n: usize, y: &[f64]) -> f64 {
    bubble_u_radial(n, norm(y))
}

/// `Z_{n+1}(r) = (n−2)/2 · U + r U'(r) = (n−2)/2 · α_n (1 − r²)(1 + r²)^{−n/2}`.
pub fn dilation_kernel_radial(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    0.5 * (nf - 2.0) * alpha_n(n) * (1.0 - r * r) * (1.0 + r * r).powf(-nf / 2.0)
}

pub fn dilation_kernel_radial_derivative(n: usize, r: f64) -> f64 {
    let nf = n as f64;
    let s = 1.0 + r * r;
    0.5 * (nf - 2.0) * alpha_n(n) * (-2.0 * r * s.powf(-nf / 2.0) - nf * r * (1.0 - r * r) * s.powf(-nf / 2.0 - 1.0))
}

/// `pU^{p−1}`, the potential of the linearized operator.
pub fn linearized_potential(n: usize, r: f64) -> f64 {
    let p = critical_p(n);
    p * bubble_u_radial(n, r).powf(p - 1.0)
}

/// Kernel element `Z_i` for `i = 1..=n+1` (1-based as in the usual notation):
/// translations `∂U/∂y_i` and the dilation generator `Z_{n+1}`.
pub fn kernel_z(n: usize, i: usize, y: &[f64]) -> Result<f64> {
    if i == 0 || i > n + 1 {
        return Err(Error::IndexOutOfRange(i, n + 1));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let nf = n as f64;
    if i <= n {
        Ok(-(nf - 2.0) * alpha_n(n) * y[i - 1] * (1.0 + r2).powf(-nf / 2.0))
    } else {
        Ok(dilation_kernel_radial(n, r2.sqrt()))
    }
}

/// Closed forms of the Loewner–Nirenberg family that can be tried against the
/// stationary equation `ΔS^m + ¼(n+2)S = 0`, `m = (n−2)/(n+2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoewnerNirenbergForm {
    /// `λ[4n(n−2) / (4n(n−2) + (n+2)λ^{4/(n+2)} r²)]^{(n+2)/2}`; solves the equation.
    Adopted,
    /// Bracket with constant `2n(n−2)` and no exponent.
    BracketNoExponent,
    /// Bracket with constant `2n(n−2)` raised to `(n+2)/2`; solves the equation
    /// with `½(n+2)` in place of `¼(n+2)`.
    BracketHalfConstant,
}

impl LoewnerNirenbergForm {
    pub const ALL: [LoewnerNirenbergForm; 3] = [
        Self::Adopted,
        Self::BracketNoExponent,
        Self::BracketHalfConstant,
    ];

    pub fn eval(self, lambda: f64, r: f64, n: usize) -> f64 {
        let nf = n as f64;
        let (c, e) = match self {
            Self::Adopted => (4.0 * nf * (nf - 2.0), (nf + 2.0) / 2.0),
            Self::BracketNoExponent => (2.0 * nf * (nf - 2.0), 1.0),
            Self::BracketHalfConstant => (2.0 * nf * (nf - 2.0), (nf + 2.0) / 2.0),
        };
        let bracket = c / (c + (nf + 2.0) * lambda.powf(4.0 / (nf + 2.0)) * r * r);
        lambda * bracket.powf(e)
    }
}

/// Loewner–Nirenberg profile `S_λ(r)`, with `S_λ(r) = λ S₁(rλ^{2/(n+2)})` and
/// `S_λ(0) = λ`.
pub fn loewner_nirenberg_s(lambda: f64, r: f64, n: usize) -> f64 {
    LoewnerNirenbergForm::Adopted.eval(lambda, r, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap_radial(f: impl Fn(f64) -> f64, n: usize, r: f64, h: f64) -> f64 {
        let d2 = (-f(r + 2.0 * h) + 16.0 * f(r + h) - 30.0 * f(r) + 16.0 * f(r - h) - f(r - 2.0 * h))
            / (12.0 * h * h);
        let d1 = (-f(r + 2.0 * h) + 8.0 * f(r + h) - 8.0 * f(r - h) + f(r - 2.0 * h)) / (12.0 * h);
        d2 + (n as f64 - 1.0) / r * d1
    }

    #[test]
    fn bubble_values() {
        assert!((bubble_u(3, &[0.0; 3]) - 3f64.powf(0.25)).abs() < 1e-15);
        assert!((bubble_u(4, &[0.0; 4]) - 2.8284271247461903).abs() < 1e-14);
        let r: f64 = 1e4;
        let tail = bubble_u_radial(3, r) * r;
        assert!((tail / alpha_n(3) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn kernel_values() {
        for n in 3..=6 {
            let zero = vec![0.0; n];
            for i in 1..=n {
                assert_eq!(kernel_z(n, i, &zero).unwrap(), 0.0);
            }
            let z = kernel_z(n, n + 1, &zero).unwrap();
            assert!((z - 0.5 * (n as f64 - 2.0) * alpha_n(n)).abs() < 1e-14);
        }
        // Z_{n+1} changes sign on the unit sphere: ½U(1) + U'(1) = 0 for n = 3
        let mut y = vec![0.0; 3];
        y[0] = 1.0;
        let direct = 0.5 * bubble_u_radial(3, 1.0) + bubble_u_radial_derivative(3, 1.0);
        assert!(direct.abs() < 1e-15);
        assert!(kernel_z(3, 4, &y).unwrap().abs() < 1e-15);
        assert_eq!(kernel_z(3, 5, &y), Err(Error::IndexOutOfRange(5, 4)));
        assert_eq!(kernel_z(3, 0, &y), Err(Error::IndexOutOfRange(0, 4)));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for n in 3..=6 {
            for &r in &[0.1, 0.7, 2.0, 5.0] {
                let h = 1e-5;
                let fd = (bubble_u_radial(n, r + h) - bubble_u_radial(n, r - h)) / (2.0 * h);
                assert!((fd - bubble_u_radial_derivative(n, r)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn translation_kernels_are_partial_derivatives() {
        let n = 4;
        let y = [0.3, -0.2, 0.5, 0.1];
        for i in 1..=n {
            let h = 1e-6;
            let mut yp = y;
            let mut ym = y;
            yp[i - 1] += h;
            ym[i - 1] -= h;
            let fd = (bubble_u(n, &yp) - bubble_u(n, &ym)) / (2.0 * h);
            assert!((fd - kernel_z(n, i, &y).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn loewner_nirenberg_scaling_and_normalization() {
        for n in 3..=6 {
            assert!((loewner_nirenberg_s(1.0, 0.0, n) - 1.0).abs() < 1e-15);
            for &lam in &[0.3, 1.0, 2.5, 10.0] {
                for &r in &[0.0, 0.2, 1.0, 3.0] {
                    let lhs = loewner_nirenberg_s(lam, r, n) / lam;
                    let rhs = loewner_nirenberg_s(1.0, r * lam.powf(2.0 / (n as f64 + 2.0)), n);
                    assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn adopted_form_solves_the_stationary_equation() {
        for n in 3..=6 {
            let m = critical_m(n);
            let r = 0.7;
            let res = |form: LoewnerNirenbergForm| {
                let s = |rr: f64| form.eval(2.0, rr, n).powf(m);
                (lap_radial(s, n, r, 1e-3) + 0.25 * (n as f64 + 2.0) * form.eval(2.0, r, n)).abs()
            };
            let good = res(LoewnerNirenbergForm::Adopted);
            assert!(good < 1e-9, "n={n} residual {good}");
            assert!(res(LoewnerNirenbergForm::BracketNoExponent) > 1e3 * good.max(1e-12));
            assert!(res(LoewnerNirenbergForm::BracketHalfConstant) > 1e3 * good.max(1e-12));
        }
    }
}
