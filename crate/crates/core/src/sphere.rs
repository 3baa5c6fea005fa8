//! Stereographic projection, conformal lifting to `𝕊ⁿ` and a finite-difference
//! check of the conformal Laplacian identity
//! `(2/(1+|y|²))^{(n+2)/2} (Δ_{𝕊ⁿ} − n(n−2)/4) φ̃ ∘ π = Δφ`.

use serde::{Deserialize, Serialize};

use crate::bubbles::{bubble_u, kernel_z};
use crate::error::{Error, Result};

/// Declared order of both finite-difference sides.
pub const FD_ORDER: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub coords: Vec<f64>,
}

impl SpherePoint {
    /// Normalizes `coords`.
    pub fn new(coords: Vec<f64>) -> Self {
        let r = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        Self {
            coords: coords.into_iter().map(|c| c / r).collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.coords.len() - 1
    }
}

/// `π(y) = (2y/(1+|y|²), (|y|²−1)/(|y|²+1))`.
pub fn stereographic(y: &[f64]) -> SpherePoint {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let mut c: Vec<f64> = y.iter().map(|v| 2.0 * v / (1.0 + r2)).collect();
    c.push((r2 - 1.0) / (r2 + 1.0));
    SpherePoint { coords: c }
}

/// `π^{-1}(p) = p' / (1 − p_{n+1})`.
pub fn inverse_stereographic(p: &SpherePoint) -> Result<Vec<f64>> {
    let n = p.dimension();
    let d = 1.0 - p.coords[n];
    if d <= 1e-15 {
        return Err(Error::NorthPole);
    }
    Ok(p.coords[..n].iter().map(|c| c / d).collect())
}

/// `2/(1+|y|²)`.
pub fn conformal_factor(y: &[f64]) -> f64 {
    2.0 / (1.0 + y.iter().map(|v| v * v).sum::<f64>())
}

/// `φ̃(π(y)) = φ(y) (2/(1+|y|²))^{−(n−2)/2}`.
pub fn lift<'a, F>(phi: F) -> impl Fn(&SpherePoint) -> Result<f64> + 'a
where
    F: Fn(&[f64]) -> f64 + 'a,
{
    move |p: &SpherePoint| {
        let y = inverse_stereographic(p)?;
        let e = (p.dimension() as f64 - 2.0) / 2.0;
        Ok(phi(&y) * conformal_factor(&y).powf(-e))
    }
}

/// `φ(y) = φ̃(π(y)) (2/(1+|y|²))^{(n−2)/2}`.
pub fn unlift<'a, F>(phi_tilde: F) -> impl Fn(&[f64]) -> Result<f64> + 'a
where
    F: Fn(&SpherePoint) -> Result<f64> + 'a,
{
    move |y: &[f64]| {
        let e = (y.len() as f64 - 2.0) / 2.0;
        Ok(phi_tilde(&stereographic(y))? * conformal_factor(y).powf(e))
    }
}

/// Orthonormal basis of the tangent space at `p`.
fn tangent_basis(p: &[f64]) -> Vec<Vec<f64>> {
    let dim = p.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim - 1);
    let mut all = vec![p.to_vec()];
    for k in 0..dim {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        for b in &all {
            let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (x, c) in v.iter_mut().zip(b) {
                *x -= d * c;
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-6 {
            let v: Vec<f64> = v.into_iter().map(|x| x / nrm).collect();
            all.push(v.clone());
            basis.push(v);
        }
        if basis.len() == dim - 1 {
            break;
        }
    }
    basis
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 0.25) {
        return Err(Error::StepTooLarge(h));
    }
    Ok(())
}

const D2: [(f64, f64); 5] = [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];

/// `Δ_{𝕊ⁿ} f(p)` as the sum of second derivatives along the geodesics
/// `cos s·p + sin s·e_i` (normal coordinates), 5-point stencils of step `h`.
pub fn sphere_laplacian<F>(f: &F, p: &SpherePoint, h: f64) -> Result<f64>
where
    F: Fn(&SpherePoint) -> Result<f64> + ?Sized,
{
    check_step(h)?;
    let mut s = 0.0;
    for e in tangent_basis(&p.coords) {
        for &(k, w) in &D2 {
            let (sn, cs) = (k * h).sin_cos();
            let q = SpherePoint {
                coords: p.coords.iter().zip(&e).map(|(a, b)| cs * a + sn * b).collect(),
            };
            s += w * f(&q)?;
        }
    }
    Ok(s / (h * h))
}

/// Flat `Δφ(y)` with 5-point stencils of step `h`.
pub fn flat_laplacian<F>(phi: &F, y: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    check_step(h)?;
    let mut s = 0.0;
    let mut x = y.to_vec();
    for i in 0..y.len() {
        for &(k, w) in &D2 {
            x[i] = y[i] + k * h;
            s += w * phi(&x);
        }
        x[i] = y[i];
    }
    Ok(s / (h * h))
}

/// Largest `|(2/(1+|y|²))^{(n+2)/2} P(φ̃)(π(y)) − Δφ(y)|` over the samples,
/// `P = Δ_{𝕊ⁿ} − n(n−2)/4`.
pub fn conformal_laplacian_check<F>(phi: &F, samples: &[Vec<f64>], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let lifted = lift(phi);
    let mut worst = 0.0f64;
    for y in samples {
        let nf = y.len() as f64;
        let p = stereographic(y);
        let sphere = sphere_laplacian(&lifted, &p, h)? - 0.25 * nf * (nf - 2.0) * lifted(&p)?;
        let lhs = conformal_factor(y).powf((nf + 2.0) / 2.0) * sphere;
        worst = worst.max((lhs - flat_laplacian(phi, y, h)?).abs());
    }
    Ok(worst)
}

/// Largest `|Δ_{𝕊ⁿ}Θ + nΘ|` for `Θ` the lift of `Z_i`, relative to `max|Θ|` on
/// the samples.
pub fn lifted_kernel_eigen_check(n: usize, i: usize, samples: &[Vec<f64>], h: f64) -> Result<f64> {
    kernel_z(n, i, &vec![0.0; n])?;
    let zi = move |y: &[f64]| kernel_z(n, i, y).unwrap_or(f64::NAN);
    let theta = lift(zi);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for y in samples {
        let p = stereographic(y);
        let v = theta(&p)?;
        scale = scale.max(v.abs());
        worst = worst.max((sphere_laplacian(&theta, &p, h)? + n as f64 * v).abs());
    }
    Ok(worst / scale)
}

/// Named smooth test functions on `ℝⁿ` for the conformal identity.
pub fn test_suite(n: usize) -> Vec<(&'static str, Box<dyn Fn(&[f64]) -> f64 + Send + Sync>)> {
    let r2 = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>();
    vec![
        ("bubble", Box::new(move |y: &[f64]| bubble_u(n, y))),
        ("dilation_kernel", Box::new(move |y: &[f64]| kernel_z(n, n + 1, y).unwrap_or(f64::NAN))),
        ("translation_kernel", Box::new(move |y: &[f64]| kernel_z(n, 1, y).unwrap_or(f64::NAN))),
        ("gaussian", Box::new(move |y: &[f64]| (-r2(y)).exp())),
        ("shifted_gaussian", Box::new(move |y: &[f64]| (-(y[0] - 0.5).powi(2) - r2(&y[1..])).exp())),
        ("inverse_quadratic", Box::new(move |y: &[f64]| 1.0 / (1.0 + r2(y)))),
        ("inverse_quartic", Box::new(move |y: &[f64]| (1.0 + r2(y)).powi(-2))),
        ("gaussian_dipole", Box::new(move |y: &[f64]| y[0] * y[1] * (-r2(y)).exp())),
        ("cosine_bump", Box::new(move |y: &[f64]| (2.0 * y[0]).cos() * (-0.5 * r2(y)).exp())),
        ("skewed_rational", Box::new(move |y: &[f64]| (1.0 + y[0] + 0.5 * y[n - 1]) / (1.0 + r2(y)).powi(2))),
    ]
}

/// Sample points used by the checks.
pub fn default_samples(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for (k, r) in [0.0, 0.3, 0.8, 1.0, 1.7, 2.5].iter().enumerate() {
        let mut y = vec![0.0; n];
        for (j, v) in y.iter_mut().enumerate() {
            let a = 0.7 * k as f64 + 1.3 * j as f64;
            *v = r * a.cos() / (n as f64).sqrt();
        }
        if n > 1 {
            y[n - 1] += 0.1 * r;
        }
        out.push(y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::critical_p;
    use crate::greens::alpha_n;

    #[test]
    fn stereographic_basics() {
        let s = stereographic(&[0.0, 0.0, 0.0]);
        assert_eq!(s.coords, vec![0.0, 0.0, 0.0, -1.0]);
        let e = stereographic(&[0.6, 0.0, 0.8]);
        assert!(e.coords[3].abs() < 1e-15);
        for y in default_samples(4) {
            let back = inverse_stereographic(&stereographic(&y)).unwrap();
            for (a, b) in y.iter().zip(&back) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let north = SpherePoint::new(vec![0.0, 0.0, 1.0]);
        assert!(matches!(inverse_stereographic(&north), Err(Error::NorthPole)));
    }

    #[test]
    fn lifted_bubble_is_constant() {
        for n in [3usize, 4, 6] {
            let lifted = lift(move |y: &[f64]| bubble_u(n, y));
            let c = alpha_n(n) * 2f64.powf(-(n as f64 - 2.0) / 2.0);
            for y in default_samples(n) {
                let v = lifted(&stereographic(&y)).unwrap();
                assert!((v - c).abs() < 1e-13 * c);
            }
        }
    }

    #[test]
    fn unlift_inverts_lift() {
        let phi = |y: &[f64]| (-y.iter().map(|v| v * v).sum::<f64>()).exp() + y[0];
        let back = unlift(lift(phi));
        for y in default_samples(3) {
            assert!((back(&y).unwrap() - phi(&y)).abs() < 1e-14);
        }
    }

    #[test]
    fn bubble_side_matches_its_equation() {
        let n = 3;
        let u = move |y: &[f64]| bubble_u(n, y);
        let err = conformal_laplacian_check(&u, &default_samples(n), 0.02).unwrap();
        assert!(err < 1e-5, "{err}");
        for y in default_samples(n) {
            let flat = flat_laplacian(&u, &y, 0.01).unwrap();
            assert!((flat + u(&y).powf(critical_p(n))).abs() < 1e-7);
        }
    }

    #[test]
    fn lifted_kernel_is_a_first_eigenfunction() {
        for i in 1..=4 {
            let e = lifted_kernel_eigen_check(3, i, &default_samples(3), 0.02).unwrap();
            assert!(e < 1e-6, "i={i} {e}");
        }
    }

    #[test]
    fn suite_converges_at_fourth_order() {
        let n = 3;
        let samples = default_samples(n);
        for (name, f) in test_suite(n) {
            let a = conformal_laplacian_check(&f, &samples, 0.1).unwrap();
            let b = conformal_laplacian_check(&f, &samples, 0.05).unwrap();
            let order = (a / b).log2();
            assert!((order - FD_ORDER).abs() <= 0.5, "{name}: {a:e} {b:e} {order}");
        }
    }

    #[test]
    fn step_guard() {
        let f = |_: &[f64]| 1.0;
        assert!(matches!(flat_laplacian(&f, &[0.0; 3], 0.5), Err(Error::StepTooLarge(_))));
    }
}
