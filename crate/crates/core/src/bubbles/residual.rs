//! Finite-difference evaluation of the error operator
//! `S(u) = −(u^p)_t + Δu + u^p` and its projections onto the kernel of the
//! linearized operator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ansatz::Ansatz;
use super::profile::{critical_p, kernel_z};
use crate::error::{Error, Result};
use crate::quadrature::{pairwise_sum, RadialRule, SphereRule};

/// Relative Richardson disagreement above which `residual_s` rejects the steps.
pub const RICHARDSON_TOLERANCE: f64 = 1e-3;

/// `|u|^{p−1}u`, the odd extension of the power.
pub fn signed_pow(u: f64, p: f64) -> f64 {
    u.abs().powf(p) * u.signum()
}

/// The three terms of `S(u)` at one point for one pair of steps, without
/// extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualParts {
    pub value: f64,
    pub laplacian: f64,
    pub time_derivative: f64,
    pub power: f64,
}

impl ResidualParts {
    pub fn residual(&self) -> f64 {
        -self.time_derivative + self.laplacian + self.power
    }
}

/// Fourth-order centered Laplacian and second-order centered `(u^p)_t`.
pub fn residual_parts<F>(u: &F, p: f64, x: &[f64], t: f64, hx: f64, ht: f64) -> Result<ResidualParts>
where
    F: Fn(&[f64], f64) -> Result<f64> + ?Sized,
{
    let u0 = u(x, t)?;
    let mut lap = 0.0;
    let mut xs = x.to_vec();
    for i in 0..x.len() {
        let mut f = |d: f64| -> Result<f64> {
            xs[i] = x[i] + d;
            let v = u(&xs, t);
            xs[i] = x[i];
            v
        };
        let (p2, p1, m1, m2) = (f(2.0 * hx)?, f(hx)?, f(-hx)?, f(-2.0 * hx)?);
        lap += (-p2 + 16.0 * p1 - 30.0 * u0 + 16.0 * m1 - m2) / (12.0 * hx * hx);
    }
    let up = signed_pow(u(x, t + ht)?, p);
    let um = signed_pow(u(x, t - ht)?, p);
    Ok(ResidualParts {
        value: u0,
        laplacian: lap,
        time_derivative: (up - um) / (2.0 * ht),
        power: signed_pow(u0, p),
    })
}

/// `S(u)(x, t)` from steps `(hx, ht)` and `(hx/2, ht/2)`, Richardson-extrapolated
/// separately in space (order 4) and time (order 2).
///
/// Fails with `StepTooLarge` when the two step pairs disagree by more than
/// `RICHARDSON_TOLERANCE` relative to the largest term, beyond the round-off
/// level of the finer stencil. Steps are meant to be about 1% of the length
/// on which `u` varies, so `|u|/(100 hx)²` also counts as a term size.
pub fn residual_s<F>(u: &F, p: f64, x: &[f64], t: f64, hx: f64, ht: f64) -> Result<f64>
where
    F: Fn(&[f64], f64) -> Result<f64> + ?Sized,
{
    let a = residual_parts(u, p, x, t, hx, ht)?;
    let b = residual_parts(u, p, x, t, 0.5 * hx, 0.5 * ht)?;
    let lap = (16.0 * b.laplacian - a.laplacian) / 15.0;
    let dt = (4.0 * b.time_derivative - a.time_derivative) / 3.0;
    let scale = b
        .laplacian
        .abs()
        .max(b.time_derivative.abs())
        .max(b.power.abs())
        .max(b.value.abs() / (1e4 * hx * hx));
    let err = (b.laplacian - a.laplacian).abs() + (b.time_derivative - a.time_derivative).abs();
    let roundoff = 1e3 * f64::EPSILON * x.len() as f64 * b.value.abs() / (0.25 * hx * hx);
    if err > RICHARDSON_TOLERANCE * scale + roundoff {
        return Err(Error::StepTooLarge(err / scale));
    }
    Ok(-dt + lap + b.power)
}

/// `∫_{B_R} μ^{(n+2)/2} f(ξ + μy) Z_l(y) dy` by radial Gauss–Legendre panels
/// times a sphere rule. Terms are summed pairwise in a fixed order.
pub fn project_sampler<F>(n: usize, l: usize, xi: &[f64], mu: f64, radius: f64, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if l == 0 || l > n + 1 {
        return Err(Error::IndexOutOfRange(l, n + 1));
    }
    let radial = RadialRule::new((0.1f64).min(radius / 10.0), radius, 16, 4);
    let sphere = SphereRule::for_dimension(n);
    let mut nodes = Vec::with_capacity(radial.points.len() * sphere.weights.len());
    for &(r, wr) in &radial.points {
        for (dir, &wd) in sphere.directions.iter().zip(&sphere.weights) {
            nodes.push((r, wr * wd * r.powi(n as i32 - 1), dir));
        }
    }
    let scale = mu.powf((n as f64 + 2.0) / 2.0);
    let terms = nodes
        .par_iter()
        .map(|&(r, w, dir)| -> Result<f64> {
            let y: Vec<f64> = dir.iter().map(|d| d * r).collect();
            let x: Vec<f64> = xi.iter().zip(&y).map(|(a, b)| a + mu * b).collect();
            Ok(w * scale * f(&x)? * kernel_z(n, l, &y)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

/// Which ansatz the residual is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResidualField {
    /// `z = z̃ + Φ̃`.
    #[default]
    Full,
    /// `z̃` alone.
    Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionOptions {
    pub field: ResidualField,
    /// Drop `(u^p)_t`, i.e. hold `μ` fixed at its value at `t`.
    pub frozen_time: bool,
    /// Space step as a fraction of the local scale `μ_j + |x − q_j|`.
    pub h_rel: f64,
    /// Time step as a fraction of `t`.
    pub ht_rel: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            field: ResidualField::Full,
            frozen_time: false,
            h_rel: 1e-2,
            ht_rel: 1e-3,
        }
    }
}

impl Ansatz {
    /// The chosen ansatz field as a sampler `(x, t) ↦ value`.
    pub fn field(&self, which: ResidualField) -> impl Fn(&[f64], f64) -> Result<f64> + Sync + '_ {
        move |x: &[f64], t: f64| match which {
            ResidualField::Full => self.z_unchecked(x, t),
            ResidualField::Tilde => self.tilde_z_at_time(x, t),
        }
    }

    /// `S` of the ansatz at `x`, with the space step `h_rel·(μ_j + |x − q_j|)`
    /// following the local length scale of bubble `j`.
    pub fn residual_at(&self, j: usize, x: &[f64], t: f64, opts: &ProjectionOptions) -> Result<f64> {
        let p = critical_p(self.n());
        let mu = self.mu(t)?[j];
        let hx = opts.h_rel * (mu + crate::greens::dist(x, &self.cfg.q[j]));
        let ht = opts.ht_rel * t;
        if opts.frozen_time {
            let frozen = |y: &[f64], _s: f64| (self.field(opts.field))(y, t);
            residual_s(&frozen, p, x, t, hx, ht)
        } else {
            residual_s(&self.field(opts.field), p, x, t, hx, ht)
        }
    }

    /// `μ_j^{(n+2)/2} S(ξ_j + μ_j y, t)` at the bubble-scaled point `y`.
    pub fn scaled_residual(&self, j: usize, y: &[f64], t: f64, opts: &ProjectionOptions) -> Result<f64> {
        let mu = self.mu(t)?[j];
        let x: Vec<f64> = self.cfg.q[j].iter().zip(y).map(|(a, b)| a + mu * b).collect();
        Ok(mu.powf((self.n() as f64 + 2.0) / 2.0) * self.residual_at(j, &x, t, opts)?)
    }

    /// `∫_{B_R} μ_j^{(n+2)/2} S[z](ξ_j + μ_j y, t) Z_l(y) dy`, `l` and `j` 1-based.
    ///
    /// Requires `R ≤ ε/(2μ_j(t))` so the integration ball stays where the
    /// cutoff equals one.
    pub fn project_residual(&self, l: usize, j: usize, t: f64, radius: f64, opts: &ProjectionOptions) -> Result<f64> {
        let n = self.n();
        if j == 0 || j > self.cfg.k() {
            return Err(Error::IndexOutOfRange(j, self.cfg.k()));
        }
        let jj = j - 1;
        let mu = self.mu(t)?[jj];
        let bound = self.cfg.eps_cutoff / (2.0 * mu);
        if radius > bound {
            return Err(Error::RadiusExceedsCutoff { radius, bound });
        }
        project_sampler(n, l, &self.cfg.q[jj], mu, radius, |x| self.residual_at(jj, x, t, opts))
    }

    /// Leading-order value of the `Z_{n+1}` projection of the static error:
    /// `c₁[μ_j^{n−2}H_jj − Σ_{i≠j} μ_j^{(n−2)/2}μ_i^{(n−2)/2}G_ij]`.
    pub fn static_projection_prediction(&self, j: usize, t: f64) -> Result<f64> {
        let nf = self.n() as f64;
        let mu = self.mu(t)?;
        let e = (nf - 2.0) / 2.0;
        let mut s = mu[j].powf(nf - 2.0) * self.matrix.diagonal(j);
        for i in 0..self.cfg.k() {
            if i != j {
                s -= mu[j].powf(e) * mu[i].powf(e) * self.matrix.green_between(i, j);
            }
        }
        Ok(self.law.c1 * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::alpha_n;

    #[test]
    fn static_bubble_has_zero_residual() {
        let n = 3;
        let p = critical_p(n);
        let mu = 0.1;
        let u = |x: &[f64], _t: f64| -> Result<f64> {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Ok(alpha_n(n) * (mu / (mu * mu + r2)).powf(0.5))
        };
        let scale = mu.powf(-2.5);
        for x in [[0.0, 0.0, 0.0], [0.05, 0.02, 0.0], [0.3, -0.1, 0.2]] {
            let s = residual_s(&u, p, &x, 1.0, 1e-3, 1e-3).unwrap();
            assert!(s.abs() < 1e-8 * scale, "{s}");
        }
    }

    #[test]
    fn steps_too_large_are_rejected() {
        let u = |x: &[f64], _t: f64| -> Result<f64> { Ok((20.0 * x[0]).sin() + 2.0) };
        let r = residual_s(&u, 5.0, &[0.1, 0.0, 0.0], 1.0, 0.2, 1e-3);
        assert!(matches!(r, Err(Error::StepTooLarge(_))));
    }

    #[test]
    fn projection_is_linear_in_the_sampler() {
        let f = |x: &[f64]| -> Result<f64> { Ok((-x.iter().map(|v| v * v).sum::<f64>()).exp()) };
        let g = |x: &[f64]| -> Result<f64> { Ok(1.0 / (1.0 + x[0] * x[0] + 2.0 * x[1] * x[1])) };
        let xi = [0.1, 0.0, -0.2];
        for l in [1, 4] {
            let a = project_sampler(3, l, &xi, 0.3, 5.0, f).unwrap();
            let b = project_sampler(3, l, &xi, 0.3, 5.0, g).unwrap();
            let c = project_sampler(3, l, &xi, 0.3, 5.0, |x| Ok(f(x)? + g(x)?)).unwrap();
            assert!((a + b - c).abs() <= 1e-12 * (a.abs() + b.abs()).max(1e-300));
        }
    }
}
