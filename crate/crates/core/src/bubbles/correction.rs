//! The radial correction `p₀`: the decaying solution of
//! `Φ'' + (n−1)/r Φ' + pU^{p−1}Φ = q₀(r)`.

use nalgebra::{DMatrix, DVector};

use super::profile::{
    bubble_u_radial, critical_p, dilation_kernel_radial, dilation_kernel_radial_derivative, linearized_potential,
};
use crate::error::{Error, Result};
use crate::quadrature::RadialRule;

/// `q₀ = pU^{p−1}c₂ + c₁U^{p−1}Z_{n+1}`.
pub fn q0_radial(n: usize, c1: f64, c2: f64, r: f64) -> f64 {
    let p = critical_p(n);
    let w = bubble_u_radial(n, r).powf(p - 1.0);
    w * (p * c2 + c1 * dilation_kernel_radial(n, r))
}

/// Minimum outer radius the solver accepts.
pub const P0_MIN_RADIUS: f64 = 100.0;

/// Uniform spacing 1e−3 on `[0, 1]`, then geometric with ratio 1.002 up to 100.
pub fn p0_default_grid() -> Vec<f64> {
    let mut r: Vec<f64> = (0..=1000).map(|i| i as f64 * 1e-3).collect();
    let mut x = 1.0;
    while x < P0_MIN_RADIUS {
        x = (x * 1.002).min(P0_MIN_RADIUS);
        r.push(x);
    }
    r
}

#[derive(Debug, Clone)]
struct Hermite5 {
    r: Vec<f64>,
    f: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Hermite5 {
    fn eval(&self, x: f64) -> f64 {
        let k = match self.r.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.f[i],
            Err(i) => i.clamp(1, self.r.len() - 1) - 1,
        };
        let h = self.r[k + 1] - self.r[k];
        let s = (x - self.r[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let s5 = s4 * s;
        let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
        h00 * self.f[k]
            + h * h10 * self.d1[k]
            + h * h * h20 * self.d2[k]
            + h01 * self.f[k + 1]
            + h * h11 * self.d1[k + 1]
            + h * h * h21 * self.d2[k + 1]
    }
}

/// Solution of the `p₀` problem on a radial grid, with a `c/r²` tail beyond it.
#[derive(Debug, Clone)]
pub struct CorrectionProfile {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    /// Multiple of `Z_{n+1}` added to the particular solution.
    pub kernel_coefficient: f64,
    /// `c` in the tail `c/r²`.
    pub tail_coefficient: f64,
    interp: Hermite5,
}

fn second_derivative(n: usize, c1: f64, c2: f64, r: f64, f: f64, d1: f64) -> f64 {
    let rhs = q0_radial(n, c1, c2, r) - linearized_potential(n, r) * f;
    if r == 0.0 {
        rhs / n as f64
    } else {
        rhs - (n as f64 - 1.0) / r * d1
    }
}

/// Solve for `p₀` on the given grid using previously computed `c₁, c₂`.
///
/// A particular solution with `P(0) = 0` is integrated by RK4 and the free
/// multiple of `Z_{n+1}` is fixed linearly: for n = 3 by removing the `1/r`
/// tail, for n ≥ 4 by `∫ p₀ Z_{n+1} U^{p−1} = 0`.
pub fn solve_p0(r_grid: &[f64], n: usize, c1: f64, c2: f64) -> Result<CorrectionProfile> {
    if n < 3 {
        return Err(Error::InvalidDomain(format!("dimension {n} < 3")));
    }
    let last = *r_grid.last().unwrap_or(&0.0);
    if r_grid.len() < 2 || last < P0_MIN_RADIUS {
        return Err(Error::GridTooShort {
            reached: last,
            required: P0_MIN_RADIUS,
        });
    }
    if r_grid[0] != 0.0 || r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidDomain("p0 grid must start at 0 and increase".into()));
    }
    let nf = n as f64;
    let rhs = |r: f64, f: f64, d: f64| second_derivative(n, c1, c2, r, f, d);

    let m = r_grid.len();
    let mut f = vec![0.0; m];
    let mut d = vec![0.0; m];
    // Taylor start: P ≈ a r² + b r⁴ with a = q₀(0)/(2n)
    let a = q0_radial(n, c1, c2, 0.0) / (2.0 * nf);
    let r1 = r_grid[1];
    {
        // fourth-order coefficient from differentiating the ODE twice at 0
        let h = 1e-4;
        let q2 = (q0_radial(n, c1, c2, h) - q0_radial(n, c1, c2, 0.0)) / (h * h);
        let v0 = linearized_potential(n, 0.0);
        let b = (q2 - v0 * a) / (4.0 * (nf + 2.0));
        f[1] = a * r1 * r1 + b * r1.powi(4);
        d[1] = 2.0 * a * r1 + 4.0 * b * r1.powi(3);
    }
    let rk4 = |r0: f64, h: f64, y0: f64, y1: f64| {
        let k1 = (y1, rhs(r0, y0, y1));
        let k2 = (
            y1 + 0.5 * h * k1.1,
            rhs(r0 + 0.5 * h, y0 + 0.5 * h * k1.0, y1 + 0.5 * h * k1.1),
        );
        let k3 = (
            y1 + 0.5 * h * k2.1,
            rhs(r0 + 0.5 * h, y0 + 0.5 * h * k2.0, y1 + 0.5 * h * k2.1),
        );
        let k4 = (y1 + h * k3.1, rhs(r0 + h, y0 + h * k3.0, y1 + h * k3.1));
        (
            y0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            y1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    };
    for i in 1..m - 1 {
        let (r0, r1) = (r_grid[i], r_grid[i + 1]);
        // the (n−1)/r coefficient needs steps small relative to r near the origin
        let sub = ((r1 - r0) / (0.02 * r0)).ceil().max(1.0) as usize;
        let h = (r1 - r0) / sub as f64;
        let (mut y0, mut y1) = (f[i], d[i]);
        for s in 0..sub {
            (y0, y1) = rk4(r0 + s as f64 * h, h, y0, y1);
        }
        f[i + 1] = y0;
        d[i + 1] = y1;
        if !f[i + 1].is_finite() || !d[i + 1].is_finite() {
            return Err(Error::ShootingDiverged(format!("non-finite value at r = {r1}")));
        }
    }

    let z: Vec<f64> = r_grid.iter().map(|&r| dilation_kernel_radial(n, r)).collect();
    let dz: Vec<f64> = r_grid.iter().map(|&r| dilation_kernel_radial_derivative(n, r)).collect();

    let coefficient = if n == 3 {
        let lo = last / 2.0;
        let idx: Vec<usize> = (0..m).filter(|&i| r_grid[i] >= lo).collect();
        let basis = |r: f64| [1.0, 1.0 / r, 1.0 / (r * r), 1.0 / (r * r * r)];
        let design = DMatrix::from_fn(idx.len(), 4, |row, col| basis(r_grid[idx[row]])[col]);
        let fit = |vals: &[f64]| -> Result<DVector<f64>> {
            let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| vals[i]));
            design
                .clone()
                .svd(true, true)
                .solve(&rhs, 1e-14)
                .map_err(|e| Error::ShootingDiverged(e.to_string()))
        };
        let cp = fit(&f)?;
        let cz = fit(&z)?;
        cp[1] / cz[1]
    } else {
        let p_interp = Hermite5 {
            r: r_grid.to_vec(),
            f: f.clone(),
            d1: d.clone(),
            d2: (0..m).map(|i| rhs(r_grid[i], f[i], d[i])).collect(),
        };
        let p = critical_p(n);
        let rule = RadialRule::new(1e-2, last, 16, 8);
        let w = |r: f64| bubble_u_radial(n, r).powf(p - 1.0) * dilation_kernel_radial(n, r) * r.powf(nf - 1.0);
        let num = rule.integrate(|r| p_interp.eval(r) * w(r));
        let den = rule.integrate(|r| dilation_kernel_radial(n, r) * w(r));
        num / den
    };

    for i in 0..m {
        f[i] -= coefficient * z[i];
        d[i] -= coefficient * dz[i];
    }
    let d2: Vec<f64> = (0..m).map(|i| rhs(r_grid[i], f[i], d[i])).collect();
    let tail = f[m - 1] * last * last;
    if !tail.is_finite() {
        return Err(Error::ShootingDiverged("non-finite tail".into()));
    }
    Ok(CorrectionProfile {
        n,
        c1,
        c2,
        kernel_coefficient: -coefficient,
        tail_coefficient: tail,
        interp: Hermite5 {
            r: r_grid.to_vec(),
            f,
            d1: d,
            d2,
        },
    })
}

/// `p₀` on `r_grid`, computing `c₁, c₂` first.
pub fn correction_p0(r_grid: &[f64], n: usize) -> Result<CorrectionProfile> {
    let (c1, c2) = crate::params::constants_c1_c2(n)?;
    solve_p0(r_grid, n, c1, c2)
}

impl CorrectionProfile {
    pub fn r_max(&self) -> f64 {
        *self.interp.r.last().unwrap()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.interp.r
    }

    pub fn node_values(&self) -> &[f64] {
        &self.interp.f
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.r_max() {
            self.interp.eval(r)
        } else {
            self.tail_coefficient / (r * r)
        }
    }

    /// Sup over grid nodes of `|Φ'' + (n−1)/r Φ' + pU^{p−1}Φ − q₀|` with `Φ''`
    /// taken from a 4th-order difference of the interpolant, `h = step`.
    pub fn ode_residual(&self, samples: &[f64], step: f64) -> f64 {
        let h = step;
        let nf = self.n as f64;
        samples
            .iter()
            .map(|&r| {
                let f = |x: f64| self.eval(x);
                let d2 = (-f(r + 2.0 * h) + 16.0 * f(r + h) - 30.0 * f(r) + 16.0 * f(r - h) - f(r - 2.0 * h))
                    / (12.0 * h * h);
                let d1 = (-f(r + 2.0 * h) + 8.0 * f(r + h) - 8.0 * f(r - h) + f(r - 2.0 * h)) / (12.0 * h);
                let lhs = d2 + (nf - 1.0) / r * d1 + linearized_potential(self.n, r) * f(r);
                (lhs - q0_radial(self.n, self.c1, self.c2, r)).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::constants_c1_c2;
    use crate::quadrature::RadialRule;

    #[test]
    fn q0_is_orthogonal_to_dilation_kernel() {
        for n in 3..=6 {
            let (c1, c2) = constants_c1_c2(n).unwrap();
            let rule = RadialRule::new(1.0, 1e5, 16, 8);
            let scale = rule.integrate_radial(n, |r| (q0_radial(n, c1, c2, r) * dilation_kernel_radial(n, r)).abs());
            let v = rule.integrate_radial(n, |r| q0_radial(n, c1, c2, r) * dilation_kernel_radial(n, r));
            assert!(v.abs() < 1e-9 * scale, "n={n}: {v} vs {scale}");
        }
    }

    #[test]
    fn p0_solves_the_ode_and_decays_like_r_minus_two() {
        let grid = p0_default_grid();
        let prof = correction_p0(&grid, 3).unwrap();
        let samples: Vec<f64> = (1..200).map(|i| 0.05 + i as f64 * 0.45).collect();
        let res = prof.ode_residual(&samples, 1e-2);
        assert!(res < 1e-6, "ODE residual {res}");
        let vals: Vec<f64> = (0..=50).map(|i| 50.0 + i as f64).map(|r| r * r * prof.eval(r)).collect();
        let (lo, hi) = vals.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!((hi - lo) / hi.abs().max(lo.abs()) <= 0.05, "r^2 p0 spread {lo}..{hi}");
    }

    #[test]
    fn short_grid_is_rejected() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.5).collect();
        assert!(matches!(correction_p0(&grid, 3), Err(Error::GridTooShort { .. })));
    }
}
