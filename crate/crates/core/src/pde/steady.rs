use super::grid::{solve_tridiagonal, RadialGrid};
use crate::error::{Error, Result};

/// Positive radial solution of `Δu + u^p = 0` in `B_R`, `u = 0` on `∂B_R`,
/// for subcritical `p`, obtained by shooting the Lane–Emden equation
/// `φ'' + (n−1)φ'/r + φ^p = 0`, `φ(0) = 1`, and rescaling
/// `u(r) = λ^{2/(p−1)} φ(λr)` with `λ = r₀/R`.
#[derive(Debug, Clone)]
pub struct LaneEmdenProfile {
    pub n: usize,
    pub p: f64,
    pub radius: f64,
    /// First zero of `φ`.
    pub first_zero: f64,
    h: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
}

impl LaneEmdenProfile {
    pub fn solve(n: usize, p: f64, radius: f64) -> Result<Self> {
        if !(p > 1.0) || !(radius > 0.0) {
            return Err(Error::Config(format!("need p > 1 and R > 0, got p = {p}, R = {radius}")));
        }
        let nf = n as f64;
        let h = 1e-3;
        let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] {
            let f = y[0].abs().powf(p) * y[0].signum();
            [y[1], -f - (nf - 1.0) / r * y[1]]
        };
        let rk4 = |r: f64, y: [f64; 2], h: f64| -> [f64; 2] {
            let k1 = rhs(r, y);
            let k2 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            [
                y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ]
        };
        // series start: φ = 1 − r²/(2n) + p r⁴/(8n(n+2))
        let mut phi = vec![1.0, 1.0 - h * h / (2.0 * nf) + p * h.powi(4) / (8.0 * nf * (nf + 2.0))];
        let mut dphi = vec![0.0, -h / nf + p * h.powi(3) / (2.0 * nf * (nf + 2.0))];
        let mut r = h;
        let mut y = [phi[1], dphi[1]];
        while y[0] > 0.0 {
            if r > 1e3 {
                return Err(Error::ShootingDiverged(format!("no zero below r = 1e3 for p = {p}")));
            }
            y = rk4(r, y, h);
            r += h;
            phi.push(y[0]);
            dphi.push(y[1]);
        }
        // zero inside the last step: Newton on the Hermite cubic
        let k = phi.len() - 2;
        let (a, b, da, db) = (phi[k], phi[k + 1], dphi[k], dphi[k + 1]);
        let mut s = a / (a - b);
        for _ in 0..50 {
            let (v, dv) = hermite(a, b, da * h, db * h, s);
            let ds = v / (dv / h) / h;
            s -= ds;
            if ds.abs() < 1e-15 {
                break;
            }
        }
        let first_zero = (k as f64 + s) * h;
        Ok(Self {
            n,
            p,
            radius,
            first_zero,
            h,
            phi,
            dphi,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.first_zero / self.radius
    }

    fn phi_at(&self, s: f64) -> f64 {
        let x = s / self.h;
        let k = (x.floor() as usize).min(self.phi.len() - 2);
        let (v, _) = hermite(self.phi[k], self.phi[k + 1], self.dphi[k] * self.h, self.dphi[k + 1] * self.h, x - k as f64);
        v
    }

    /// `u(r)`; zero for `r ≥ R`.
    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let l = self.lambda();
        l.powf(2.0 / (self.p - 1.0)) * self.phi_at(l * r).max(0.0)
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.nodes.iter().map(|&r| self.eval(r)).collect()
    }
}

/// Cubic Hermite value and derivative (in `s`) on `[0,1]`.
fn hermite(a: f64, b: f64, da: f64, db: f64, s: f64) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * a + (s3 - 2.0 * s2 + s) * da + (-2.0 * s3 + 3.0 * s2) * b + (s3 - s2) * db;
    let d = (6.0 * s2 - 6.0 * s) * a + (3.0 * s2 - 4.0 * s + 1.0) * da + (-6.0 * s2 + 6.0 * s) * b + (3.0 * s2 - 2.0 * s) * db;
    (v, d)
}

/// Solve the discrete steady problem `L u + V u^p = 0` by Newton from `guess`
/// (all nodes, boundary value ignored).
pub fn discrete_steady_state(grid: &RadialGrid, p: f64, guess: &[f64]) -> Result<Vec<f64>> {
    let op = grid.operator();
    let nn = op.unknowns();
    let mut u = guess[..nn].to_vec();
    for _ in 0..60 {
        let lu = op.apply(&u);
        let f: Vec<f64> = (0..nn).map(|i| lu[i] + op.volume[i] * u[i].abs().powf(p)).collect();
        let d: Vec<f64> = (0..nn)
            .map(|i| {
                let mut c = op.conductance[i];
                if i > 0 {
                    c += op.conductance[i - 1];
                }
                -c + op.volume[i] * p * u[i].abs().powf(p - 1.0)
            })
            .collect();
        let e: Vec<f64> = op.conductance[..nn - 1].to_vec();
        let neg_f: Vec<f64> = f.iter().map(|x| -x).collect();
        let delta = solve_tridiagonal(&d, &e, &neg_f);
        let dmax = delta.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for i in 0..nn {
            u[i] += delta[i];
        }
        let umax = u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if dmax <= 1e-13 * umax {
            u.push(0.0);
            return Ok(u);
        }
    }
    Err(Error::NewtonDiverged("discrete steady state".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::Stretching;

    #[test]
    fn lane_emden_n3_p5_is_the_bubble() {
        // for p = 5, n = 3 the shooting never reaches a zero: φ = (1 + r²/3)^{-1/2}
        assert!(LaneEmdenProfile::solve(3, 5.0, 1.0).is_err());
    }

    #[test]
    fn lane_emden_p1_limit_matches_sinc() {
        // p → 1: φ = sin r / r with first zero π; p = 1.0001 is close
        let le = LaneEmdenProfile::solve(3, 1.0001, 1.0).unwrap();
        assert!((le.first_zero - std::f64::consts::PI).abs() < 1e-3, "{}", le.first_zero);
    }

    #[test]
    fn discrete_steady_state_converges_at_second_order() {
        let (n, p) = (3, 2.0);
        let le = LaneEmdenProfile::solve(n, p, 1.0).unwrap();
        let mut errs = Vec::new();
        for m in [32, 64, 128, 256] {
            let g = RadialGrid::new(n, 1.0, m, Stretching::Uniform).unwrap();
            let exact = le.sample(&g);
            let u = discrete_steady_state(&g, p, &exact).unwrap();
            errs.push(u.iter().zip(&exact).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())));
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.9, "{errs:?}");
        }
    }
}
