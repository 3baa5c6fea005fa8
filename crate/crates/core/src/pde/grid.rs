use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stretching {
    Uniform,
    /// `r = R s (c + (1 − c) s)`, `s = i/M`: spacing near the origin is `c` times
    /// the uniform spacing.
    #[default]
    Graded,
}

/// Clustering parameter `c` of the graded grid.
pub const GRADED_CLUSTERING: f64 = 0.2;

/// Nodes `0 = r₀ < … < r_M = R` of a radial grid on the ball `B_R ⊂ ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub n: usize,
    pub radius: f64,
    pub nodes: Vec<f64>,
    pub stretching: Stretching,
}

impl RadialGrid {
    /// Grid with `m` intervals.
    pub fn new(n: usize, radius: f64, m: usize, stretching: Stretching) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDomain("dimension must be positive".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidDomain(format!("radius {radius} must be positive")));
        }
        if m < 4 {
            return Err(Error::InvalidDomain(format!("need at least 4 intervals, got {m}")));
        }
        let c = GRADED_CLUSTERING;
        let nodes = (0..=m)
            .map(|i| {
                let s = i as f64 / m as f64;
                match stretching {
                    Stretching::Uniform => radius * s,
                    Stretching::Graded => radius * s * (c + (1.0 - c) * s),
                }
            })
            .collect::<Vec<_>>();
        let mut g = Self {
            n,
            radius,
            nodes,
            stretching,
        };
        // exact endpoint
        *g.nodes.last_mut().unwrap() = radius;
        Ok(g)
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Finite-volume operator for `Δ` with `v'(0) = 0`, `v(R) = 0`.
    pub fn operator(&self) -> RadialOperator {
        let r = &self.nodes;
        let m = self.intervals();
        let nf = self.n as f64;
        let face = |i: usize| 0.5 * (r[i] + r[i + 1]);
        let mut volume = vec![0.0; m];
        let mut conductance = vec![0.0; m];
        for i in 0..m {
            let lo = if i == 0 { 0.0 } else { face(i - 1) };
            let hi = face(i);
            volume[i] = (hi.powf(nf) - lo.powf(nf)) / nf;
            conductance[i] = hi.powf(nf - 1.0) / (r[i + 1] - r[i]);
        }
        RadialOperator { volume, conductance }
    }
}

/// `(Lv)_i = C_i (v_{i+1} − v_i) − C_{i−1}(v_i − v_{i−1})`, the flux balance over
/// the control volume `V_i` around node `i` (sphere area factored out); the
/// unknowns are `v_0 … v_{M−1}` with `v_M = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialOperator {
    /// `V_i`, `i < M`.
    pub volume: Vec<f64>,
    /// `C_i = r_{i+½}^{n−1}/(r_{i+1} − r_i)` between nodes `i` and `i+1`.
    pub conductance: Vec<f64>,
}

impl RadialOperator {
    pub fn unknowns(&self) -> usize {
        self.volume.len()
    }

    /// `L v` for the interior unknowns (`v.len() == unknowns()`, boundary value 0).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let m = self.unknowns();
        (0..m)
            .map(|i| {
                let right = if i + 1 < m { v[i + 1] } else { 0.0 };
                let mut s = self.conductance[i] * (right - v[i]);
                if i > 0 {
                    s -= self.conductance[i - 1] * (v[i] - v[i - 1]);
                }
                s
            })
            .collect()
    }

    /// `V^{-1} L v`, the discrete Laplacian at the nodes.
    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        self.apply(v).iter().zip(&self.volume).map(|(a, b)| a / b).collect()
    }
}

/// Solve a symmetric tridiagonal system with diagonal `d` and off-diagonal `e`
/// (`e[i]` couples `i` and `i+1`).
pub(crate) fn solve_tridiagonal(d: &[f64], e: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = d.len();
    let mut c = vec![0.0; m];
    let mut x = vec![0.0; m];
    let mut denom = d[0];
    x[0] = rhs[0] / denom;
    for i in 1..m {
        c[i - 1] = e[i - 1] / denom;
        denom = d[i] - e[i - 1] * c[i - 1];
        x[i] = (rhs[i] - e[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let g = RadialGrid::new(3, 1.0, 100, Stretching::Graded).unwrap();
        assert_eq!(g.nodes[0], 0.0);
        assert_eq!(*g.nodes.last().unwrap(), 1.0);
        assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        assert!((g.nodes[1] - 0.2 * 0.01).abs() < 1e-4);
        assert!(RadialGrid::new(3, -1.0, 100, Stretching::Uniform).is_err());
    }

    #[test]
    fn operator_is_exact_on_quadratics_in_the_interior() {
        // Δ(1 − r²) = −2n; the FV scheme reproduces it on a uniform grid
        for n in [2usize, 3, 5] {
            let g = RadialGrid::new(n, 1.0, 64, Stretching::Uniform).unwrap();
            let op = g.operator();
            let v: Vec<f64> = g.nodes[..64].iter().map(|r| 1.0 - r * r).collect();
            let lap = op.laplacian(&v);
            for (i, l) in lap.iter().enumerate().take(60).skip(1) {
                assert!((l + 2.0 * n as f64).abs() < 1e-2, "n={n} i={i} {l}");
            }
        }
    }

    #[test]
    fn tridiagonal_solver() {
        let d = [4.0, 5.0, 6.0, 7.0];
        let e = [1.0, -2.0, 0.5];
        let x = [1.0, -1.0, 2.0, 0.25];
        let b: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = d[i] * x[i];
                if i > 0 {
                    s += e[i - 1] * x[i - 1];
                }
                if i < 3 {
                    s += e[i] * x[i + 1];
                }
                s
            })
            .collect();
        let y = solve_tridiagonal(&d, &e, &b);
        for i in 0..4 {
            assert!((x[i] - y[i]).abs() < 1e-14);
        }
    }
}
