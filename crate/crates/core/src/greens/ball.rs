//! Ball geometry: the Kelvin-image regular part and an axisymmetric
//! finite-volume Laplace solver used as its independent check (and for the
//! μ-dependent boundary data of the ansatz).

use std::f64::consts::PI;

use super::{alpha_n, norm};
use crate::error::{Error, Result};

/// Closed-form `H(x, y)` on the ball `B_R(0)` via the Kelvin image of `y`.
pub fn ball_image_regular_part(n: usize, radius: f64, x: &[f64], y: &[f64]) -> f64 {
    let a = alpha_n(n);
    let ny = norm(y);
    if ny == 0.0 {
        return a * radius.powf(2.0 - n as f64);
    }
    let scale = radius * radius / (ny * ny);
    let d: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let t = xi - scale * yi;
            t * t
        })
        .sum::<f64>()
        .sqrt();
    a * (ny / radius * d).powf(2.0 - n as f64)
}

/// Second-order finite-volume solver for harmonic functions on `B_R ⊂ ℝⁿ` that
/// are axially symmetric about a fixed axis, discretized on cell centers in
/// `(r, θ)`.
#[derive(Debug, Clone)]
pub struct AxisymmetricBallSolver {
    pub n: usize,
    pub radius: f64,
    pub cells_r: usize,
    pub cells_theta: usize,
    pub tolerance: f64,
}

impl AxisymmetricBallSolver {
    /// `nodes` plays the role of "grid nodes per axis": `nodes − 1` cells in
    /// each of `r` and `θ`.
    pub fn new(n: usize, radius: f64, nodes: usize) -> Self {
        Self {
            n,
            radius,
            cells_r: nodes - 1,
            cells_theta: nodes - 1,
            tolerance: 1e-13,
        }
    }

    /// Solve `Δh = 0` in the ball with `h = g(cos θ)` on the sphere, where θ is
    /// the angle to `axis`.
    pub fn solve(&self, axis: &[f64], g: impl Fn(f64) -> f64) -> Result<BallField> {
        if axis.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: axis.len(),
            });
        }
        let na = norm(axis);
        let axis: Vec<f64> = if na > 0.0 {
            axis.iter().map(|v| v / na).collect()
        } else {
            let mut e = vec![0.0; self.n];
            e[0] = 1.0;
            e
        };
        let (mr, mt) = (self.cells_r, self.cells_theta);
        let dr = self.radius / mr as f64;
        let dt = PI / mt as f64;
        let nf = self.n as f64;
        let sw = |th: f64| th.sin().powf(nf - 2.0);

        let theta: Vec<f64> = (0..mt).map(|j| (j as f64 + 0.5) * dt).collect();
        let boundary: Vec<f64> = theta.iter().map(|t| g(t.cos())).collect();
        // ∫ sin^{n-2} over each θ cell, by 4-point Gauss
        let gl = crate::quadrature::GaussLegendre::new(4);
        let s_cell: Vec<f64> = (0..mt)
            .map(|j| gl.integrate(j as f64 * dt, (j + 1) as f64 * dt, sw))
            .collect();
        let s_face: Vec<f64> = (0..=mt).map(|j| sw(j as f64 * dt)).collect();
        // ∫ r^{n-3} dr over each r cell
        let a_cell: Vec<f64> = (0..mr)
            .map(|i| {
                let (a, b) = (i as f64 * dr, (i + 1) as f64 * dr);
                if self.n == 2 {
                    (b / a.max(1e-300)).ln()
                } else {
                    (b.powf(nf - 2.0) - a.powf(nf - 2.0)) / (nf - 2.0)
                }
            })
            .collect();
        let r_face: Vec<f64> = (0..=mr).map(|i| (i as f64 * dr).powf(nf - 1.0)).collect();

        let idx = |i: usize, j: usize| i * mt + j;
        let size = mr * mt;
        // coefficients of the SPD operator: (A h)_ij = Σ c (h_ij − h_nb), plus boundary term
        let mut cr = vec![0.0; size]; // coupling (i,j)-(i+1,j)
        let mut ct = vec![0.0; size]; // coupling (i,j)-(i,j+1)
        let mut diag = vec![0.0; size];
        let mut rhs = vec![0.0; size];
        for i in 0..mr {
            for j in 0..mt {
                let k = idx(i, j);
                if i + 1 < mr {
                    let c = r_face[i + 1] * s_cell[j] / dr;
                    cr[k] = c;
                    diag[k] += c;
                    diag[idx(i + 1, j)] += c;
                } else {
                    let c = r_face[mr] * s_cell[j] / (0.5 * dr);
                    diag[k] += c;
                    rhs[k] += c * boundary[j];
                }
                if j + 1 < mt {
                    let c = a_cell[i] * s_face[j + 1] / dt;
                    ct[k] = c;
                    diag[k] += c;
                    diag[idx(i, j + 1)] += c;
                }
            }
        }
        let apply = |h: &[f64], out: &mut [f64]| {
            for k in 0..size {
                out[k] = diag[k] * h[k];
            }
            for i in 0..mr {
                for j in 0..mt {
                    let k = idx(i, j);
                    if i + 1 < mr {
                        let kn = idx(i + 1, j);
                        out[k] -= cr[k] * h[kn];
                        out[kn] -= cr[k] * h[k];
                    }
                    if j + 1 < mt {
                        let kn = idx(i, j + 1);
                        out[k] -= ct[k] * h[kn];
                        out[kn] -= ct[k] * h[k];
                    }
                }
            }
        };
        // initial guess: boundary data extended radially
        let mut h: Vec<f64> = (0..size).map(|k| boundary[k % mt]).collect();
        preconditioned_cg(apply, &diag, &rhs, &mut h, self.tolerance, 20 * size)?;
        Ok(BallField {
            n: self.n,
            radius: self.radius,
            axis,
            dr,
            dt,
            cells_r: mr,
            cells_theta: mt,
            values: h,
            boundary,
            theta,
        })
    }
}

fn preconditioned_cg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let n = b.len();
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Ok(());
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NewtonDiverged(
        "conjugate gradient did not converge in the ball Laplace solve".into(),
    ))
}

/// Discrete harmonic function produced by [`AxisymmetricBallSolver`].
#[derive(Debug, Clone)]
pub struct BallField {
    n: usize,
    radius: f64,
    axis: Vec<f64>,
    dr: f64,
    dt: f64,
    cells_r: usize,
    cells_theta: usize,
    values: Vec<f64>,
    boundary: Vec<f64>,
    theta: Vec<f64>,
}

impl BallField {
    pub fn dimension(&self) -> usize {
        self.n
    }

    fn cell(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cells_theta + j]
    }

    /// Value at extended radial index (negative radii reflect through the
    /// origin) and extended angular index (reflection across the axis).
    fn node_value(&self, ri: isize, tj: isize) -> f64 {
        let mt = self.cells_theta as isize;
        let reflect_theta = |j: isize| -> usize {
            let mut j = j;
            if j < 0 {
                j = -j - 1;
            }
            if j >= mt {
                j = 2 * mt - 1 - j;
            }
            j.clamp(0, mt - 1) as usize
        };
        if ri >= self.cells_r as isize {
            return self.boundary[reflect_theta(tj)];
        }
        if ri < 0 {
            // r → −r maps θ → π − θ
            let i = (-ri - 1) as usize;
            let j = reflect_theta(tj);
            return self.cell(i, self.cells_theta - 1 - j);
        }
        self.cell(ri as usize, reflect_theta(tj))
    }

    fn node_radius(&self, ri: isize) -> f64 {
        if ri >= self.cells_r as isize {
            self.radius
        } else {
            (ri as f64 + 0.5) * self.dr
        }
    }

    /// Evaluate at a point of the closed ball by bicubic Lagrange interpolation
    /// in `(r, θ)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        let cos = if r > 0.0 {
            (x.iter().zip(&self.axis).map(|(a, b)| a * b).sum::<f64>() / r).clamp(-1.0, 1.0)
        } else {
            1.0
        };
        let theta = cos.acos();
        self.eval_polar(r, theta)
    }

    pub fn eval_polar(&self, r: f64, theta: f64) -> f64 {
        let mr = self.cells_r as isize;
        // radial stencil: 4 consecutive extended indices with base near r
        let base = ((r / self.dr - 0.5).floor() as isize - 1).clamp(-2, mr - 3);
        let rnodes: Vec<isize> = (base..base + 4).collect();
        let rpos: Vec<f64> = rnodes.iter().map(|&i| self.node_radius(i)).collect();
        let rw = lagrange_weights(&rpos, r);

        let tbase = (theta / self.dt - 0.5).floor() as isize - 1;
        let tnodes: Vec<isize> = (tbase..tbase + 4).collect();
        let tpos: Vec<f64> = tnodes.iter().map(|&j| (j as f64 + 0.5) * self.dt).collect();
        let tw = lagrange_weights(&tpos, theta);

        let mut acc = 0.0;
        for (a, &ri) in rnodes.iter().enumerate() {
            let mut row = 0.0;
            for (b, &tj) in tnodes.iter().enumerate() {
                row += tw[b] * self.node_value(ri, tj);
            }
            acc += rw[a] * row;
        }
        acc
    }

    /// Boundary data at the cell-center angles.
    pub fn boundary_samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.theta.iter().copied().zip(self.boundary.iter().copied())
    }
}

pub(crate) fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    let m = nodes.len();
    let mut w = vec![1.0; m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                w[i] *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::singular_part;

    #[test]
    fn image_matches_boundary_data() {
        for n in 3..=6 {
            let y = vec![0.3; n].iter().map(|v| v / (n as f64).sqrt()).collect::<Vec<_>>();
            let mut xb = vec![0.0; n];
            xb[n - 1] = 1.0;
            let h = ball_image_regular_part(n, 1.0, &xb, &y);
            assert!((h - singular_part(n, &xb, &y)).abs() < 1e-13);
        }
    }

    #[test]
    fn image_formula_scales_with_radius() {
        // H_R(x, y) = R^{2-n} H_1(x/R, y/R)
        let (x, y) = ([0.3, 0.4, -0.2], [1.0, -0.5, 0.2]);
        let r = 2.0;
        let a = ball_image_regular_part(3, r, &x, &y);
        let xs: Vec<f64> = x.iter().map(|v| v / r).collect();
        let ys: Vec<f64> = y.iter().map(|v| v / r).collect();
        let b = ball_image_regular_part(3, 1.0, &xs, &ys) / r;
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn solver_reproduces_constant_and_linear() {
        let s = AxisymmetricBallSolver::new(3, 1.0, 33);
        let f = s.solve(&[1.0, 0.0, 0.0], |_| 2.5).unwrap();
        assert!((f.eval(&[0.1, 0.2, 0.3]) - 2.5).abs() < 1e-10);
        // x·e is harmonic; boundary data cos θ
        let f = s.solve(&[0.0, 0.0, 1.0], |c| c).unwrap();
        let v = f.eval(&[0.1, 0.2, 0.3]);
        assert!((v - 0.3).abs() < 2e-3, "v = {v}");
    }
}
