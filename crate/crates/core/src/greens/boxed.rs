//! Box geometry (n = 3): harmonic extension of boundary data by a
//! sine-transform diagonalized finite-difference solve, and the
//! eigenfunction-series Green's function used to check it.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::alpha_n;
use super::ball::lagrange_weights;
use crate::error::{Error, Result};
use crate::quadrature::unit_sphere_area;

/// Discrete Laplacian used by [`BoxLaplaceSolver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LaplaceStencil {
    /// Standard 7-point stencil, second order.
    SevenPoint,
    /// 19-point compact stencil; fourth order for harmonic functions.
    #[default]
    Mehrstellen,
}

pub struct BoxLaplaceSolver {
    lengths: [f64; 3],
    nodes: usize,
    h: [f64; 3],
    stencil: LaplaceStencil,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for BoxLaplaceSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoxLaplaceSolver")
            .field("lengths", &self.lengths)
            .field("nodes", &self.nodes)
            .field("stencil", &self.stencil)
            .finish()
    }
}

impl BoxLaplaceSolver {
    pub fn new(lengths: &[f64], nodes: usize) -> Result<Self> {
        if lengths.len() != 3 {
            return Err(Error::Unsupported(format!(
                "grid regular parts are implemented for boxes in n = 3 only (got n = {})",
                lengths.len()
            )));
        }
        if nodes < 5 {
            return Err(Error::InvalidDomain("need at least 5 nodes per axis".into()));
        }
        let l = [lengths[0], lengths[1], lengths[2]];
        let h = l.map(|li| li / (nodes - 1) as f64);
        let fft = FftPlanner::new().plan_fft_forward(2 * (nodes - 1));
        Ok(Self {
            lengths: l,
            nodes,
            h,
            stencil: LaplaceStencil::default(),
            fft,
        })
    }

    pub fn with_stencil(mut self, stencil: LaplaceStencil) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.h
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nodes + j) * self.nodes + k
    }

    /// Apply the discrete operator at interior node `(i, j, k)` of a full grid array.
    fn apply_at(&self, u: &[f64], i: usize, j: usize, k: usize) -> f64 {
        let h2 = self.h.map(|v| v * v);
        let at = |a: usize, b: usize, c: usize| u[self.index(a, b, c)];
        let c0 = at(i, j, k);
        let d0 = (at(i + 1, j, k) - 2.0 * c0 + at(i - 1, j, k)) / h2[0];
        let d1 = (at(i, j + 1, k) - 2.0 * c0 + at(i, j - 1, k)) / h2[1];
        let d2 = (at(i, j, k + 1) - 2.0 * c0 + at(i, j, k - 1)) / h2[2];
        let mut lap = d0 + d1 + d2;
        if self.stencil == LaplaceStencil::Mehrstellen {
            // D_a D_b on the 9-point cross stencil of plane (a, b)
            let mixed = |da: [isize; 3], db: [isize; 3]| -> f64 {
                let mut s = 0.0;
                for (sa, wa) in [(-1isize, 1.0), (0, -2.0), (1, 1.0)] {
                    for (sb, wb) in [(-1isize, 1.0), (0, -2.0), (1, 1.0)] {
                        let ii = (i as isize + sa * da[0] + sb * db[0]) as usize;
                        let jj = (j as isize + sa * da[1] + sb * db[1]) as usize;
                        let kk = (k as isize + sa * da[2] + sb * db[2]) as usize;
                        s += wa * wb * at(ii, jj, kk);
                    }
                }
                s
            };
            let e = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let c = (h2[a] + h2[b]) / 12.0;
                lap += c * mixed(e[a], e[b]) / (h2[a] * h2[b]);
            }
        }
        lap
    }

    /// In-place DST-I (unnormalized) of a line of length `nodes − 2`.
    fn dst_line(&self, line: &mut [f64], buf: &mut [Complex<f64>]) {
        let m = line.len();
        let len = 2 * (m + 1);
        debug_assert_eq!(buf.len(), len);
        buf[0] = Complex::new(0.0, 0.0);
        buf[m + 1] = Complex::new(0.0, 0.0);
        for (q, &v) in line.iter().enumerate() {
            buf[q + 1] = Complex::new(v, 0.0);
            buf[len - 1 - q] = Complex::new(-v, 0.0);
        }
        self.fft.process(buf);
        for (q, v) in line.iter_mut().enumerate() {
            *v = -0.5 * buf[q + 1].im;
        }
    }

    fn dst_3d(&self, data: &mut [f64], m: usize) {
        let mut line = vec![0.0; m];
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * (m + 1)];
        let id = |a: usize, b: usize, c: usize| (a * m + b) * m + c;
        for axis in 0..3 {
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        line[c] = data[match axis {
                            0 => id(c, a, b),
                            1 => id(a, c, b),
                            _ => id(a, b, c),
                        }];
                    }
                    self.dst_line(&mut line, &mut buf);
                    for c in 0..m {
                        data[match axis {
                            0 => id(c, a, b),
                            1 => id(a, c, b),
                            _ => id(a, b, c),
                        }] = line[c];
                    }
                }
            }
        }
    }

    /// Discrete harmonic function with the given boundary values.
    pub fn harmonic_extension(&self, g: impl Fn(&[f64]) -> f64) -> BoxField {
        let nn = self.nodes;
        let m = nn - 2;
        let mut full = vec![0.0; nn * nn * nn];
        for i in 0..nn {
            for j in 0..nn {
                for k in 0..nn {
                    let on_boundary = [i, j, k].iter().any(|&v| v == 0 || v == nn - 1);
                    if on_boundary {
                        let x = [
                            i as f64 * self.h[0],
                            j as f64 * self.h[1],
                            k as f64 * self.h[2],
                        ];
                        full[self.index(i, j, k)] = g(&x);
                    }
                }
            }
        }
        // right-hand side: −L(boundary lift) at interior nodes
        let mut rhs = vec![0.0; m * m * m];
        for i in 1..nn - 1 {
            for j in 1..nn - 1 {
                for k in 1..nn - 1 {
                    rhs[((i - 1) * m + (j - 1)) * m + (k - 1)] = -self.apply_at(&full, i, j, k);
                }
            }
        }
        self.dst_3d(&mut rhs, m);
        let eig = |h: f64, q: usize| {
            let s = (q as f64 * PI / (2.0 * (m + 1) as f64)).sin();
            -4.0 * s * s / (h * h)
        };
        let e0: Vec<f64> = (1..=m).map(|q| eig(self.h[0], q)).collect();
        let e1: Vec<f64> = (1..=m).map(|q| eig(self.h[1], q)).collect();
        let e2: Vec<f64> = (1..=m).map(|q| eig(self.h[2], q)).collect();
        let h2 = self.h.map(|v| v * v);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let (l0, l1, l2) = (e0[a], e1[b], e2[c]);
                    let mut lam = l0 + l1 + l2;
                    if self.stencil == LaplaceStencil::Mehrstellen {
                        lam += (h2[0] + h2[1]) / 12.0 * l0 * l1
                            + (h2[0] + h2[2]) / 12.0 * l0 * l2
                            + (h2[1] + h2[2]) / 12.0 * l1 * l2;
                    }
                    rhs[(a * m + b) * m + c] /= lam;
                }
            }
        }
        self.dst_3d(&mut rhs, m);
        let scale = (2.0 / (m + 1) as f64).powi(3);
        for i in 1..nn - 1 {
            for j in 1..nn - 1 {
                for k in 1..nn - 1 {
                    let v = rhs[((i - 1) * m + (j - 1)) * m + (k - 1)] * scale;
                    let id = self.index(i, j, k);
                    full[id] = v;
                }
            }
        }
        BoxField {
            nodes: nn,
            h: self.h,
            lengths: self.lengths,
            values: full,
        }
    }

    /// Maximum of the discrete Laplacian over interior nodes (harmonicity check).
    pub fn max_discrete_laplacian(&self, field: &BoxField) -> f64 {
        let nn = self.nodes;
        let mut worst: f64 = 0.0;
        for i in 1..nn - 1 {
            for j in 1..nn - 1 {
                for k in 1..nn - 1 {
                    worst = worst.max(self.apply_at(&field.values, i, j, k).abs());
                }
            }
        }
        worst
    }
}

/// Grid function on the box with tricubic interpolation.
#[derive(Debug, Clone)]
pub struct BoxField {
    nodes: usize,
    h: [f64; 3],
    lengths: [f64; 3],
    values: Vec<f64>,
}

impl BoxField {
    pub fn node_value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.nodes + j) * self.nodes + k]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut idx = [[0usize; 4]; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..3 {
            let xa = x[a].clamp(0.0, self.lengths[a]);
            let base = ((xa / self.h[a]).floor() as isize - 1).clamp(0, self.nodes as isize - 4) as usize;
            let pos: Vec<f64> = (0..4).map(|q| (base + q) as f64 * self.h[a]).collect();
            let lw = lagrange_weights(&pos, xa);
            for q in 0..4 {
                idx[a][q] = base + q;
                w[a][q] = lw[q];
            }
        }
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let mut row = 0.0;
                for c in 0..4 {
                    row += w[2][c] * self.node_value(idx[0][a], idx[1][b], idx[2][c]);
                }
                acc += w[0][a] * w[1][b] * row;
            }
        }
        acc
    }
}

/// Dirichlet Green's function of the box `[0, L₁]×[0, L₂]×[0, L₃]` by its
/// eigenfunction expansion, summed in closed form along the coordinate where `x`
/// and `y` are farthest apart. Exponentially convergent off the diagonal.
pub fn box_green_series(lengths: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    if lengths.len() != 3 || x.len() != 3 || y.len() != 3 {
        return Err(Error::Unsupported("series oracle implemented for n = 3".into()));
    }
    let axis = (0..3)
        .max_by(|&a, &b| (x[a] - y[a]).abs().total_cmp(&(x[b] - y[b]).abs()))
        .unwrap();
    let sep = (x[axis] - y[axis]).abs();
    if sep == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let (b, c) = (others[0], others[1]);
    let la = lengths[axis];
    let (s_lo, s_hi) = if x[axis] < y[axis] {
        (x[axis], y[axis])
    } else {
        (y[axis], x[axis])
    };
    // terms decay like exp(−κ·sep); stop once below 1e-18 relative
    let kmax_b = (42.0 * lengths[b] / (PI * sep)).ceil() as usize + 2;
    let kmax_c = (42.0 * lengths[c] / (PI * sep)).ceil() as usize + 2;
    let mut terms = Vec::with_capacity(kmax_b * kmax_c);
    for kb in 1..=kmax_b {
        let wb = kb as f64 * PI / lengths[b];
        let fb = (2.0 / lengths[b]) * (wb * x[b]).sin() * (wb * y[b]).sin();
        for kc in 1..=kmax_c {
            let wc = kc as f64 * PI / lengths[c];
            let kappa = (wb * wb + wc * wc).sqrt();
            if kappa * sep > 45.0 {
                break;
            }
            let fc = (2.0 / lengths[c]) * (wc * x[c]).sin() * (wc * y[c]).sin();
            // sinh(κ s_lo) sinh(κ(L − s_hi)) / (κ sinh(κ L)), overflow-free
            let g1 = (-kappa * (s_hi - s_lo)).exp()
                * (1.0 - (-2.0 * kappa * s_lo).exp())
                * (1.0 - (-2.0 * kappa * (la - s_hi)).exp())
                / (2.0 * kappa * (1.0 - (-2.0 * kappa * la).exp()));
            terms.push(fb * fc * g1);
        }
    }
    let n = 3usize;
    let strength = alpha_n(n) * (n as f64 - 2.0) * unit_sphere_area(n);
    Ok(strength * crate::quadrature::pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::singular_part;

    #[test]
    fn linear_data_is_reproduced_exactly() {
        let s = BoxLaplaceSolver::new(&[1.0, 2.0, 1.5], 17).unwrap();
        let f = s.harmonic_extension(|x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2]);
        let x = [0.37, 1.21, 0.8];
        assert!((f.eval(&x) - (1.0 + 0.74 - 1.21 + 0.4)).abs() < 1e-11);
    }

    #[test]
    fn harmonic_quadratic_is_reproduced() {
        // x² − y² is harmonic and its discrete Laplacian is exact
        for st in [LaplaceStencil::SevenPoint, LaplaceStencil::Mehrstellen] {
            let s = BoxLaplaceSolver::new(&[1.0, 1.0, 1.0], 17).unwrap().with_stencil(st);
            let f = s.harmonic_extension(|x| x[0] * x[0] - x[1] * x[1]);
            let x = [0.3, 0.6, 0.2];
            assert!((f.eval(&x) - (0.09 - 0.36)).abs() < 1e-11, "{st:?}");
        }
    }

    #[test]
    fn series_is_symmetric_and_vanishes_on_boundary() {
        let l = [1.0, 1.0, 1.0];
        let a = box_green_series(&l, &[0.3, 0.5, 0.5], &[0.5, 0.4, 0.6]).unwrap();
        let b = box_green_series(&l, &[0.5, 0.4, 0.6], &[0.3, 0.5, 0.5]).unwrap();
        assert!((a - b).abs() < 1e-12);
        let z = box_green_series(&l, &[0.3, 0.0, 0.5], &[0.5, 0.4, 0.6]).unwrap();
        assert!(z.abs() < 1e-14);
        // near the source the singular part dominates
        let near = box_green_series(&l, &[0.5, 0.5, 0.5], &[0.52, 0.5, 0.5]).unwrap();
        let sing = singular_part(3, &[0.5, 0.5, 0.5], &[0.52, 0.5, 0.5]);
        assert!((near - sing).abs() < 0.1 * sing);
    }
}
