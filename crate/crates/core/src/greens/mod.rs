//! Dirichlet Green's functions, their regular parts, and the interaction
//! matrix built from them.
//!
//! Normalization: `G(x, y) = α_n |x − y|^{2−n} − H(x, y)` where `H(·, y)` is
//! harmonic and equals `α_n |x − y|^{2−n}` on the boundary, with
//! `α_n = (n(n−2))^{(n−2)/4}`. With this choice `−Δ_x G = α_n (n−2) |𝕊^{n−1}| δ_y`.

mod ball;
mod boxed;

pub use ball::{ball_image_regular_part, AxisymmetricBallSolver, BallField};
pub use boxed::{box_green_series, BoxField, BoxLaplaceSolver, LaplaceStencil};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `α_n = (n(n−2))^{(n−2)/4}`, the constant making `U(y) = α_n(1+|y|²)^{-(n-2)/2}`
/// solve `ΔU + U^p = 0`.
pub fn alpha_n(n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0)
}

/// Default number of grid nodes per axis for grid-based solves.
pub const DEFAULT_BVP_NODES: usize = 129;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum DomainKind {
    /// Ball of the given radius centered at the origin.
    UnitBall { radius: f64 },
    /// Axis-aligned box `[0, L₁] × … × [0, L_n]`.
    Box { lengths: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub n: usize,
    pub shape: DomainKind,
    /// Nodes per axis for grid solves (box regular parts, ball oracles).
    #[serde(default = "default_bvp_nodes")]
    pub bvp_nodes: usize,
}

fn default_bvp_nodes() -> usize {
    DEFAULT_BVP_NODES
}

impl DomainSpec {
    pub fn unit_ball(n: usize) -> Self {
        Self::ball(n, 1.0)
    }

    pub fn ball(n: usize, radius: f64) -> Self {
        Self {
            n,
            shape: DomainKind::UnitBall { radius },
            bvp_nodes: DEFAULT_BVP_NODES,
        }
    }

    pub fn cube(lengths: Vec<f64>) -> Self {
        Self {
            n: lengths.len(),
            shape: DomainKind::Box { lengths },
            bvp_nodes: DEFAULT_BVP_NODES,
        }
    }

    pub fn with_bvp_nodes(mut self, nodes: usize) -> Self {
        self.bvp_nodes = nodes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidDomain(format!("dimension {} < 3", self.n)));
        }
        if self.bvp_nodes < 5 {
            return Err(Error::InvalidDomain("bvp_nodes must be at least 5".into()));
        }
        match &self.shape {
            DomainKind::UnitBall { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidDomain(format!("radius {radius} must be > 0")));
                }
            }
            DomainKind::Box { lengths } => {
                if lengths.len() != self.n {
                    return Err(Error::DimensionMismatch {
                        expected: self.n,
                        got: lengths.len(),
                    });
                }
                if lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                    return Err(Error::InvalidDomain("box lengths must be > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Signed distance to the boundary: positive inside.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match &self.shape {
            DomainKind::UnitBall { radius } => radius - norm(x),
            DomainKind::Box { lengths } => x
                .iter()
                .zip(lengths)
                .map(|(&xi, &l)| xi.min(l - xi))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n && self.boundary_distance(x) > 0.0
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_interior(&self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        if !self.contains(x) {
            return Err(Error::PointOutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    fn check_closure(&self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        // allow round-off on the boundary
        if self.boundary_distance(x) < -1e-12 {
            return Err(Error::PointOutsideDomain(x.to_vec()));
        }
        Ok(())
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// The singular part `α_n |x − y|^{2−n}`.
pub fn singular_part(n: usize, x: &[f64], y: &[f64]) -> f64 {
    alpha_n(n) * dist(x, y).powf(2.0 - n as f64)
}

/// A regular part `H(·, y)` resolved for one source point, evaluable anywhere
/// in the closed domain.
#[derive(Debug, Clone)]
pub enum RegularPartField {
    Ball { n: usize, radius: f64, source: Vec<f64> },
    Box(BoxField),
}

impl RegularPartField {
    pub fn new(domain: &DomainSpec, source: &[f64]) -> Result<Self> {
        domain.validate()?;
        domain.check_interior(source)?;
        match &domain.shape {
            DomainKind::UnitBall { radius } => Ok(Self::Ball {
                n: domain.n,
                radius: *radius,
                source: source.to_vec(),
            }),
            DomainKind::Box { lengths } => {
                let solver = BoxLaplaceSolver::new(lengths, domain.bvp_nodes)?;
                let n = domain.n;
                let y = source.to_vec();
                let field = solver.harmonic_extension(|x| singular_part(n, x, &y));
                Ok(Self::Box(field))
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Ball { n, radius, source } => ball_image_regular_part(*n, *radius, x, source),
            Self::Box(f) => f.eval(x),
        }
    }
}

/// Green's function `G(x, y)` with Dirichlet boundary condition.
pub fn green(domain: &DomainSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    domain.validate()?;
    domain.check_interior(x)?;
    domain.check_interior(y)?;
    if dist(x, y) == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let h = RegularPartField::new(domain, y)?.eval(x);
    Ok(singular_part(domain.n, x, y) - h)
}

/// Regular part `H(x, y)`: harmonic in `x`, equal to `α_n|x−y|^{2−n}` for `x` on the
/// boundary. `x` may lie on the boundary; `y` must be interior.
pub fn regular_part(domain: &DomainSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    domain.validate()?;
    domain.check_closure(x)?;
    domain.check_interior(y)?;
    Ok(RegularPartField::new(domain, y)?.eval(x))
}

/// The symmetric matrix with `H(q_j, q_j)` on the diagonal and `−G(q_i, q_j)` off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensMatrix {
    pub k: usize,
    pub entries: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
}

impl GreensMatrix {
    /// Wrap a raw matrix (no points attached); used for tests and CLI input.
    pub fn from_entries(entries: Vec<Vec<f64>>) -> Self {
        Self {
            k: entries.len(),
            entries,
            points: Vec::new(),
        }
    }

    pub fn diagonal(&self, j: usize) -> f64 {
        self.entries[j][j]
    }

    /// `G(q_i, q_j)` for `i ≠ j`.
    pub fn green_between(&self, i: usize, j: usize) -> f64 {
        -self.entries[i][j]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.k, self.k, |i, j| self.entries[i][j])
    }

    pub fn check_symmetric(&self) -> Result<()> {
        for i in 0..self.k {
            if self.entries[i].len() != self.k {
                return Err(Error::DimensionMismatch {
                    expected: self.k,
                    got: self.entries[i].len(),
                });
            }
            for j in 0..i {
                let a = self.entries[i][j];
                let b = self.entries[j][i];
                let scale = a.abs().max(b.abs()).max(1e-300);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::NonSymmetricInput(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.check_symmetric()?;
        let eig = SymmetricEigen::new(self.to_dmatrix());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }
}

/// Build the interaction matrix for the given blow-up points.
pub fn robin_matrix(domain: &DomainSpec, points: &[Vec<f64>]) -> Result<GreensMatrix> {
    domain.validate()?;
    if points.is_empty() {
        return Err(Error::Config("at least one point is required".into()));
    }
    for p in points {
        domain.check_interior(p)?;
    }
    for i in 0..points.len() {
        for j in 0..i {
            if dist(&points[i], &points[j]) == 0.0 {
                return Err(Error::DuplicatePoints(j, i));
            }
        }
    }
    let k = points.len();
    let fields: Vec<RegularPartField> = points
        .iter()
        .map(|q| RegularPartField::new(domain, q))
        .collect::<Result<_>>()?;
    let mut entries = vec![vec![0.0; k]; k];
    for i in 0..k {
        entries[i][i] = fields[i].eval(&points[i]);
        for j in 0..i {
            // average both orderings so the matrix is symmetric to round-off
            let gij = singular_part(domain.n, &points[i], &points[j]) - fields[j].eval(&points[i]);
            let gji = singular_part(domain.n, &points[j], &points[i]) - fields[i].eval(&points[j]);
            let g = 0.5 * (gij + gji);
            entries[i][j] = -g;
            entries[j][i] = -g;
        }
    }
    Ok(GreensMatrix {
        k,
        entries,
        points: points.to_vec(),
    })
}

/// Eigenvalue threshold below which a matrix is not considered positive definite.
pub const PD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdReport {
    pub positive_definite: bool,
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue within ±tolerance: reported as not PD.
    pub borderline: bool,
}

pub fn pd_report(m: &GreensMatrix) -> Result<PdReport> {
    let ev = m.eigenvalues()?;
    let min = ev.first().copied().unwrap_or(f64::NAN);
    Ok(PdReport {
        positive_definite: min > PD_TOLERANCE,
        min_eigenvalue: min,
        borderline: min.abs() <= PD_TOLERANCE,
    })
}

pub fn is_positive_definite(m: &GreensMatrix) -> Result<bool> {
    Ok(pd_report(m)?.positive_definite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        assert!((alpha_n(3) - 3f64.powf(0.25)).abs() < 1e-15);
        assert!((alpha_n(4) - 8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ball_green_through_center() {
        let d = DomainSpec::unit_ball(3);
        let g = green(&d, &[0.5, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
        let a3 = alpha_n(3);
        assert!((g - a3 * (1.0 / 0.5 - 1.0)).abs() < 1e-13);
        assert!((g - 1.31607).abs() < 1e-5);
    }

    #[test]
    fn ball_regular_part_examples() {
        let d = DomainSpec::unit_ball(3);
        let a3 = alpha_n(3);
        for x in [[0.1, 0.2, -0.3], [0.0, 0.0, 0.9], [0.0; 3]] {
            let h = regular_part(&d, &x, &[0.0; 3]).unwrap();
            assert!((h - a3).abs() < 1e-14);
        }
        let q = [0.5, 0.0, 0.0];
        let h = regular_part(&d, &q, &q).unwrap();
        assert!((h - a3 / 0.75).abs() < 1e-13);
        assert!((h - 1.75476).abs() < 1e-5);
        // boundary condition
        let y = [0.2, -0.3, 0.1];
        let xb = [0.6, 0.0, 0.8];
        let h = regular_part(&d, &xb, &y).unwrap();
        assert!((h - singular_part(3, &xb, &y)).abs() < 1e-13);
    }

    #[test]
    fn errors_are_reported() {
        let d = DomainSpec::unit_ball(3);
        assert!(matches!(
            green(&d, &[1.5, 0.0, 0.0], &[0.0; 3]),
            Err(Error::PointOutsideDomain(_))
        ));
        assert_eq!(
            green(&d, &[0.1, 0.0, 0.0], &[0.1, 0.0, 0.0]),
            Err(Error::CoincidentPoints)
        );
        assert!(matches!(
            robin_matrix(&d, &[vec![0.1, 0.0, 0.0], vec![0.1, 0.0, 0.0]]),
            Err(Error::DuplicatePoints(0, 1))
        ));
        let bad = GreensMatrix::from_entries(vec![vec![1.0, 0.5], vec![0.4, 1.0]]);
        assert!(matches!(
            is_positive_definite(&bad),
            Err(Error::NonSymmetricInput(1, 0))
        ));
    }

    #[test]
    fn single_center_point_matrix() {
        for n in 3..=6 {
            let d = DomainSpec::unit_ball(n);
            let m = robin_matrix(&d, &[vec![0.0; n]]).unwrap();
            assert_eq!(m.k, 1);
            assert!((m.entries[0][0] - alpha_n(n)).abs() < 1e-14);
            assert!(is_positive_definite(&m).unwrap());
        }
    }

    #[test]
    fn symmetric_pair_matrix() {
        let d = DomainSpec::unit_ball(3);
        let m = robin_matrix(&d, &[vec![0.4, 0.0, 0.0], vec![-0.4, 0.0, 0.0]]).unwrap();
        let a = alpha_n(3);
        // H(q,q) = α/(1-|q|²), G(q1,q2) = α/0.8 − α/(1+0.16)
        let h = a / (1.0 - 0.16);
        let g = a / 0.8 - a / 1.16;
        assert!((m.entries[0][0] - h).abs() < 1e-13);
        assert!((m.entries[1][1] - h).abs() < 1e-13);
        assert!((m.entries[0][1] + g).abs() < 1e-13);
        assert_eq!(m.entries[0][1], m.entries[1][0]);
    }

    #[test]
    fn diagonal_dominant_is_pd_and_borderline_is_not() {
        let m = GreensMatrix::from_entries(vec![
            vec![2.0, 0.1, 0.0],
            vec![0.1, 2.0, 0.1],
            vec![0.0, 0.1, 2.0],
        ]);
        assert!(is_positive_definite(&m).unwrap());
        let singular = GreensMatrix::from_entries(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let r = pd_report(&singular).unwrap();
        assert!(!r.positive_definite);
        assert!(r.borderline);
    }
}
