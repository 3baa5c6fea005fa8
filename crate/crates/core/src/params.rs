//! Projection constants `c₁, c₂`, the scaling law `μ₀(t)`, and the algebraic
//! system for the bubble coefficients `b_j` with its variational structure.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bubbles::profile::{bubble_u_radial, critical_p, dilation_kernel_radial};
use crate::error::{Error, Result};
use crate::greens::{alpha_n, pd_report, GreensMatrix};
use crate::quadrature::{unit_sphere_area, RadialRule};

/// Radius beyond which the `c₁, c₂` integrands are replaced by their leading
/// power-law tails, integrated exactly.
pub const DEFAULT_R_MAX: f64 = 1e4;

/// Integrals of `U^{p−1}Z_{n+1}` and `U^{p−1}Z_{n+1}²` over ℝⁿ, truncated at
/// `r_max` plus the analytic tail, with `panels_per_decade` 16-node panels.
fn projection_integrals(n: usize, r_max: f64, panels_per_decade: usize) -> (f64, f64) {
    let p = critical_p(n);
    let a = alpha_n(n);
    let nf = n as f64;
    let rule = RadialRule::new(1.0, r_max, 16, panels_per_decade);
    let f1 = |r: f64| bubble_u_radial(n, r).powf(p - 1.0) * dilation_kernel_radial(n, r);
    let f2 = |r: f64| {
        let z = dilation_kernel_radial(n, r);
        bubble_u_radial(n, r).powf(p - 1.0) * z * z
    };
    let area = unit_sphere_area(n);
    let i1 = rule.integrate(|r| f1(r) * r.powf(nf - 1.0));
    let i2 = rule.integrate(|r| f2(r) * r.powf(nf - 1.0));
    // r^{n-1} f1 ~ −(n−2)/2 α^p r^{−3};  r^{n-1} f2 ~ (n−2)²/4 α^{p+1} r^{−n−1}
    let tail1 = -0.5 * (nf - 2.0) * a.powf(p) / (2.0 * r_max * r_max);
    let tail2 = 0.25 * (nf - 2.0).powi(2) * a.powf(p + 1.0) / (nf * r_max.powf(nf));
    (area * (i1 + tail1), area * (i2 + tail2))
}

/// `c₁ = −p∫U^{p−1}Z_{n+1}` and `c₂ = ∫U^{p−1}Z_{n+1}²` (both over ℝⁿ).
///
/// Computed at two quadrature densities; fails unless they agree to 1e−8 relative.
pub fn constants_c1_c2(n: usize) -> Result<(f64, f64)> {
    constants_c1_c2_with(n, DEFAULT_R_MAX)
}

pub fn constants_c1_c2_with(n: usize, r_max: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(Error::InvalidDomain(format!("dimension {n} < 3")));
    }
    let p = critical_p(n);
    let (a1, a2) = projection_integrals(n, r_max, 4);
    let (b1, b2) = projection_integrals(n, r_max, 8);
    let rel = ((a1 - b1) / b1).abs().max(((a2 - b2) / b2).abs());
    if !(rel <= 1e-8) {
        return Err(Error::QuadratureNotConverged(rel));
    }
    Ok((-p * b1, b2))
}

/// Which coefficient multiplies the `μ̇` term of the leading error `E₀`.
///
/// Differentiating `U_μ^p` in time gives `p U^{p−1} Z_{n+1}` (`WithP`); the
/// projection constant `c₂` as usually written drops the `p` (`WithoutP`).
/// The two conventions lead to different `γ_n` but the same `b_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DilationConvention {
    #[default]
    WithP,
    WithoutP,
}

impl DilationConvention {
    pub fn factor(self, n: usize) -> f64 {
        match self {
            Self::WithP => critical_p(n),
            Self::WithoutP => 1.0,
        }
    }
}

/// `μ₀(t) = γ_n t^{−1/(n−2)}`, solving `κc₂ μ̇₀ = −(2c₁/(n−2)) μ₀^{n−1}`
/// with `κ` the dilation-term coefficient of the chosen convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub gamma_n: f64,
    pub t0: f64,
    pub convention: DilationConvention,
}

impl ScalingLaw {
    pub fn new(n: usize, t0: f64, convention: DilationConvention) -> Result<Self> {
        let (c1, c2) = constants_c1_c2(n)?;
        Self::from_constants(n, c1, c2, t0, convention)
    }

    pub fn from_constants(
        n: usize,
        c1: f64,
        c2: f64,
        t0: f64,
        convention: DilationConvention,
    ) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(Error::NonpositiveTime(t0));
        }
        let k = convention.factor(n);
        let gamma_n = (k * c2 / (2.0 * c1)).powf(1.0 / (n as f64 - 2.0));
        Ok(Self {
            n,
            c1,
            c2,
            gamma_n,
            t0,
            convention,
        })
    }

    /// Effective `c₂` in the projected `μ̇` term.
    pub fn effective_c2(&self) -> f64 {
        self.convention.factor(self.n) * self.c2
    }

    pub fn mu0(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::NonpositiveTime(t));
        }
        Ok(self.gamma_n * t.powf(-1.0 / (self.n as f64 - 2.0)))
    }

    pub fn mu0_dot(&self, t: f64) -> Result<f64> {
        Ok(-self.mu0(t)? / ((self.n as f64 - 2.0) * t))
    }

    /// Right-hand side of the `μ₀` ODE.
    pub fn ode_rhs(&self, mu: f64) -> f64 {
        -(2.0 * self.c1 / (self.effective_c2() * (self.n as f64 - 2.0))) * mu.powi(self.n as i32 - 1)
    }

    /// `γ̃_j` in `μ_{0j}E_{0j} = −γ̃_j μ₀^{n−2} q₀`; the same for every bubble
    /// once `b` solves the coefficient system.
    pub fn gamma_tilde(&self) -> f64 {
        2.0 / ((self.n as f64 - 2.0) * self.c2)
    }
}

/// The coefficient system `b_j^{n−3}H_jj − Σ_{i≠j} b_j^{(n−4)/2} b_i^{(n−2)/2} G_ij = 2/((n−2) b_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSystem {
    pub k: usize,
    pub n: usize,
    pub matrix: GreensMatrix,
}

impl BSystem {
    pub fn new(n: usize, matrix: GreensMatrix) -> Result<Self> {
        matrix.check_symmetric()?;
        Ok(Self {
            k: matrix.k,
            n,
            matrix,
        })
    }

    fn half_power(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    fn check_b(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: b.len(),
            });
        }
        for (j, &v) in b.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::NonpositiveB(j, v));
            }
        }
        Ok(())
    }

    /// `Λ_j = b_j^{(n−2)/2}`.
    pub fn to_lambda(&self, b: &[f64]) -> Vec<f64> {
        b.iter().map(|v| v.powf(self.half_power())).collect()
    }

    pub fn from_lambda(&self, lambda: &[f64]) -> Vec<f64> {
        lambda.iter().map(|v| v.powf(1.0 / self.half_power())).collect()
    }

    /// `I(b) = (1/(n−2))[Σ b_j^{n−2}H_jj − Σ_{i≠j}(b_ib_j)^{(n−2)/2}G_ij − Σ ln b_j²]`.
    pub fn functional_i(&self, b: &[f64]) -> Result<f64> {
        self.check_b(b)?;
        let nf = self.n as f64;
        let lam = self.to_lambda(b);
        let m = &self.matrix.entries;
        let mut s = 0.0;
        for j in 0..self.k {
            s += b[j].powf(nf - 2.0) * m[j][j] - 2.0 * b[j].ln();
            for i in 0..self.k {
                if i != j {
                    // entries hold −G off the diagonal
                    s += lam[i] * lam[j] * m[i][j];
                }
            }
        }
        Ok(s / (nf - 2.0))
    }

    /// Analytic `∇_b I`; its zeros are the solutions of the coefficient system.
    pub fn grad_i(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_b(b)?;
        let nf = self.n as f64;
        let hp = self.half_power();
        let m = &self.matrix.entries;
        let mut g = vec![0.0; self.k];
        for j in 0..self.k {
            let mut coupling = 0.0;
            for i in 0..self.k {
                if i != j {
                    coupling += b[i].powf(hp) * m[i][j];
                }
            }
            g[j] = b[j].powf(nf - 3.0) * m[j][j] + b[j].powf(hp - 1.0) * coupling
                - 2.0 / ((nf - 2.0) * b[j]);
        }
        Ok(g)
    }

    /// Residual of the coefficient system in its displayed form.
    pub fn system_residual(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.grad_i(b)
    }

    /// `Ĩ(Λ) = Σ H_jj Λ_j² − Σ_{i≠j} G_ij Λ_iΛ_j − Σ ln Λ_j^{4/(n−2)}`.
    pub fn functional_i_tilde(&self, lambda: &[f64]) -> Result<f64> {
        for (j, &v) in lambda.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::NonpositiveB(j, v));
            }
        }
        let m = &self.matrix.entries;
        let c = 4.0 / (self.n as f64 - 2.0);
        let mut s = 0.0;
        for j in 0..self.k {
            for i in 0..self.k {
                s += m[i][j] * lambda[i] * lambda[j];
            }
            s -= c * lambda[j].ln();
        }
        Ok(s)
    }

    pub fn grad_i_tilde(&self, lambda: &[f64]) -> Vec<f64> {
        let m = &self.matrix.entries;
        let c = 4.0 / (self.n as f64 - 2.0);
        (0..self.k)
            .map(|j| {
                let mv: f64 = (0..self.k).map(|i| m[j][i] * lambda[i]).sum();
                2.0 * mv - c / lambda[j]
            })
            .collect()
    }

    /// `2𝒢 + diag(4/((n−2)Λ_j²))`.
    pub fn hessian_i_tilde(&self, lambda: &[f64]) -> DMatrix<f64> {
        let c = 4.0 / (self.n as f64 - 2.0);
        let mut h = self.matrix.to_dmatrix() * 2.0;
        for j in 0..self.k {
            h[(j, j)] += c / (lambda[j] * lambda[j]);
        }
        h
    }

    pub fn hessian_eigenvalues(&self, b: &[f64]) -> Vec<f64> {
        let h = self.hessian_i_tilde(&self.to_lambda(b));
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Decoupled initial guess `b_j = (2/((n−2)H_jj))^{1/(n−2)}`.
    pub fn decoupled_guess(&self) -> Vec<f64> {
        let nf = self.n as f64;
        (0..self.k)
            .map(|j| (2.0 / ((nf - 2.0) * self.matrix.entries[j][j])).powf(1.0 / (nf - 2.0)))
            .collect()
    }
}

/// Solve the coefficient system by damped Newton on the strictly convex `Ĩ(Λ)`.
pub fn solve_b(sys: &BSystem) -> Result<Vec<f64>> {
    let report = pd_report(&sys.matrix)?;
    if !report.positive_definite {
        return Err(Error::MatrixNotPD(report.min_eigenvalue));
    }
    let mut lam = sys.to_lambda(&sys.decoupled_guess());
    let mut f = sys.functional_i_tilde(&lam)?;
    for _ in 0..200 {
        let b = sys.from_lambda(&lam);
        let res = sys.system_residual(&b)?;
        if res.iter().all(|r| r.abs() <= 1e-12) {
            return Ok(b);
        }
        let g = DVector::from_vec(sys.grad_i_tilde(&lam));
        let h = sys.hessian_i_tilde(&lam);
        let step = h
            .cholesky()
            .ok_or_else(|| Error::NewtonDiverged("Hessian lost definiteness".into()))?
            .solve(&(-&g));
        let decrement = -g.dot(&step);
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = lam.iter().zip(step.iter()).map(|(l, d)| l + s * d).collect();
            if trial.iter().all(|v| *v > 0.0) {
                let ft = sys.functional_i_tilde(&trial)?;
                if ft <= f - 1e-4 * s * decrement || decrement.abs() < 1e-28 {
                    lam = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            // at round-off level the Armijo test can fail even though the
            // full step is still the best available one
            let trial: Vec<f64> = lam.iter().zip(step.iter()).map(|(l, d)| l + d).collect();
            if trial.iter().all(|v| *v > 0.0) && decrement < 1e-20 {
                lam = trial;
                continue;
            }
            return Err(Error::NewtonDiverged("line search failed".into()));
        }
    }
    let b = sys.from_lambda(&lam);
    let worst = sys
        .system_residual(&b)?
        .iter()
        .fold(0.0f64, |a, r| a.max(r.abs()));
    if worst <= 1e-10 {
        Ok(b)
    } else {
        Err(Error::NewtonDiverged(format!("residual {worst:.3e} after 200 iterations")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{robin_matrix, DomainSpec};

    #[test]
    fn constants_are_positive() {
        for n in 3..=6 {
            let (c1, c2) = constants_c1_c2(n).unwrap();
            assert!(c1 > 0.0 && c2 > 0.0, "n={n}");
        }
    }

    #[test]
    fn c1_matches_integration_by_parts_identity() {
        // ∫U^{p−1}Z_{n+1} = −(n−2)²/(2(n+2)) ∫U^p and ∫U^p = α^p|𝕊^{n−1}|/n,
        // hence c₁ = (n−2) α^p |𝕊^{n−1}| / (2n).
        for n in 3..=6 {
            let (c1, _) = constants_c1_c2(n).unwrap();
            let nf = n as f64;
            let expected = (nf - 2.0) * alpha_n(n).powf(critical_p(n)) * unit_sphere_area(n) / (2.0 * nf);
            assert!(((c1 - expected) / expected).abs() < 1e-10, "n={n}: {c1} vs {expected}");
        }
    }

    #[test]
    fn mu0_power_law_and_identity() {
        let law = ScalingLaw::new(3, 1.0, DilationConvention::WithoutP).unwrap();
        let t = 7.0;
        let ratio = law.mu0(2.0 * t).unwrap() / law.mu0(t).unwrap();
        assert!((ratio - 0.5).abs() < 1e-15);
        for n in 3..=6 {
            for conv in [DilationConvention::WithP, DilationConvention::WithoutP] {
                let law = ScalingLaw::new(n, 1.0, conv).unwrap();
                let t = 13.0;
                let mu = law.mu0(t).unwrap();
                let lhs = law.effective_c2() / law.c1 * mu.powf(1.0 - n as f64) * law.mu0_dot(t).unwrap();
                assert!((lhs + 2.0 / (n as f64 - 2.0)).abs() < 1e-12);
                let half = law.mu0(2f64.powi(n as i32 - 2) * t).unwrap();
                assert!((half - mu / 2.0).abs() < 1e-14);
            }
        }
        assert_eq!(
            ScalingLaw::new(3, 1.0, DilationConvention::WithP).unwrap().mu0(0.0),
            Err(Error::NonpositiveTime(0.0))
        );
    }

    #[test]
    fn without_p_matches_closed_form_gamma() {
        let law = ScalingLaw::new(4, 1.0, DilationConvention::WithoutP).unwrap();
        assert!((law.gamma_n - (law.c2 / (2.0 * law.c1)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_center_bubble_coefficient() {
        let d = DomainSpec::unit_ball(3);
        let sys = BSystem::new(3, robin_matrix(&d, &[vec![0.0; 3]]).unwrap()).unwrap();
        let b = solve_b(&sys).unwrap();
        assert!((b[0] - 2.0 / alpha_n(3)).abs() < 1e-12);
        assert!((b[0] - 1.51968).abs() < 1e-5);
    }

    #[test]
    fn refuses_non_pd_and_nonpositive_b() {
        let sys = BSystem::new(3, GreensMatrix::from_entries(vec![vec![1.0, -2.0], vec![-2.0, 1.0]])).unwrap();
        assert!(matches!(solve_b(&sys), Err(Error::MatrixNotPD(_))));
        assert_eq!(sys.functional_i(&[1.0, -0.5]), Err(Error::NonpositiveB(1, -0.5)));
        assert!(matches!(sys.grad_i(&[0.0, 1.0]), Err(Error::NonpositiveB(0, _))));
    }

    #[test]
    fn lambda_variables_relation() {
        let d = DomainSpec::unit_ball(5);
        let q = vec![vec![0.3, 0.1, 0.0, 0.0, 0.0], vec![-0.2, -0.3, 0.1, 0.0, 0.0]];
        let sys = BSystem::new(5, robin_matrix(&d, &q).unwrap()).unwrap();
        let b = [0.8, 1.3];
        let lhs = 3.0 * sys.functional_i(&b).unwrap();
        let rhs = sys.functional_i_tilde(&sys.to_lambda(&b)).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }
}
