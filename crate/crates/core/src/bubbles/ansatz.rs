//! Multi-bubble ansatz `z̃` and its corrected form `z = z̃ + Φ̃`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::correction::{p0_default_grid, q0_radial, solve_p0, CorrectionProfile};
use super::profile::{bubble_u_radial, critical_p, dilation_kernel_radial};
use crate::error::{Error, Result};
use crate::greens::{
    alpha_n, dist, robin_matrix, AxisymmetricBallSolver, BallField, BoxField, BoxLaplaceSolver, DomainKind,
    DomainSpec, GreensMatrix, RegularPartField,
};
use crate::params::{solve_b, BSystem, DilationConvention, ScalingLaw};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub n: usize,
    pub domain: DomainSpec,
    pub q: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub eps_cutoff: f64,
    pub gamma_tilde: Vec<f64>,
    /// Use the `μ`-dependent regular part `H_μ` (exact boundary cancellation)
    /// instead of `H`.
    #[serde(default)]
    pub use_mu_corrected_h: bool,
}

impl AnsatzConfig {
    /// Fill in `b` from the coefficient system and `γ̃_j` from the scaling law.
    pub fn solved(domain: DomainSpec, q: Vec<Vec<f64>>, eps_cutoff: f64, law: &ScalingLaw) -> Result<Self> {
        let matrix = robin_matrix(&domain, &q)?;
        let b = solve_b(&BSystem::new(domain.n, matrix)?)?;
        let k = q.len();
        let cfg = Self {
            n: domain.n,
            domain,
            q,
            b,
            eps_cutoff,
            gamma_tilde: vec![law.gamma_tilde(); k],
            use_mu_corrected_h: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn k(&self) -> usize {
        self.q.len()
    }

    /// Largest admissible cutoff radius.
    pub fn max_eps(&self) -> f64 {
        let mut m = f64::INFINITY;
        for (i, qi) in self.q.iter().enumerate() {
            m = m.min(self.domain.boundary_distance(qi));
            for ql in &self.q[i + 1..] {
                m = m.min(dist(qi, ql));
            }
        }
        0.5 * m
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.domain.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: self.domain.n,
            });
        }
        let k = self.k();
        if k == 0 {
            return Err(Error::Config("ansatz needs at least one point".into()));
        }
        for len in [self.b.len(), self.gamma_tilde.len()] {
            if len != k {
                return Err(Error::DimensionMismatch { expected: k, got: len });
            }
        }
        for (j, q) in self.q.iter().enumerate() {
            if q.len() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: q.len(),
                });
            }
            if !self.domain.contains(q) {
                return Err(Error::PointOutsideDomain(q.clone()));
            }
            for i in 0..j {
                if dist(q, &self.q[i]) == 0.0 {
                    return Err(Error::DuplicatePoints(i, j));
                }
            }
        }
        for (j, &b) in self.b.iter().enumerate() {
            if !(b > 0.0) {
                return Err(Error::NonpositiveB(j, b));
            }
        }
        let bound = self.max_eps();
        if !(self.eps_cutoff > 0.0 && self.eps_cutoff < bound) {
            return Err(Error::CutoffTooLarge {
                eps: self.eps_cutoff,
                bound,
            });
        }
        Ok(())
    }
}

/// Cutoff `η₀`: 1 on `[0, ε/2]`, 0 beyond `ε`, quintic smoothstep in between (C²).
pub fn cutoff_eta(s: f64, eps: f64) -> f64 {
    let a = 0.5 * eps;
    if s <= a {
        1.0
    } else if s >= eps {
        0.0
    } else {
        let x = (s - a) / a;
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// `H_μ(·, q)`: harmonic with boundary values `α_n(μ² + |x−q|²)^{−(n−2)/2}`.
#[derive(Debug, Clone)]
enum MuRegularPart {
    Constant(f64),
    Ball(BallField),
    Box(BoxField),
}

impl MuRegularPart {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::Ball(f) => f.eval(x),
            Self::Box(f) => f.eval(x),
        }
    }
}

/// The ansatz for a fixed configuration and scaling law, with the resolved
/// regular parts and `p₀` profile.
#[derive(Debug)]
pub struct Ansatz {
    pub cfg: AnsatzConfig,
    pub law: ScalingLaw,
    pub matrix: GreensMatrix,
    h_fields: Vec<RegularPartField>,
    p0: Arc<CorrectionProfile>,
    h_mu_cache: Mutex<HashMap<(usize, u64), Arc<MuRegularPart>>>,
}

impl Ansatz {
    pub fn new(cfg: AnsatzConfig, law: ScalingLaw) -> Result<Self> {
        let p0 = solve_p0(&p0_default_grid(), cfg.n, law.c1, law.c2)?;
        Self::with_profile(cfg, law, Arc::new(p0))
    }

    pub fn with_profile(cfg: AnsatzConfig, law: ScalingLaw, p0: Arc<CorrectionProfile>) -> Result<Self> {
        cfg.validate()?;
        if law.n != cfg.n || p0.n != cfg.n {
            return Err(Error::DimensionMismatch {
                expected: cfg.n,
                got: if law.n != cfg.n { law.n } else { p0.n },
            });
        }
        let h_fields = cfg
            .q
            .iter()
            .map(|q| RegularPartField::new(&cfg.domain, q))
            .collect::<Result<Vec<_>>>()?;
        let matrix = robin_matrix(&cfg.domain, &cfg.q)?;
        Ok(Self {
            cfg,
            law,
            matrix,
            h_fields,
            p0,
            h_mu_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn profile(&self) -> &CorrectionProfile {
        &self.p0
    }

    pub fn profile_arc(&self) -> Arc<CorrectionProfile> {
        self.p0.clone()
    }

    /// `μ_j(t) = b_j μ₀(t)`.
    pub fn mu(&self, t: f64) -> Result<Vec<f64>> {
        let m0 = self.law.mu0(t)?;
        Ok(self.cfg.b.iter().map(|b| b * m0).collect())
    }

    fn h_mu(&self, j: usize, mu: f64) -> Result<Arc<MuRegularPart>> {
        let key = (j, mu.to_bits());
        if let Some(f) = self.h_mu_cache.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let n = self.cfg.n;
        let a = alpha_n(n);
        let q = self.cfg.q[j].clone();
        let e = (n as f64 - 2.0) / 2.0;
        let field = match &self.cfg.domain.shape {
            DomainKind::UnitBall { radius } if q.iter().all(|v| *v == 0.0) => {
                MuRegularPart::Constant(a * (mu * mu + radius * radius).powf(-e))
            }
            DomainKind::UnitBall { radius } => {
                let solver = AxisymmetricBallSolver::new(n, *radius, self.cfg.domain.bvp_nodes);
                let qn = crate::greens::norm(&q);
                let r = *radius;
                MuRegularPart::Ball(solver.solve(&q, |c| a * (mu * mu + r * r + qn * qn - 2.0 * r * qn * c).powf(-e))?)
            }
            DomainKind::Box { lengths } => {
                let solver = BoxLaplaceSolver::new(lengths, self.cfg.domain.bvp_nodes)?;
                MuRegularPart::Box(solver.harmonic_extension(|x| a * (mu * mu + dist(x, &q).powi(2)).powf(-e)))
            }
        };
        let field = Arc::new(field);
        self.h_mu_cache.lock().unwrap().insert(key, field.clone());
        Ok(field)
    }

    /// `U_{μ,ξ}(x) = α_n μ^{(n−2)/2} (μ² + |x−ξ|²)^{−(n−2)/2}`.
    pub fn bubble(&self, x: &[f64], mu: f64, xi: &[f64]) -> f64 {
        let e = (self.cfg.n as f64 - 2.0) / 2.0;
        let d = dist(x, xi);
        alpha_n(self.cfg.n) * (mu / (mu * mu + d * d)).powf(e)
    }

    /// `z̃(x) = Σ_j U_{μ_j,ξ_j}(x) − μ_j^{(n−2)/2} H(x, q_j)` (or `H_{μ_j}`).
    pub fn tilde_z(&self, x: &[f64], mu: &[f64], xi: &[Vec<f64>]) -> Result<f64> {
        self.check_point(x)?;
        self.check_params(mu, xi)?;
        self.tilde_z_unchecked(x, mu, xi)
    }

    fn tilde_z_unchecked(&self, x: &[f64], mu: &[f64], xi: &[Vec<f64>]) -> Result<f64> {
        let e = (self.cfg.n as f64 - 2.0) / 2.0;
        let mut s = 0.0;
        for j in 0..self.cfg.k() {
            let h = if self.cfg.use_mu_corrected_h {
                self.h_mu(j, mu[j])?.eval(x)
            } else {
                self.h_fields[j].eval(x)
            };
            s += self.bubble(x, mu[j], &xi[j]) - mu[j].powf(e) * h;
        }
        Ok(s)
    }

    /// `Φ̃(x, t) = Σ_j μ_j^{−(n−2)/2} η₀(x − q_j) γ̃_j μ₀^{n−2} p₀(|x − ξ_j|/μ_j)`.
    pub fn phi_tilde(&self, x: &[f64], t: f64) -> Result<f64> {
        let n = self.cfg.n as f64;
        let m0 = self.law.mu0(t)?;
        let mut s = 0.0;
        for j in 0..self.cfg.k() {
            let q = &self.cfg.q[j];
            let eta = cutoff_eta(dist(x, q), self.cfg.eps_cutoff);
            if eta == 0.0 {
                continue;
            }
            let mu = self.cfg.b[j] * m0;
            let y = dist(x, q) / mu;
            s += mu.powf(-(n - 2.0) / 2.0) * eta * self.cfg.gamma_tilde[j] * m0.powf(n - 2.0) * self.p0.eval(y);
        }
        Ok(s)
    }

    /// Full ansatz `z(x, t)` with `μ_j = b_jμ₀(t)` and `ξ_j = q_j`.
    pub fn z(&self, x: &[f64], t: f64) -> Result<f64> {
        self.check_point(x)?;
        self.z_unchecked(x, t)
    }

    pub(crate) fn z_unchecked(&self, x: &[f64], t: f64) -> Result<f64> {
        let mu = self.mu(t)?;
        Ok(self.tilde_z_unchecked(x, &mu, &self.cfg.q)? + self.phi_tilde(x, t)?)
    }

    /// `z̃` along the leading-order trajectory `μ_j = b_jμ₀(t)`, `ξ_j = q_j`.
    pub(crate) fn tilde_z_at_time(&self, x: &[f64], t: f64) -> Result<f64> {
        let mu = self.mu(t)?;
        self.tilde_z_unchecked(x, &mu, &self.cfg.q)
    }

    /// `μ_jE_{0j}(y)` at `y` (bubble-scaled variable), for the given convention
    /// on the `μ̇` term.
    pub fn mu_e0(&self, j: usize, y: f64, t: f64, convention: DilationConvention) -> Result<f64> {
        let n = self.cfg.n;
        let nf = n as f64;
        let p = critical_p(n);
        let mu = self.mu(t)?;
        let m0 = self.law.mu0(t)?;
        let m0dot = self.law.mu0_dot(t)?;
        let e = (nf - 2.0) / 2.0;
        let mut bracket = -mu[j].powf(nf - 2.0) * self.matrix.diagonal(j);
        for i in 0..self.cfg.k() {
            if i != j {
                bracket += mu[j].powf(e) * mu[i].powf(e) * self.matrix.green_between(i, j);
            }
        }
        let w = bubble_u_radial(n, y).powf(p - 1.0);
        let rate = m0dot / m0;
        Ok(p * w * bracket + convention.factor(n) * rate * w * dilation_kernel_radial(n, y))
    }

    /// Least-squares `γ̃_j` in `μ_jE_{0j} = −γ̃_j μ₀^{n−2} q₀` over `|y| ≤ 10`,
    /// with the relative rms of the fit.
    pub fn fit_gamma_tilde(&self, j: usize, t: f64, convention: DilationConvention) -> Result<(f64, f64)> {
        let n = self.cfg.n;
        let m0n = self.law.mu0(t)?.powf(n as f64 - 2.0);
        let ys: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
        let mut num = 0.0;
        let mut den = 0.0;
        let mut pairs = Vec::with_capacity(ys.len());
        for &y in &ys {
            let lhs = -self.mu_e0(j, y, t, convention)?;
            let q = m0n * q0_radial(n, self.law.c1, self.law.c2, y);
            num += lhs * q;
            den += q * q;
            pairs.push((lhs, q));
        }
        let g = num / den;
        let (mut r2, mut l2) = (0.0, 0.0);
        for (lhs, q) in pairs {
            r2 += (lhs - g * q).powi(2);
            l2 += lhs * lhs;
        }
        Ok((g, (r2 / l2).sqrt()))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.cfg.n {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.n,
                got: x.len(),
            });
        }
        if self.cfg.domain.boundary_distance(x) < -1e-12 {
            return Err(Error::PointOutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    fn check_params(&self, mu: &[f64], xi: &[Vec<f64>]) -> Result<()> {
        let k = self.cfg.k();
        if mu.len() != k || xi.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: mu.len().min(xi.len()),
            });
        }
        if let Some(&m) = mu.iter().find(|m| !(**m > 0.0)) {
            return Err(Error::InvalidDomain(format!("nonpositive scale {m}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn center_ansatz(use_mu: bool) -> Ansatz {
        let law = ScalingLaw::new(3, 1.0, DilationConvention::WithP).unwrap();
        let mut cfg = AnsatzConfig::solved(DomainSpec::unit_ball(3), vec![vec![0.0; 3]], 0.4, &law).unwrap();
        cfg.use_mu_corrected_h = use_mu;
        Ansatz::new(cfg, law).unwrap()
    }

    #[test]
    fn tilde_z_reference_value() {
        let a = center_ansatz(false);
        let z = a.tilde_z(&[0.5, 0.0, 0.0], &[0.01], &[vec![0.0; 3]]).unwrap();
        let al = alpha_n(3);
        let expected = 0.1 * (al / (1e-4f64 + 0.25).sqrt() - al);
        assert!((z - expected).abs() < 1e-14);
        assert!((z - 0.131555).abs() < 1e-6);
    }

    #[test]
    fn mu_corrected_h_cancels_on_the_boundary() {
        let a = center_ansatz(true);
        for x in [[1.0, 0.0, 0.0], [0.0, -0.6, 0.8]] {
            assert!(a.tilde_z(&x, &[0.05], &[vec![0.0; 3]]).unwrap().abs() < 1e-15);
        }
        let law = ScalingLaw::new(3, 1.0, DilationConvention::WithP).unwrap();
        let mut cfg = AnsatzConfig::solved(DomainSpec::unit_ball(3), vec![vec![0.2, 0.0, 0.0]], 0.3, &law).unwrap();
        cfg.use_mu_corrected_h = true;
        let off = Ansatz::new(cfg, law).unwrap();
        let xi = vec![vec![0.2, 0.0, 0.0]];
        for x in [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [-1.0, 0.0, 0.0]] {
            assert!(off.tilde_z(&x, &[0.05], &xi).unwrap().abs() < 1e-3);
        }
    }

    #[test]
    fn cutoff_shape() {
        let eps = 0.4;
        assert_eq!(cutoff_eta(0.1, eps), 1.0);
        assert_eq!(cutoff_eta(0.2, eps), 1.0);
        assert_eq!(cutoff_eta(0.4, eps), 0.0);
        assert!((cutoff_eta(0.3, eps) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        for s in [0.2, 0.4] {
            let d = (cutoff_eta(s + h, eps) - cutoff_eta(s - h, eps)) / (2.0 * h);
            assert!(d.abs() < 1e-4);
        }
    }

    #[test]
    fn z_equals_tilde_z_outside_cutoff_and_vanishes_late() {
        let a = center_ansatz(false);
        let x = [0.6, 0.0, 0.1];
        let t = 50.0;
        let mu = a.mu(t).unwrap();
        assert_eq!(a.z(&x, t).unwrap(), a.tilde_z(&x, &mu, &a.cfg.q).unwrap());
        assert!(a.z(&[0.3, 0.0, 0.0], 1e8).unwrap().abs() < 1e-3);
    }

    #[test]
    fn gamma_tilde_is_exact_with_p_and_inexact_without() {
        let a = center_ansatz(false);
        let (g, rms) = a.fit_gamma_tilde(0, 20.0, DilationConvention::WithP).unwrap();
        assert!((g - a.law.gamma_tilde()).abs() < 1e-10 * g);
        assert!(rms < 1e-10);
        let law = ScalingLaw::new(3, 1.0, DilationConvention::WithoutP).unwrap();
        let b = Ansatz::new(a.cfg.clone(), law).unwrap();
        let (_, rms) = b.fit_gamma_tilde(0, 20.0, DilationConvention::WithP).unwrap();
        assert!(rms > 1e-2);
    }
}
