//! The JSON run configuration read by the `fdlab` binary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::{RateModel, DEFAULT_WINDOW};
use crate::bubbles::critical_m;
use crate::error::{Error, Result};
use crate::greens::DomainSpec;
use crate::params::DilationConvention;
use crate::pde::{Form, SolverControl, Stretching};

/// `"critical"` or a number in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Value(f64),
    Named(NamedExponent),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedExponent {
    Critical,
}

impl Default for Exponent {
    fn default() -> Self {
        Exponent::Named(NamedExponent::Critical)
    }
}

impl Exponent {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Exponent::Value(m) => m,
            Exponent::Named(NamedExponent::Critical) => critical_m(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnsatzBlock {
    pub points: Vec<Vec<f64>>,
    pub t0: f64,
    pub eps: f64,
    /// Overrides the solved `b_j`.
    pub b: Option<Vec<f64>>,
    /// Times at which `fdlab ansatz` samples and projects.
    pub times: Vec<f64>,
    /// Samples per bubble along the first axis in `fdlab ansatz`.
    pub line_samples: usize,
    pub use_mu_corrected_h: bool,
}

impl Default for AnsatzBlock {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            t0: 2.0,
            eps: 0.4,
            b: None,
            times: vec![100.0, 1000.0, 10000.0],
            line_samples: 41,
            use_mu_corrected_h: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub intervals: usize,
    pub stretching: Stretching,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self {
            intervals: 2048,
            stretching: Stretching::Graded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Ansatz,
    /// `w = A(1 − r²/R²)²`.
    Bump { amplitude: f64 },
    /// A JSON `RadialState` on the configured grid.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationBlock {
    pub form: Form,
    pub initial: InitialData,
    /// `T` used to map ansatz data into the w-form.
    pub extinction_time_guess: f64,
    /// Extra exponents run concurrently, one CSV each.
    pub sweep_m: Vec<f64>,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        Self {
            form: Form::WForm,
            initial: InitialData::Ansatz,
            extinction_time_guess: 1.0,
            sweep_m: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBlock {
    pub window: (f64, f64),
    pub model: RateModel,
    /// Input series for `fdlab fit`; relative paths resolve against the config file.
    pub csv: Option<PathBuf>,
    /// Yamabe time at `τ = 0` (the ansatz `t₀` for ansatz runs).
    pub t_origin: Option<f64>,
}

impl Default for FitBlock {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            model: RateModel::LogCorrected,
            csv: None,
            t_origin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(default)]
    pub m: Exponent,
    /// Defaults to the unit ball.
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub convention: DilationConvention,
    #[serde(default)]
    pub ansatz: AnsatzBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverControl,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub fit: FitBlock,
    /// Seed for randomized checks.
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text)?;
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Reads the file; relative paths inside it are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(csv) = &cfg.fit.csv {
            if csv.is_relative() {
                cfg.fit.csv = Some(base.join(csv));
            }
        }
        if let InitialData::File { path: p } = &cfg.simulation.initial {
            if p.is_relative() {
                cfg.simulation.initial = InitialData::File { path: base.join(p) };
            }
        }
        Ok(cfg)
    }

    /// Fill defaults that depend on other fields and validate.
    fn resolve(&mut self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Config(format!("dimension {} < 3", self.n)));
        }
        let domain = self.domain.get_or_insert_with(|| DomainSpec::unit_ball(self.n));
        if domain.n != self.n {
            return Err(Error::Config(format!("domain dimension {} differs from n = {}", domain.n, self.n)));
        }
        domain.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.ansatz.points.is_empty() {
            self.ansatz.points = vec![vec![0.0; self.n]];
        }
        let m = self.m();
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::Config(format!("exponent m = {m} must lie in (0, 1)")));
        }
        if self.simulation.sweep_m.iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
            return Err(Error::Config("sweep exponents must lie in (0, 1)".into()));
        }
        if !(self.ansatz.t0 > 0.0) || self.ansatz.times.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("ansatz times must be positive".into()));
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn m(&self) -> f64 {
        self.m.resolve(self.n)
    }

    pub fn domain(&self) -> &DomainSpec {
        self.domain.as_ref().expect("resolved config has a domain")
    }

    /// The resolved configuration as pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves() {
        let c = RunConfig::from_json(r#"{"n": 3}"#).unwrap();
        assert_eq!(c.m(), 0.2);
        assert_eq!(c.ansatz.points, vec![vec![0.0; 3]]);
        let again = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn numeric_exponent_and_sweep() {
        let c = RunConfig::from_json(r#"{"n": 3, "m": 0.5, "simulation": {"initial": {"bump": {"amplitude": 2.0}}}}"#).unwrap();
        assert_eq!(c.m(), 0.5);
        assert_eq!(c.simulation.initial, InitialData::Bump { amplitude: 2.0 });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"n": 3, "bogus": 1}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"n": 3, "solver": {"dt": 1}}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"n": 2}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"n": 3, "m": 1.5}"#), Err(Error::Config(_))));
    }
}
