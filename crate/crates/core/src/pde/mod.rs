//! Radial evolution of `w_τ = Δw^m` and `(u^p)_t = Δu + u^p` on a ball with
//! zero Dirichlet data.

mod grid;
mod solver;
mod steady;
mod transform;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use grid::{RadialGrid, RadialOperator, Stretching, GRADED_CLUSTERING};
pub use solver::{RadialSolver, SolverControl};
pub use steady::{discrete_steady_state, LaneEmdenProfile};
pub use transform::{transform_u_to_w, transform_w_to_u, Transformation};

use crate::bubbles::{critical_m, Ansatz};
use crate::error::{Error, Result};
use crate::greens::DomainKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    #[default]
    WForm,
    UForm,
}

/// Nodal values of `w` (at time `τ`) or `u` (at time `t`); `p = 1/m` for the u-form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialState {
    pub t: f64,
    pub values: Vec<f64>,
    pub form: Form,
    pub m: f64,
}

impl RadialState {
    pub fn p(&self) -> f64 {
        1.0 / self.m
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn center(&self) -> f64 {
        self.values[0]
    }

    /// `∫ v dx / ω_{n−1}` with the solver's control volumes.
    pub fn mass(&self, op: &RadialOperator) -> f64 {
        op.volume.iter().zip(&self.values).map(|(a, b)| a * b).sum()
    }
}

/// `w = A(1 − r²/R²)²`.
pub fn bump_state(grid: &RadialGrid, m: f64, amplitude: f64) -> RadialState {
    let values = grid
        .nodes
        .iter()
        .map(|r| {
            let s = 1.0 - (r / grid.radius).powi(2);
            amplitude * s.max(0.0).powi(2)
        })
        .collect();
    RadialState {
        t: 0.0,
        values,
        form: Form::WForm,
        m,
    }
}

/// Sample the ansatz `z(·, t₀)` along a ray (u-form at `t = t₀`), or its
/// image under the transformation with extinction time `T` (w-form at `τ = 0`).
///
/// Only a single bubble at the center of a ball matching the grid is radial.
/// The μ-dependent regular part is always used, so the boundary value is 0.
pub fn init_from_ansatz(
    ansatz: &Ansatz,
    t0: f64,
    grid: &RadialGrid,
    form: Form,
    extinction_time: f64,
) -> Result<RadialState> {
    let cfg = &ansatz.cfg;
    if cfg.k() != 1 {
        return Err(Error::AnsatzNotRadial(format!("{} bubbles", cfg.k())));
    }
    if cfg.q[0].iter().any(|v| *v != 0.0) {
        return Err(Error::AnsatzNotRadial("blow-up point is not the center".into()));
    }
    match cfg.domain.shape {
        DomainKind::UnitBall { radius } if (radius - grid.radius).abs() <= 1e-12 * grid.radius => {}
        _ => return Err(Error::AnsatzNotRadial("domain is not the grid's ball".into())),
    }
    if cfg.n != grid.n {
        return Err(Error::DimensionMismatch {
            expected: grid.n,
            got: cfg.n,
        });
    }
    let corrected;
    let a = if cfg.use_mu_corrected_h {
        ansatz
    } else {
        let mut c = cfg.clone();
        c.use_mu_corrected_h = true;
        corrected = Ansatz::with_profile(c, ansatz.law, ansatz.profile_arc())?;
        &corrected
    };
    let n = grid.n;
    let mut values = Vec::with_capacity(grid.len());
    for (i, &r) in grid.nodes.iter().enumerate() {
        if i + 1 == grid.len() {
            values.push(0.0);
            continue;
        }
        let mut x = vec![0.0; n];
        x[0] = r;
        let z = a.z(&x, t0)?;
        if !(z > 0.0) {
            return Err(Error::NegativeIterate(i));
        }
        values.push(z);
    }
    let m = critical_m(n);
    let u = RadialState {
        t: t0,
        values,
        form: Form::UForm,
        m,
    };
    match form {
        Form::UForm => Ok(u),
        Form::WForm => Transformation::new(m, extinction_time)?.with_origin(t0).u_to_w(&u),
    }
}

/// One row of the extinction time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionSample {
    pub tau: f64,
    /// Yamabe-flow time of the transformed solution (NaN until `T` is known).
    pub t: f64,
    pub sup_w: f64,
    pub center_w: f64,
    /// `sup u` of the transformed solution (NaN until `T` is known).
    pub sup_u: f64,
    pub dt: f64,
    pub newton_iters: usize,
}

impl ExtinctionSample {
    fn from_state(s: &RadialState, dt: f64, newton_iters: usize) -> Self {
        Self {
            tau: s.t,
            t: f64::NAN,
            sup_w: s.sup(),
            center_w: s.center(),
            sup_u: f64::NAN,
            dt,
            newton_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionRecord {
    pub n: usize,
    pub m: f64,
    pub samples: Vec<ExtinctionSample>,
    pub t_est: Option<f64>,
    pub t_ci: Option<f64>,
    pub snapshots: Vec<RadialState>,
    pub final_state: RadialState,
}

pub const EXTINCTION_CSV_HEADER: [&str; 7] = ["tau", "t", "sup_w", "center_w", "sup_u", "dt", "newton_iters"];

impl ExtinctionRecord {
    /// Store `T` and fill the u-side columns through the transformation whose
    /// clock reads `t_origin` at `τ = 0`.
    pub fn set_extinction_time(&mut self, t: f64, ci: f64, t_origin: f64) -> Result<()> {
        let last = self.samples.last().map(|s| s.tau).unwrap_or(0.0);
        if !(t > last) {
            return Err(Error::TimeOutOfRange(t));
        }
        let tr = Transformation::new(self.m, t)?.with_origin(t_origin);
        for s in &mut self.samples {
            s.t = tr.tau_to_t(s.tau)?;
            s.sup_u = tr.u_value(s.sup_w, s.tau)?;
        }
        self.t_est = Some(t);
        self.t_ci = Some(ci);
        Ok(())
    }

    /// Center values `u(0, t)` of the transformed solution as `(t, u)` pairs.
    pub fn center_u(&self, t_origin: f64) -> Result<Vec<(f64, f64)>> {
        let big_t = self.t_est.ok_or(Error::InsufficientSamples { got: 0, required: 1 })?;
        let tr = Transformation::new(self.m, big_t)?.with_origin(t_origin);
        self.samples
            .iter()
            .map(|s| Ok((tr.tau_to_t(s.tau)?, tr.u_value(s.center_w, s.tau)?)))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(EXTINCTION_CSV_HEADER)?;
        for s in &self.samples {
            out.write_record([
                fmt17(s.tau),
                fmt17(s.t),
                fmt17(s.sup_w),
                fmt17(s.center_w),
                fmt17(s.sup_u),
                fmt17(s.dt),
                s.newton_iters.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Samples from a CSV written by [`ExtinctionRecord::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Vec<ExtinctionSample>> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if header != EXTINCTION_CSV_HEADER {
            return Err(Error::Config(format!("unexpected CSV header {header:?}")));
        }
        let mut out = Vec::new();
        for row in rd.deserialize::<ExtinctionSample>() {
            out.push(row?);
        }
        Ok(out)
    }
}

/// One accepted u-form step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YamabeSample {
    pub t: f64,
    pub center_u: f64,
    pub sup_u: f64,
    pub dt: f64,
    pub newton_iters: usize,
}

impl YamabeSample {
    fn from_state(s: &RadialState, dt: f64, newton_iters: usize) -> Self {
        Self {
            t: s.t,
            center_u: s.center(),
            sup_u: s.sup(),
            dt,
            newton_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YamabeTrajectory {
    pub n: usize,
    pub m: f64,
    pub samples: Vec<YamabeSample>,
    pub snapshots: Vec<RadialState>,
    pub final_state: RadialState,
}

impl YamabeTrajectory {
    pub fn center_u(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.center_u)).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "center_u", "sup_u", "dt", "newton_iters"])?;
        for s in &self.samples {
            out.write_record([
                fmt17(s.t),
                fmt17(s.center_u),
                fmt17(s.sup_u),
                fmt17(s.dt),
                s.newton_iters.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Floats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{alpha_n, DomainSpec};
    use crate::params::{DilationConvention, ScalingLaw};
    use crate::bubbles::AnsatzConfig;

    fn ansatz(t0: f64, q: Vec<f64>) -> Result<Ansatz> {
        let law = ScalingLaw::new(3, t0, DilationConvention::WithP)?;
        let cfg = AnsatzConfig::solved(DomainSpec::unit_ball(3), vec![q], 0.4, &law)?;
        Ansatz::new(cfg, law)
    }

    #[test]
    fn ansatz_initial_data() {
        let t0 = 200.0;
        let a = ansatz(t0, vec![0.0; 3]).unwrap();
        let g = RadialGrid::new(3, 1.0, 256, Stretching::Graded).unwrap();
        let u = init_from_ansatz(&a, t0, &g, Form::UForm, 1.0).unwrap();
        assert_eq!(*u.values.last().unwrap(), 0.0);
        assert!(u.values[..256].iter().all(|v| *v > 0.0));
        let mu = a.mu(t0).unwrap()[0];
        let lead = alpha_n(3) * mu.powf(-0.5);
        // corrections are O(μ^{n−2}) relative
        assert!((u.center() / lead - 1.0).abs() < 10.0 * mu, "{} {lead}", u.center());
        let w = init_from_ansatz(&a, t0, &g, Form::WForm, 1.0).unwrap();
        assert_eq!(w.t, 0.0);
        let back = Transformation::new(w.m, 1.0).unwrap().with_origin(t0).w_to_u(&w).unwrap();
        assert!((back.center() - u.center()).abs() < 1e-12 * u.center());
    }

    #[test]
    fn off_center_ansatz_is_not_radial() {
        let a = ansatz(100.0, vec![0.1, 0.0, 0.0]).unwrap();
        let g = RadialGrid::new(3, 1.0, 64, Stretching::Graded).unwrap();
        assert!(matches!(init_from_ansatz(&a, 100.0, &g, Form::UForm, 1.0), Err(Error::AnsatzNotRadial(_))));
    }

    #[test]
    fn csv_round_trip() {
        let g = RadialGrid::new(3, 1.0, 64, Stretching::Uniform).unwrap();
        let s = RadialSolver::new(g.clone(), SolverControl::default()).unwrap();
        let rec = s.simulate_to_extinction(&bump_state(&g, 0.5, 1.0)).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let back = ExtinctionRecord::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rec.samples);
        assert!(rec.t_est.unwrap() > rec.samples.last().unwrap().tau);
    }
}
