use serde::{Deserialize, Serialize};

use super::{Form, RadialState};
use crate::error::{Error, Result};

/// The change of variables between `w_τ = Δw^m` and `(u^p)_t = Δu + u^p`,
/// `p = 1/m`:
///
/// `u(x,t) = κ^{m/(1−m)} (T−τ)^{−m/(1−m)} w(x,τ)^m`, `τ = T(1 − e^{−(t−t_origin)/κ})`,
/// `κ = 1/(1−m)`.
///
/// The factor `κ^{m/(1−m)}` and the `1/κ` in the clock make the reaction term
/// exactly `u^p`; without them the map lands on `(u^p)_t = Δu + κu^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transformation {
    pub m: f64,
    pub extinction_time: f64,
    /// `t` at `τ = 0`.
    pub t_origin: f64,
}

impl Transformation {
    pub fn new(m: f64, extinction_time: f64) -> Result<Self> {
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::Config(format!("exponent m = {m} must lie in (0, 1)")));
        }
        if !(extinction_time > 0.0 && extinction_time.is_finite()) {
            return Err(Error::TimeOutOfRange(extinction_time));
        }
        Ok(Self {
            m,
            extinction_time,
            t_origin: 0.0,
        })
    }

    pub fn with_origin(mut self, t_origin: f64) -> Self {
        self.t_origin = t_origin;
        self
    }

    pub fn kappa(&self) -> f64 {
        1.0 / (1.0 - self.m)
    }

    /// `κ^{m/(1−m)} (T−τ)^{−m/(1−m)}`.
    pub fn amplitude(&self, tau: f64) -> Result<f64> {
        let e = self.m / (1.0 - self.m);
        let gap = self.gap(tau)?;
        Ok((self.kappa() / gap).powf(e))
    }

    fn gap(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0 && tau < self.extinction_time) {
            return Err(Error::TimeOutOfRange(tau));
        }
        Ok(self.extinction_time - tau)
    }

    pub fn tau_to_t(&self, tau: f64) -> Result<f64> {
        self.gap(tau)?;
        Ok(self.t_origin - self.kappa() * (-tau / self.extinction_time).ln_1p())
    }

    pub fn t_to_tau(&self, t: f64) -> Result<f64> {
        if !(t >= self.t_origin && t.is_finite()) {
            return Err(Error::TimeOutOfRange(t));
        }
        Ok(-self.extinction_time * (-(t - self.t_origin) / self.kappa()).exp_m1())
    }

    /// `u` from `w` at the same point.
    pub fn u_value(&self, w: f64, tau: f64) -> Result<f64> {
        Ok(self.amplitude(tau)? * w.powf(self.m))
    }

    /// `w` from `u` at the same point.
    pub fn w_value(&self, u: f64, t: f64) -> Result<f64> {
        let tau = self.t_to_tau(t)?;
        Ok((u / self.amplitude(tau)?).powf(1.0 / self.m))
    }

    pub fn w_to_u(&self, state: &RadialState) -> Result<RadialState> {
        if state.form != Form::WForm {
            return Err(Error::WrongForm("w_form"));
        }
        self.check_m(state.m)?;
        let a = self.amplitude(state.t)?;
        Ok(RadialState {
            t: self.tau_to_t(state.t)?,
            values: state.values.iter().map(|w| a * w.powf(self.m)).collect(),
            form: Form::UForm,
            m: state.m,
        })
    }

    pub fn u_to_w(&self, state: &RadialState) -> Result<RadialState> {
        if state.form != Form::UForm {
            return Err(Error::WrongForm("u_form"));
        }
        self.check_m(state.m)?;
        let tau = self.t_to_tau(state.t)?;
        let a = self.amplitude(tau)?;
        let inv = 1.0 / self.m;
        Ok(RadialState {
            t: tau,
            values: state.values.iter().map(|u| (u / a).powf(inv)).collect(),
            form: Form::WForm,
            m: state.m,
        })
    }

    fn check_m(&self, m: f64) -> Result<()> {
        if m != self.m {
            return Err(Error::Config(format!("state exponent {m} differs from the map's {}", self.m)));
        }
        Ok(())
    }
}

/// `transform_w_to_u` with `t = 0` at `τ = 0`.
pub fn transform_w_to_u(state: &RadialState, extinction_time: f64) -> Result<RadialState> {
    Transformation::new(state.m, extinction_time)?.w_to_u(state)
}

/// Inverse of [`transform_w_to_u`].
pub fn transform_u_to_w(state: &RadialState, extinction_time: f64) -> Result<RadialState> {
    Transformation::new(state.m, extinction_time)?.u_to_w(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = 0.2;
        let w = RadialState {
            t: 0.37,
            values: vec![3.0, 1.5, 0.25, 1e-6, 0.0],
            form: Form::WForm,
            m,
        };
        let u = transform_w_to_u(&w, 1.3).unwrap();
        let back = transform_u_to_w(&u, 1.3).unwrap();
        assert!((back.t - w.t).abs() <= 1e-15);
        for (a, b) in w.values.iter().zip(&back.values) {
            assert!((a - b).abs() <= 1e-14 * a.abs(), "{a} {b}");
        }
    }

    #[test]
    fn clock() {
        let tr = Transformation::new(0.5, 2.0).unwrap().with_origin(3.0);
        assert_eq!(tr.tau_to_t(0.0).unwrap(), 3.0);
        let t = tr.tau_to_t(1.5).unwrap();
        assert!((tr.t_to_tau(t).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(tr.tau_to_t(2.0), Err(Error::TimeOutOfRange(_))));
        assert!(matches!(tr.t_to_tau(2.0), Err(Error::TimeOutOfRange(_))));
    }

    #[test]
    fn separable_profile_is_time_independent() {
        // w = (T−τ)^κ S with S^m = g: u = κ^{m/(1−m)} g for every τ
        let (m, big_t) = (0.5, 1.7);
        let tr = Transformation::new(m, big_t).unwrap();
        let g = [1.0, 0.6, 0.2, 0.0];
        let mut prev: Option<Vec<f64>> = None;
        for tau in [0.0, 0.5, 1.2, 1.69] {
            let w = RadialState {
                t: tau,
                values: g.iter().map(|v: &f64| (big_t - tau).powf(tr.kappa()) * v.powf(1.0 / m)).collect(),
                form: Form::WForm,
                m,
            };
            let u = tr.w_to_u(&w).unwrap().values;
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(&u) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            prev = Some(u);
        }
    }
}
