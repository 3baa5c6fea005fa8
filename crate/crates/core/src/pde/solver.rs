use serde::{Deserialize, Serialize};

use super::grid::{solve_tridiagonal, RadialGrid, RadialOperator};
use super::{ExtinctionRecord, ExtinctionSample, Form, RadialState, YamabeSample, YamabeTrajectory};
use crate::error::{Error, Result};

/// Time-stepping controls shared by both forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverControl {
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Target bound on `max|Δv|/sup v` per step, `v` the stored field.
    pub max_rel_change: f64,
    /// Relative Newton residual, in units of the largest old value.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Newton iteration band: more than `iter_band.1` shrinks the step, fewer
    /// than `iter_band.0` lets it grow.
    pub iter_band: (usize, usize),
    pub growth: f64,
    /// Stop when `sup` falls below `floor_ratio × initial sup`.
    pub floor_ratio: f64,
    pub max_steps: usize,
    /// Geometric sup-norm recording levels per decade (w-form).
    pub levels_per_decade: usize,
    /// Snapshot times, in the state's own clock.
    pub output_times: Vec<f64>,
    /// Final time; required by the u-form, optional for the w-form.
    pub t_end: Option<f64>,
}

impl Default for SolverControl {
    fn default() -> Self {
        Self {
            dt_initial: 1e-6,
            dt_min: 1e-20,
            dt_max: 1e30,
            max_rel_change: 5e-3,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            iter_band: (3, 8),
            growth: 1.2,
            floor_ratio: 1e-8,
            max_steps: 1_000_000,
            levels_per_decade: 100,
            output_times: Vec::new(),
            t_end: None,
        }
    }
}

impl SolverControl {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::Config(s.to_string()));
        if !(self.dt_initial > 0.0 && self.dt_min > 0.0 && self.dt_max >= self.dt_min) {
            return bad("time steps must satisfy 0 < dt_min <= dt_max and dt_initial > 0");
        }
        if !(self.max_rel_change > 0.0 && self.max_rel_change < 1.0) {
            return bad("max_rel_change must lie in (0, 1)");
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return bad("newton_tol must be positive and newton_max_iter nonzero");
        }
        if self.iter_band.0 > self.iter_band.1 || !(self.growth > 1.0) {
            return bad("iter_band must be ordered and growth > 1");
        }
        if !(self.floor_ratio > 0.0 && self.floor_ratio < 1.0) || self.levels_per_decade == 0 {
            return bad("floor_ratio must lie in (0, 1) and levels_per_decade be nonzero");
        }
        Ok(())
    }
}

/// Implicit radial solver on a fixed grid.
#[derive(Debug, Clone)]
pub struct RadialSolver {
    pub grid: RadialGrid,
    pub ctrl: SolverControl,
    op: RadialOperator,
}

/// The backward-Euler system `(1 − dt·κ_r) V v^q − dt L v = V v_old^q`.
struct Implicit<'a> {
    op: &'a RadialOperator,
    q: f64,
    a: f64,
    dt: f64,
}

impl RadialSolver {
    pub fn new(grid: RadialGrid, ctrl: SolverControl) -> Result<Self> {
        ctrl.validate()?;
        let op = grid.operator();
        Ok(Self { grid, ctrl, op })
    }

    pub fn operator(&self) -> &RadialOperator {
        &self.op
    }

    fn check_state(&self, state: &RadialState, form: Form) -> Result<()> {
        if state.form != form {
            return Err(Error::WrongForm(match form {
                Form::WForm => "w_form",
                Form::UForm => "u_form",
            }));
        }
        if state.values.len() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                got: state.values.len(),
            });
        }
        if let Some(i) = state.values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::NegativeIterate(i));
        }
        Ok(())
    }

    /// One backward-Euler step of `w_τ = Δw^m`, solved for `v = w^m`.
    /// Returns the new state and the Newton iteration count.
    pub fn step_fast_diffusion(&self, state: &RadialState, dt: f64) -> Result<(RadialState, usize)> {
        self.check_state(state, Form::WForm)?;
        let m = state.m;
        let v_old: Vec<f64> = state.values[..self.op.unknowns()].iter().map(|w| w.powf(m)).collect();
        let sys = Implicit {
            op: &self.op,
            q: 1.0 / m,
            a: 1.0,
            dt,
        };
        let (v, it) = self.newton(&sys, &v_old, state.t)?;
        let mut values: Vec<f64> = v.iter().map(|v| v.powf(1.0 / m)).collect();
        values.push(0.0);
        Ok((
            RadialState {
                t: state.t + dt,
                values,
                form: Form::WForm,
                m,
            },
            it,
        ))
    }

    /// One backward-Euler step of `(u^p)_t = Δu + u^p`, `p = 1/m`; needs `dt < 1`.
    pub fn step_yamabe(&self, state: &RadialState, dt: f64) -> Result<(RadialState, usize)> {
        self.check_state(state, Form::UForm)?;
        if !(dt > 0.0 && dt < 1.0) {
            return Err(Error::NewtonStalled {
                t: state.t,
                dt,
                residual: f64::INFINITY,
            });
        }
        let sys = Implicit {
            op: &self.op,
            q: 1.0 / state.m,
            a: 1.0 - dt,
            dt,
        };
        let u_old = &state.values[..self.op.unknowns()];
        let (u, it) = self.newton(&sys, u_old, state.t)?;
        let mut values = u;
        values.push(0.0);
        Ok((
            RadialState {
                t: state.t + dt,
                values,
                form: Form::UForm,
                m: state.m,
            },
            it,
        ))
    }

    /// Damped Newton from `v_old`; the step is halved until every iterate
    /// stays positive.
    fn newton(&self, sys: &Implicit, v_old: &[f64], t: f64) -> Result<(Vec<f64>, usize)> {
        let nn = v_old.len();
        let rhs: Vec<f64> = v_old.iter().map(|v| v.powf(sys.q)).collect();
        let scale = rhs.iter().cloned().fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok((vec![0.0; nn], 0));
        }
        let op = sys.op;
        let mut v = v_old.to_vec();
        let mut residual = f64::INFINITY;
        for it in 1..=self.ctrl.newton_max_iter {
            let lv = op.apply(&v);
            let f: Vec<f64> = (0..nn)
                .map(|i| op.volume[i] * (sys.a * v[i].powf(sys.q) - rhs[i]) - sys.dt * lv[i])
                .collect();
            residual = (0..nn).map(|i| (f[i] / op.volume[i]).abs()).fold(0.0, f64::max) / scale;
            if residual <= self.ctrl.newton_tol {
                return Ok((v, it - 1));
            }
            let d: Vec<f64> = (0..nn)
                .map(|i| {
                    let mut c = op.conductance[i];
                    if i > 0 {
                        c += op.conductance[i - 1];
                    }
                    op.volume[i] * sys.a * sys.q * v[i].powf(sys.q - 1.0) + sys.dt * c
                })
                .collect();
            let e: Vec<f64> = (0..nn - 1).map(|i| -sys.dt * op.conductance[i]).collect();
            let neg_f: Vec<f64> = f.iter().map(|x| -x).collect();
            let delta = solve_tridiagonal(&d, &e, &neg_f);
            let mut lambda = 1.0;
            let mut tries = 0;
            loop {
                if let Some(i) = (0..nn).find(|&i| !(v[i] + lambda * delta[i] > 0.0)) {
                    tries += 1;
                    if tries > 60 {
                        return Err(Error::NegativeIterate(i));
                    }
                    lambda *= 0.5;
                } else {
                    break;
                }
            }
            let vmax = v.iter().cloned().fold(0.0, f64::max);
            let dmax = delta.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for i in 0..nn {
                v[i] += lambda * delta[i];
            }
            if lambda == 1.0 && dmax <= 1e-14 * vmax {
                return Ok((v, it));
            }
        }
        Err(Error::NewtonStalled {
            t,
            dt: sys.dt,
            residual,
        })
    }

    /// Adaptive stepping driver. `stop` sees each accepted state; `on_step`
    /// records it.
    fn drive<S, R>(
        &self,
        init: &RadialState,
        step: S,
        dt_cap: f64,
        mut on_step: R,
        mut stop: impl FnMut(&RadialState) -> bool,
    ) -> Result<(RadialState, Vec<RadialState>)>
    where
        S: Fn(&RadialState, f64) -> Result<(RadialState, usize)>,
        R: FnMut(&RadialState, f64, usize),
    {
        let ctrl = &self.ctrl;
        let mut outputs: Vec<f64> = ctrl.output_times.iter().cloned().filter(|t| *t > init.t).collect();
        outputs.sort_by(|a, b| a.total_cmp(b));
        let mut next_out = 0;
        let mut snapshots = Vec::new();
        let mut state = init.clone();
        let mut dt = ctrl.dt_initial.min(ctrl.dt_max).min(dt_cap);
        let mut steps = 0;
        while !stop(&state) {
            if steps >= ctrl.max_steps {
                return Err(Error::MaxStepsExceeded(ctrl.max_steps));
            }
            let mut h = dt;
            let mut clipped = false;
            if let Some(&t_out) = outputs.get(next_out) {
                if state.t + h >= t_out {
                    h = t_out - state.t;
                    clipped = true;
                }
            }
            let (new, iters) = match step(&state, h) {
                Ok(x) => x,
                Err(e @ (Error::NewtonStalled { .. } | Error::NegativeIterate(_))) => {
                    dt = 0.5 * h;
                    if dt < ctrl.dt_min {
                        return Err(e);
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let sup_old = state.sup();
            let change = state
                .values
                .iter()
                .zip(&new.values)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
                / sup_old;
            if change > 2.0 * ctrl.max_rel_change {
                dt = 0.5 * h;
                if dt < ctrl.dt_min {
                    return Err(Error::NewtonStalled {
                        t: state.t,
                        dt,
                        residual: change,
                    });
                }
                continue;
            }
            steps += 1;
            let mut factor = (0.9 * ctrl.max_rel_change / change.max(1e-300)).clamp(0.5, ctrl.growth);
            if iters > ctrl.iter_band.1 {
                factor = factor.min(0.5);
            } else if iters < ctrl.iter_band.0 {
                factor = factor.max(1.0);
            }
            let base = if clipped { dt.max(h) } else { h };
            dt = (base * factor).min(ctrl.dt_max).min(dt_cap).max(ctrl.dt_min);
            state = new;
            on_step(&state, h, iters);
            if clipped {
                snapshots.push(state.clone());
                next_out += 1;
            }
        }
        Ok((state, snapshots))
    }

    /// Evolve the w-form to extinction: stops when `sup w` drops below
    /// `floor_ratio` of its initial value (or at `t_end`).
    pub fn simulate_to_extinction(&self, init: &RadialState) -> Result<ExtinctionRecord> {
        self.check_state(init, Form::WForm)?;
        let sup0 = init.sup();
        if !(sup0 > 0.0) {
            return Err(Error::Config("initial data vanish identically".into()));
        }
        let ratio = 10f64.powf(-1.0 / self.ctrl.levels_per_decade as f64);
        let mut next_level = sup0 * ratio;
        let mut samples = vec![ExtinctionSample::from_state(init, 0.0, 0)];
        let floor = self.ctrl.floor_ratio * sup0;
        let t_end = self.ctrl.t_end.unwrap_or(f64::INFINITY);
        let (last, snapshots) = self.drive(
            init,
            |s, h| self.step_fast_diffusion(s, h),
            f64::INFINITY,
            |s, h, it| {
                let sup = s.sup();
                if sup <= next_level || sup < floor {
                    samples.push(ExtinctionSample::from_state(s, h, it));
                    while next_level >= sup {
                        next_level *= ratio;
                    }
                }
            },
            |s| s.sup() < floor || s.t >= t_end,
        )?;
        if samples.last().map(|x| x.tau) != Some(last.t) {
            samples.push(ExtinctionSample::from_state(&last, 0.0, 0));
        }
        let mut record = ExtinctionRecord {
            n: self.grid.n,
            m: init.m,
            samples,
            t_est: None,
            t_ci: None,
            snapshots,
            final_state: last,
        };
        if let Ok((t, ci)) = crate::asymptotics::estimate_t(&record) {
            record.set_extinction_time(t, ci, 0.0)?;
        }
        Ok(record)
    }

    /// Evolve the u-form up to `ctrl.t_end`, recording every accepted step.
    pub fn simulate_yamabe(&self, init: &RadialState) -> Result<YamabeTrajectory> {
        self.check_state(init, Form::UForm)?;
        let t_end = self
            .ctrl
            .t_end
            .ok_or_else(|| Error::Config("simulate_yamabe needs solver.t_end".into()))?;
        let sup0 = init.sup();
        let floor = self.ctrl.floor_ratio * sup0;
        let mut samples = vec![YamabeSample::from_state(init, 0.0, 0)];
        let mut ctrl_outputs = self.ctrl.output_times.clone();
        ctrl_outputs.push(t_end);
        let solver = RadialSolver {
            grid: self.grid.clone(),
            ctrl: SolverControl {
                output_times: ctrl_outputs,
                ..self.ctrl.clone()
            },
            op: self.op.clone(),
        };
        let (last, mut snapshots) = solver.drive(
            init,
            |s, h| self.step_yamabe(s, h),
            0.5,
            |s, h, it| samples.push(YamabeSample::from_state(s, h, it)),
            |s| s.t >= t_end || s.sup() < floor,
        )?;
        // the t_end snapshot is the final state, not a requested output
        if snapshots.last().map(|s| s.t) == Some(last.t) && !self.ctrl.output_times.contains(&last.t) {
            snapshots.pop();
        }
        Ok(YamabeTrajectory {
            n: self.grid.n,
            m: init.m,
            samples,
            snapshots,
            final_state: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{bump_state, discrete_steady_state, LaneEmdenProfile, Stretching};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn solver(m_int: usize) -> RadialSolver {
        let g = RadialGrid::new(3, 1.0, m_int, Stretching::Uniform).unwrap();
        RadialSolver::new(g, SolverControl::default()).unwrap()
    }

    /// Discrete separable profile `S` with `V^{-1}L S^m = −κ S`.
    fn separable(s: &RadialSolver, m: f64) -> Vec<f64> {
        let p = 1.0 / m;
        let kappa = 1.0 / (1.0 - m);
        let le = LaneEmdenProfile::solve(3, p, 1.0).unwrap();
        let u = discrete_steady_state(&s.grid, p, &le.sample(&s.grid)).unwrap();
        let c = kappa.powf(-m / (1.0 - m));
        u.iter().map(|v| (c * v).powf(1.0 / m)).collect()
    }

    #[test]
    fn separable_data_decay_by_the_exact_factor_to_second_order() {
        let (m, big_t) = (0.5, 1.0f64);
        let s = solver(64);
        let shape = separable(&s, m);
        let kappa = 1.0 / (1.0 - m);
        let w0 = RadialState {
            t: 0.0,
            values: shape.iter().map(|v| big_t.powf(kappa) * v).collect(),
            form: Form::WForm,
            m,
        };
        let mut errs = Vec::new();
        for dt in [1e-2, 5e-3] {
            let (w1, _) = s.step_fast_diffusion(&w0, dt).unwrap();
            let ratios: Vec<f64> = w1.values.iter().zip(&w0.values).take(60).map(|(a, b)| a / b).collect();
            let spread = ratios.iter().fold(0.0f64, |a, r| a.max((r - ratios[0]).abs()));
            assert!(spread < 1e-9, "shape not preserved: {spread}");
            errs.push((ratios[0] - (1.0 - dt / big_t).powf(kappa)).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.1, "{errs:?}");
    }

    #[test]
    fn zero_data_stay_zero() {
        let s = solver(32);
        let z = RadialState {
            t: 0.0,
            values: vec![0.0; 33],
            form: Form::WForm,
            m: 0.5,
        };
        let (w, it) = s.step_fast_diffusion(&z, 0.1).unwrap();
        assert!(w.values.iter().all(|v| *v == 0.0) && it == 0);
    }

    #[test]
    fn ordered_data_stay_ordered() {
        let s = solver(48);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = rng.random_range(0.2..0.9);
            let base = bump_state(&s.grid, m, rng.random_range(0.5..2.0));
            let mut a = base.clone();
            let mut b = base.clone();
            for i in 0..s.grid.intervals() {
                a.values[i] *= 1.0 + 0.3 * rng.random::<f64>();
                b.values[i] = a.values[i] * (1.0 + 0.2 * rng.random::<f64>());
            }
            for _ in 0..100 {
                a = s.step_fast_diffusion(&a, 2e-3).unwrap().0;
                b = s.step_fast_diffusion(&b, 2e-3).unwrap().0;
                for (x, y) in a.values.iter().zip(&b.values) {
                    assert!(*x <= y * (1.0 + 1e-12), "{x} > {y}");
                }
            }
        }
    }

    #[test]
    fn mass_decreases() {
        let s = solver(64);
        let mut w = bump_state(&s.grid, 0.5, 1.0);
        let mut mass = w.mass(s.operator());
        for _ in 0..50 {
            w = s.step_fast_diffusion(&w, 1e-3).unwrap().0;
            let next = w.mass(s.operator());
            assert!(next < mass);
            mass = next;
        }
    }

    #[test]
    fn steady_yamabe_state_is_a_fixed_point() {
        let s = solver(64);
        let p = 3.0;
        let le = LaneEmdenProfile::solve(3, p, 1.0).unwrap();
        let u = discrete_steady_state(&s.grid, p, &le.sample(&s.grid)).unwrap();
        let state = RadialState {
            t: 0.0,
            values: u.clone(),
            form: Form::UForm,
            m: 1.0 / p,
        };
        let (next, _) = s.step_yamabe(&state, 0.1).unwrap();
        for (a, b) in next.values.iter().zip(&u) {
            assert!((a - b).abs() < 1e-10 * le.eval(0.0));
        }
    }

    #[test]
    fn wrong_form_is_rejected() {
        let s = solver(16);
        let w = bump_state(&s.grid, 0.5, 1.0);
        assert!(matches!(s.step_yamabe(&w, 0.1), Err(Error::WrongForm(_))));
        let mut bad = w.clone();
        bad.values[3] = -1.0;
        assert!(matches!(s.step_fast_diffusion(&bad, 0.1), Err(Error::NegativeIterate(3))));
    }
}
