//! Subcommand bodies for the `fdlab` binary. Each one reads a resolved
//! [`RunConfig`], writes its artifacts into the output directory and returns
//! a JSON summary (also written as `summary.json`).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{
    estimate_t_samples, extract_mu, extract_mu_tilde, fit_rate, theoretical_rates, FitSummary, RateModel,
};
use crate::bubbles::{Ansatz, AnsatzConfig, ProjectionOptions};
use crate::checks::{run_invariant_suite, CheckOutcome};
use crate::config::{InitialData, RunConfig};
use crate::error::{Error, Result};
use crate::greens::{pd_report, robin_matrix, DomainKind};
use crate::params::{solve_b, BSystem, ScalingLaw};
use crate::pde::{
    bump_state, fmt17, init_from_ansatz, ExtinctionRecord, Form, RadialGrid, RadialSolver, RadialState,
    Transformation,
};

/// Fraction of the cutoff-admissible radius `ε/(2μ_j)` used for projections.
pub const PROJECTION_RADIUS_FRACTION: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub verbose: bool,
}

impl Context {
    pub fn new(out: impl Into<PathBuf>, verbose: bool) -> Result<Self> {
        let out = out.into();
        fs::create_dir_all(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
        Ok(Self { out, verbose })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        let f = File::create(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        Ok(BufWriter::new(f))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        let p = self.path(name);
        fs::write(&p, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", p.display())))
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("fdlab: {}", msg.as_ref());
        }
    }
}

/// Write `resolved_config.json` so every run can be reproduced from its output.
pub fn write_resolved_config(cfg: &RunConfig, ctx: &Context) -> Result<()> {
    let p = ctx.path("resolved_config.json");
    fs::write(&p, cfg.to_json() + "\n").map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn finish(ctx: &Context, summary: Value) -> Result<Value> {
    ctx.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn law(cfg: &RunConfig) -> Result<ScalingLaw> {
    ScalingLaw::new(cfg.n, cfg.ansatz.t0, cfg.convention)
}

/// The ansatz described by the config, with `b` solved unless overridden.
pub fn build_ansatz(cfg: &RunConfig) -> Result<Ansatz> {
    let law = law(cfg)?;
    let mut ac = AnsatzConfig::solved(cfg.domain().clone(), cfg.ansatz.points.clone(), cfg.ansatz.eps, &law)?;
    if let Some(b) = &cfg.ansatz.b {
        if b.len() != ac.k() {
            return Err(Error::DimensionMismatch {
                expected: ac.k(),
                got: b.len(),
            });
        }
        ac.b = b.clone();
    }
    ac.use_mu_corrected_h = cfg.ansatz.use_mu_corrected_h;
    ac.validate()?;
    Ansatz::new(ac, law)
}

/// `fdlab greens`: the interaction matrix and its definiteness.
pub fn greens(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let m = robin_matrix(cfg.domain(), &cfg.ansatz.points)?;
    let report = pd_report(&m)?;
    let summary = json!({
        "points": m.points,
        "matrix": m.entries,
        "eigenvalues": m.eigenvalues()?,
        "positive_definite": report.positive_definite,
        "borderline": report.borderline,
    });
    finish(ctx, summary)
}

/// `fdlab solve-b`: minimize the reduced functional for the dilation weights.
pub fn solve_b_cmd(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let sys = BSystem::new(cfg.n, robin_matrix(cfg.domain(), &cfg.ansatz.points)?)?;
    let b = solve_b(&sys)?;
    let law = law(cfg)?;
    let summary = json!({
        "b": b,
        "lambda": sys.to_lambda(&b),
        "functional": sys.functional_i(&b)?,
        "gradient": sys.grad_i(&b)?,
        "system_residual": sys.system_residual(&b)?,
        "hessian_eigenvalues": sys.hessian_eigenvalues(&b),
        "c1": law.c1,
        "c2": law.c2,
        "gamma_n": law.gamma_n,
        "convention": law.convention,
    });
    finish(ctx, summary)
}

/// `fdlab ansatz`: kernel projections of the error and line samples of `z`.
pub fn ansatz(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let a = build_ansatz(cfg)?;
    let n = cfg.n;
    let k = a.cfg.k();
    let opts = ProjectionOptions::default();
    let mut proj = csv::Writer::from_writer(ctx.create("ansatz_projections.csv")?);
    proj.write_record(["t", "j", "l", "mu", "radius", "projection", "static_prediction"])?;
    for &t in &cfg.ansatz.times {
        let mu = a.mu(t)?;
        for j in 1..=k {
            let radius = PROJECTION_RADIUS_FRACTION * a.cfg.eps_cutoff / (2.0 * mu[j - 1]);
            ctx.note(format!("projecting bubble {j} at t = {t} over |y| <= {radius:.3}"));
            let rows = (1..=n + 1)
                .into_par_iter()
                .map(|l| a.project_residual(l, j, t, radius, &opts))
                .collect::<Result<Vec<f64>>>()?;
            let pred = a.static_projection_prediction(j - 1, t)?;
            for (l, v) in (1..=n + 1).zip(rows) {
                proj.write_record([
                    fmt17(t),
                    j.to_string(),
                    l.to_string(),
                    fmt17(mu[j - 1]),
                    fmt17(radius),
                    fmt17(v),
                    if l == n + 1 { fmt17(pred) } else { String::new() },
                ])?;
            }
        }
    }
    proj.flush()?;

    let mut samples = csv::Writer::from_writer(ctx.create("ansatz_samples.csv")?);
    let mut header = vec!["t".to_string(), "j".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("z".into());
    samples.write_record(&header)?;
    let count = cfg.ansatz.line_samples.max(2);
    for &t in &cfg.ansatz.times {
        for j in 0..k {
            for i in 0..count {
                let s = a.cfg.eps_cutoff * (2.0 * i as f64 / (count - 1) as f64 - 1.0);
                let mut x = a.cfg.q[j].clone();
                x[0] += s;
                if !a.cfg.domain.contains(&x) {
                    continue;
                }
                let mut row = vec![fmt17(t), (j + 1).to_string()];
                row.extend(x.iter().map(|v| fmt17(*v)));
                row.push(fmt17(a.z(&x, t)?));
                samples.write_record(&row)?;
            }
        }
    }
    samples.flush()?;
    finish(
        ctx,
        json!({
            "b": a.cfg.b,
            "gamma_tilde": a.cfg.gamma_tilde,
            "times": cfg.ansatz.times,
            "projections": "ansatz_projections.csv",
            "samples": "ansatz_samples.csv",
        }),
    )
}

fn grid_for(cfg: &RunConfig) -> Result<RadialGrid> {
    let radius = match cfg.domain().shape {
        DomainKind::UnitBall { radius } => radius,
        DomainKind::Box { .. } => return Err(Error::Unsupported("radial simulation needs a ball domain".into())),
    };
    RadialGrid::new(cfg.n, radius, cfg.grid.intervals, cfg.grid.stretching)
}

/// Initial state in the requested form, plus the Yamabe time at `τ = 0`.
fn initial_state(cfg: &RunConfig, grid: &RadialGrid, m: f64, form: Form) -> Result<(RadialState, f64)> {
    let guess = cfg.simulation.extinction_time_guess;
    match &cfg.simulation.initial {
        InitialData::Ansatz => {
            let a = build_ansatz(cfg)?;
            let t0 = cfg.ansatz.t0;
            Ok((init_from_ansatz(&a, t0, grid, form, guess)?, t0))
        }
        InitialData::Bump { amplitude } => {
            let w = bump_state(grid, m, *amplitude);
            match form {
                Form::WForm => Ok((w, 0.0)),
                Form::UForm => Ok((Transformation::new(m, guess)?.w_to_u(&w)?, 0.0)),
            }
        }
        InitialData::File { path } => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let s: RadialState = serde_json::from_str(&text)?;
            if s.values.len() != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    got: s.values.len(),
                });
            }
            let tr = Transformation::new(s.m, guess)?;
            let s = match (s.form, form) {
                (a, b) if a == b => s,
                (Form::UForm, Form::WForm) => tr.u_to_w(&s)?,
                _ => tr.w_to_u(&s)?,
            };
            Ok((s, 0.0))
        }
    }
}

fn run_extinction(cfg: &RunConfig, grid: &RadialGrid, m: f64, ctx: &Context, name: &str) -> Result<Value> {
    let (init, t_origin) = initial_state(cfg, grid, m, Form::WForm)?;
    if (init.m - m).abs() > 1e-15 {
        return Err(Error::Config(format!("initial data have m = {}, run needs m = {m}", init.m)));
    }
    ctx.note(format!("{name}: w-form, m = {m}, {} intervals", grid.intervals()));
    let solver = RadialSolver::new(grid.clone(), cfg.solver.clone())?;
    let mut rec = solver.simulate_to_extinction(&init)?;
    if let (Some(t), Some(ci)) = (rec.t_est, rec.t_ci) {
        rec.set_extinction_time(t, ci, t_origin)?;
    }
    rec.write_csv(ctx.create(name)?)?;
    let last = rec.samples.last().expect("record has samples");
    Ok(json!({
        "m": m,
        "csv": name,
        "samples": rec.samples.len(),
        "final_tau": last.tau,
        "final_sup_w": last.sup_w,
        "t_est": rec.t_est,
        "t_ci": rec.t_ci,
        "t_origin": t_origin,
    }))
}

/// `fdlab simulate`: a w-form extinction run (plus any sweep exponents, run
/// concurrently) or a u-form Yamabe run up to `solver.t_end`.
pub fn simulate(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let grid = grid_for(cfg)?;
    let m = cfg.m();
    match cfg.simulation.form {
        Form::WForm => {
            let main = run_extinction(cfg, &grid, m, ctx, "simulation.csv")?;
            if !cfg.simulation.sweep_m.is_empty() && matches!(cfg.simulation.initial, InitialData::Ansatz) {
                return Err(Error::Config("an m sweep needs bump or file initial data".into()));
            }
            let sweep = cfg
                .simulation
                .sweep_m
                .par_iter()
                .map(|&ms| run_extinction(cfg, &grid, ms, ctx, &format!("simulation_m{ms}.csv")))
                .collect::<Result<Vec<Value>>>()?;
            finish(ctx, json!({ "form": "w_form", "run": main, "sweep": sweep }))
        }
        Form::UForm => {
            let (init, _) = initial_state(cfg, &grid, m, Form::UForm)?;
            ctx.note(format!("u-form to t = {:?}", cfg.solver.t_end));
            let solver = RadialSolver::new(grid, cfg.solver.clone())?;
            let traj = solver.simulate_yamabe(&init)?;
            traj.write_csv(ctx.create("yamabe.csv")?)?;
            let last = traj.samples.last().expect("trajectory has samples");
            finish(
                ctx,
                json!({
                    "form": "u_form",
                    "csv": "yamabe.csv",
                    "samples": traj.samples.len(),
                    "final_t": last.t,
                    "final_center_u": last.center_u,
                }),
            )
        }
    }
}

/// `fdlab fit`: extinction time, rate fits and the dilation track from a
/// simulation CSV.
pub fn fit(cfg: &RunConfig, ctx: &Context) -> Result<Value> {
    let path = cfg
        .fit
        .csv
        .as_ref()
        .ok_or_else(|| Error::Config("fit.csv is required for `fit`".into()))?;
    let file = File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let samples = ExtinctionRecord::read_csv(file)?;
    let (n, m) = (cfg.n, cfg.m());
    let (t_est, t_ci) = estimate_t_samples(&samples, m)?;
    ctx.note(format!("T = {t_est} ± {t_ci}"));
    let main = fit_rate(&samples, t_est, cfg.fit.model, cfg.fit.window)?;
    let pure = match cfg.fit.model {
        RateModel::PurePower => None,
        RateModel::LogCorrected => Some(fit_rate(&samples, t_est, RateModel::PurePower, cfg.fit.window)?),
    };
    let critical = (m - crate::bubbles::critical_m(n)).abs() < 1e-12;
    let mu_tilde = if critical {
        extract_mu_tilde(&samples, t_est, n, m, cfg.fit.window).ok()
    } else {
        None
    };
    let t_origin = cfg.fit.t_origin.unwrap_or(match cfg.simulation.initial {
        InitialData::Ansatz => cfg.ansatz.t0,
        _ => 0.0,
    });
    let mu_track = if critical {
        let tr = Transformation::new(m, t_est)?.with_origin(t_origin);
        let center = samples
            .iter()
            .filter(|s| {
                let g = (t_est - s.tau) / t_est;
                g >= cfg.fit.window.0 && g <= cfg.fit.window.1
            })
            .map(|s| Ok((tr.tau_to_t(s.tau)?, tr.u_value(s.center_w, s.tau)?)))
            .collect::<Result<Vec<_>>>()?;
        extract_mu(&center, n).ok()
    } else {
        None
    };

    let summary = FitSummary {
        t_est,
        t_ci,
        power: main.power,
        log_power: main.log_power,
        rms: main.rms_residual,
        rms_pure_power: pure.as_ref().map(|f| f.rms_residual),
        window: main.window,
        beta: mu_tilde.as_ref().map(|t| t.beta),
        mu_tilde_correlation: mu_tilde.as_ref().map(|t| t.correlation),
    };
    ctx.write_json("fit.json", &summary)?;

    let mut plot = csv::Writer::from_writer(ctx.create("fit_plot.csv")?);
    plot.write_record(["log_gap", "log_sup_w", "model"])?;
    for s in &samples {
        let gap = t_est - s.tau;
        if gap <= 0.0 || s.sup_w <= 0.0 {
            continue;
        }
        plot.write_record([fmt17(gap.ln()), fmt17(s.sup_w.ln()), fmt17(main.predict_log(gap, t_est))])?;
    }
    plot.flush()?;

    let theory = theoretical_rates(n, m).ok();
    finish(
        ctx,
        json!({
            "fit": summary,
            "theoretical_rates": theory,
            "pure_power_power": pure.map(|f| f.power),
            "mu_tilde_rms": mu_tilde.as_ref().map(|t| t.rms),
            "mu_tilde_poor": mu_tilde.as_ref().map(|t| t.poor),
            "mu_slope": mu_track.as_ref().map(|t| t.slope),
            "mu_beta": mu_track.as_ref().map(|t| t.beta),
            "t_origin": t_origin,
        }),
    )
}

/// `fdlab check`: the invariant suite. Returns the outcomes; the caller maps a
/// failure to its exit code.
pub fn check(cfg: &RunConfig, ctx: &Context) -> Result<Vec<CheckOutcome>> {
    let out = run_invariant_suite(cfg.seed)?;
    ctx.write_json("check.json", &out)?;
    Ok(out)
}

/// Load the config file, or the defaults for `n = 3` when none is given.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => RunConfig::from_json(r#"{"n": 3}"#),
    }
}
