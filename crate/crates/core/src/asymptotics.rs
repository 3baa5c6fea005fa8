//! Extinction-time estimation, rate fits and bubble-scale extraction from
//! simulated series.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bubbles::critical_m;
use crate::error::{Error, Result};
use crate::greens::alpha_n;
use crate::pde::{ExtinctionRecord, ExtinctionSample, Transformation};

/// Minimum samples in the last decade for `estimate_t`.
pub const MIN_FINAL_DECADE_SAMPLES: usize = 10;
/// Minimum samples inside a fit window.
pub const MIN_FIT_SAMPLES: usize = 20;
/// Default fit window in `(T−τ)/T`.
pub const DEFAULT_WINDOW: (f64, f64) = (1e-4, 1e-1);
/// Relative rms above which the `μ̃` fit is flagged as poor.
pub const MU_TILDE_RMS_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    PurePower,
    #[default]
    LogCorrected,
}

/// `log sup w = log A + a log(T−τ) + b log|ln((T−τ)/T)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    pub amplitude: f64,
    pub power: f64,
    pub log_power: f64,
    pub rms_residual: f64,
    /// `(T−τ)/T` bounds.
    pub window: (f64, f64),
    pub samples: usize,
}

impl RateFit {
    /// Model value of `log sup w` at `gap = T − τ`.
    pub fn predict_log(&self, gap: f64, extinction_time: f64) -> f64 {
        let s = gap / extinction_time;
        self.amplitude.ln() + self.power * gap.ln() + self.log_power * (-s.ln()).ln()
    }
}

/// `(power, log_power)` of `sup w` near extinction.
pub fn theoretical_rates(n: usize, m: f64) -> Result<(f64, f64)> {
    let nf = n as f64;
    let ms = critical_m(n);
    if (m - ms).abs() <= 1e-12 {
        return Ok(((nf + 2.0) / 4.0, (nf + 2.0) / (2.0 * (nf - 2.0))));
    }
    if m < ms {
        return Err(Error::SubcriticalUnsupported(m));
    }
    if m > 1.0 {
        return Err(Error::Config(format!("exponent m = {m} exceeds 1")));
    }
    Ok((1.0 / (1.0 - m), 0.0))
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let nn = x.len() as f64;
    let mx = x.iter().sum::<f64>() / nn;
    let my = y.iter().sum::<f64>() / nn;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Root of the linear fit of `sup w^{1−m}` against `τ` over the samples whose
/// sup lies within `decades` of the last one.
fn root_over(samples: &[ExtinctionSample], m: f64, decades: f64) -> Result<f64> {
    let last = samples.last().ok_or(Error::InsufficientSamples { got: 0, required: MIN_FINAL_DECADE_SAMPLES })?;
    let top = last.sup_w * 10f64.powf(decades);
    let pts: Vec<&ExtinctionSample> = samples.iter().filter(|s| s.sup_w > 0.0 && s.sup_w <= top).collect();
    if pts.len() < MIN_FINAL_DECADE_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: pts.len(),
            required: MIN_FINAL_DECADE_SAMPLES,
        });
    }
    // centered in τ so a shift of the series shifts the root exactly
    let t0 = pts[0].tau;
    let x: Vec<f64> = pts.iter().map(|s| s.tau - t0).collect();
    let y: Vec<f64> = pts.iter().map(|s| s.sup_w.powf(1.0 - m)).collect();
    let (a, b) = linear_fit(&x, &y);
    if !(b < 0.0) {
        return Err(Error::SingularDesignMatrix);
    }
    Ok(t0 - a / b)
}

/// Extinction time from the last decade of decay; the uncertainty is the
/// spread of the roots over the last half, one and two decades.
pub fn estimate_t(record: &ExtinctionRecord) -> Result<(f64, f64)> {
    estimate_t_samples(&record.samples, record.m)
}

pub fn estimate_t_samples(samples: &[ExtinctionSample], m: f64) -> Result<(f64, f64)> {
    let t = root_over(samples, m, 1.0)?;
    let mut lo = t;
    let mut hi = t;
    for d in [0.5, 2.0] {
        if let Ok(r) = root_over(samples, m, d) {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok((t, hi - lo))
}

/// Resample `(x, y)` (x increasing) at `count` uniformly spaced `x` in `[a, b]`
/// by linear interpolation.
fn resample(x: &[f64], y: &[f64], a: f64, b: f64, count: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count);
    let mut k = 0;
    for i in 0..count {
        let xi = a + (b - a) * i as f64 / (count - 1) as f64;
        while k + 2 < x.len() && x[k + 1] < xi {
            k += 1;
        }
        let s = (xi - x[k]) / (x[k + 1] - x[k]);
        out.push((xi, y[k] + s * (y[k + 1] - y[k])));
    }
    out
}

/// `(log(T−τ), log sup w)` pairs with `(T−τ)/T` in the window, sorted by the gap.
fn window_points(samples: &[ExtinctionSample], extinction_time: f64, window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    if let Some(s) = samples.iter().find(|s| !(s.tau < extinction_time)) {
        return Err(Error::TimeOutOfRange(s.tau));
    }
    if !(window.0 > 0.0 && window.0 < window.1 && window.1 < 1.0) {
        return Err(Error::Config(format!("fit window {window:?} must satisfy 0 < lo < hi < 1")));
    }
    let mut pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.sup_w > 0.0)
        .map(|s| ((extinction_time - s.tau) / extinction_time, s))
        .filter(|(g, _)| *g >= window.0 && *g <= window.1)
        .map(|(g, s)| ((g * extinction_time).ln(), s.sup_w.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: pts.len(),
            required: MIN_FIT_SAMPLES,
        });
    }
    Ok(pts)
}

/// Least-squares rate fit on a log-uniform resampling of the window.
pub fn fit_rate(
    samples: &[ExtinctionSample],
    extinction_time: f64,
    model: RateModel,
    window: (f64, f64),
) -> Result<RateFit> {
    let pts = window_points(samples, extinction_time, window)?;
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let count = pts.len();
    let res = resample(&x, &y, x[0], x[count - 1], count);
    let cols = match model {
        RateModel::PurePower => 2,
        RateModel::LogCorrected => 3,
    };
    let ln_t = extinction_time.ln();
    let a = DMatrix::from_fn(count, cols, |i, j| {
        let g = res[i].0;
        match j {
            0 => 1.0,
            1 => g,
            _ => (ln_t - g).ln(),
        }
    });
    let rhs = DVector::from_iterator(count, res.iter().map(|p| p.1));
    // column scaling keeps the singular-value test meaningful
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut scaled = a.clone();
    for j in 0..cols {
        scaled.column_mut(j).scale_mut(1.0 / norms[j]);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::SingularDesignMatrix);
    }
    let coef = svd.solve(&rhs, 1e-14 * smax).map_err(|_| Error::SingularDesignMatrix)?;
    let coef: Vec<f64> = (0..cols).map(|j| coef[j] / norms[j]).collect();
    let fitted = &a * DVector::from_column_slice(&coef);
    let rms = ((&rhs - fitted).norm_squared() / count as f64).sqrt();
    Ok(RateFit {
        model,
        amplitude: coef[0].exp(),
        power: coef[1],
        log_power: if cols == 3 { coef[2] } else { 0.0 },
        rms_residual: rms,
        window,
        samples: count,
    })
}

/// `μ(t)` estimated from center values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuTrack {
    /// `(t, μ_est)`.
    pub series: Vec<(f64, f64)>,
    /// Geometric mean of `μ t^{1/(n−2)}`.
    pub beta: f64,
    /// Fitted slope of `log μ` against `log t`.
    pub slope: f64,
    pub rms: f64,
}

fn mu_from_center(n: usize, u: f64, i: usize) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::NonpositiveCenterValue(u, i));
    }
    Ok((alpha_n(n) / u).powf(2.0 / (n as f64 - 2.0)))
}

/// `μ_est = (α_n/u(center, t))^{2/(n−2)}` and its power-law fit in `t`.
pub fn extract_mu(center: &[(f64, f64)], n: usize) -> Result<MuTrack> {
    if center.len() < 2 {
        return Err(Error::InsufficientSamples {
            got: center.len(),
            required: 2,
        });
    }
    let series = center
        .iter()
        .enumerate()
        .map(|(i, &(t, u))| Ok((t, mu_from_center(n, u, i)?)))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = series.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let (a, slope) = linear_fit(&x, &y);
    let rms = (x.iter().zip(&y).map(|(x, y)| (y - a - slope * x).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    let e = 1.0 / (n as f64 - 2.0);
    let beta = (x.iter().zip(&y).map(|(x, y)| y + e * x).sum::<f64>() / x.len() as f64).exp();
    Ok(MuTrack {
        series,
        beta,
        slope,
        rms,
    })
}

/// `μ̃(τ)` of a w-form run fitted to `β (log(T/(T−τ)))^{−1/(n−2)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuTildeTrack {
    /// `(τ, μ̃_est)`.
    pub series: Vec<(f64, f64)>,
    pub beta: f64,
    /// Relative rms of the one-parameter fit.
    pub rms: f64,
    /// Pearson correlation of `μ̃_est` with `(log(T/(T−τ)))^{−1/(n−2)}`.
    pub correlation: f64,
    /// `rms > MU_TILDE_RMS_THRESHOLD`.
    pub poor: bool,
}

/// `μ̃_est = (α_n / u(0))^{2/(n−2)}` with `u(0)` the transformed center value,
/// i.e. `(α_n (T−τ)^{m/(1−m)} / (κ^{m/(1−m)} w(0)^m))^{2/(n−2)}`.
pub fn extract_mu_tilde(
    samples: &[ExtinctionSample],
    extinction_time: f64,
    n: usize,
    m: f64,
    window: (f64, f64),
) -> Result<MuTildeTrack> {
    let tr = Transformation::new(m, extinction_time)?;
    let e = 1.0 / (n as f64 - 2.0);
    let mut series = Vec::new();
    let mut x = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if !(s.tau < extinction_time) {
            return Err(Error::TimeOutOfRange(s.tau));
        }
        let g = (extinction_time - s.tau) / extinction_time;
        if g < window.0 || g > window.1 {
            continue;
        }
        let mu = mu_from_center(n, tr.u_value(s.center_w, s.tau)?, i)?;
        series.push((s.tau, mu));
        x.push((-g.ln()).powf(-e));
    }
    if series.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: series.len(),
            required: MIN_FIT_SAMPLES,
        });
    }
    let y: Vec<f64> = series.iter().map(|p| p.1).collect();
    let beta = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    let nn = y.len() as f64;
    let my = y.iter().sum::<f64>() / nn;
    let rms = (x.iter().zip(&y).map(|(a, b)| (b - beta * a).powi(2)).sum::<f64>() / nn).sqrt() / my;
    let mx = x.iter().sum::<f64>() / nn;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let correlation = if sxx > 0.0 && syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
    Ok(MuTildeTrack {
        series,
        beta,
        rms,
        correlation,
        poor: rms > MU_TILDE_RMS_THRESHOLD,
    })
}

/// JSON summary written by `fdlab fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub t_est: f64,
    pub t_ci: f64,
    pub power: f64,
    pub log_power: f64,
    pub rms: f64,
    pub rms_pure_power: Option<f64>,
    pub window: (f64, f64),
    pub beta: Option<f64>,
    pub mu_tilde_correlation: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, big_t: f64, count: usize, decades: f64) -> Vec<ExtinctionSample> {
        (0..count)
            .map(|i| {
                let g = big_t * 10f64.powf(-decades * i as f64 / (count - 1) as f64);
                let tau = big_t - g;
                ExtinctionSample {
                    tau,
                    t: f64::NAN,
                    sup_w: f(g),
                    center_w: f(g),
                    sup_u: f64::NAN,
                    dt: 0.0,
                    newton_iters: 0,
                }
            })
            .skip(1)
            .collect()
    }

    #[test]
    fn rates() {
        assert_eq!(theoretical_rates(3, 0.2).unwrap(), (1.25, 2.5));
        assert_eq!(theoretical_rates(4, 1.0 / 3.0).unwrap(), (1.5, 1.5));
        assert_eq!(theoretical_rates(3, 0.5).unwrap(), (2.0, 0.0));
        assert!(matches!(theoretical_rates(3, 0.1), Err(Error::SubcriticalUnsupported(_))));
    }

    #[test]
    fn pure_power_round_trip() {
        let m = 0.5;
        let s = series(|g| 3.0 * g * g, 1.0, 400, 8.0);
        let (t, _) = estimate_t_samples(&s, m).unwrap();
        assert!((t - 1.0).abs() < 1e-10);
        let f = fit_rate(&s, 1.0, RateModel::PurePower, DEFAULT_WINDOW).unwrap();
        assert!((f.power - 2.0).abs() < 1e-12 && (f.amplitude - 3.0).abs() < 1e-10);
        assert!(f.rms_residual < 1e-12);
    }

    #[test]
    fn log_corrected_round_trip() {
        let big_t = 1.0;
        let s = series(|g| 0.7 * g.powf(1.25) * (-g.ln()).powf(2.5), big_t, 600, 9.0);
        let f = fit_rate(&s, big_t, RateModel::LogCorrected, DEFAULT_WINDOW).unwrap();
        assert!((f.power - 1.25).abs() < 1e-10 && (f.log_power - 2.5).abs() < 1e-10, "{f:?}");
        let p = fit_rate(&s, big_t, RateModel::PurePower, DEFAULT_WINDOW).unwrap();
        assert!(f.rms_residual <= p.rms_residual);
        let (t, _) = estimate_t_samples(&s, 0.2).unwrap();
        assert!((t - big_t).abs() < 1e-3, "{t}");
    }

    #[test]
    fn estimate_t_is_translation_invariant() {
        let s = series(|g| g.powf(1.25) * (-g.ln()).powf(2.5), 1.0, 300, 9.0);
        let shifted: Vec<ExtinctionSample> = s.iter().map(|x| ExtinctionSample { tau: x.tau + 0.5, ..*x }).collect();
        let (a, _) = estimate_t_samples(&s, 0.2).unwrap();
        let (b, _) = estimate_t_samples(&shifted, 0.2).unwrap();
        assert!((b - a - 0.5).abs() < 1e-12, "{}", b - a - 0.5);
    }

    #[test]
    fn too_few_samples() {
        let s = series(|g| g * g, 1.0, 8, 8.0);
        assert!(matches!(estimate_t_samples(&s, 0.5), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn mu_round_trips() {
        let n = 3;
        let center: Vec<(f64, f64)> = (1..50)
            .map(|i| {
                let t = i as f64;
                (t, alpha_n(n) * (1.0 / t).powf(-0.5))
            })
            .collect();
        let tr = extract_mu(&center, n).unwrap();
        assert!((tr.slope + 1.0).abs() < 1e-8);
        assert!(matches!(extract_mu(&[(1.0, 1.0), (2.0, -1.0)], 3), Err(Error::NonpositiveCenterValue(..))));
    }

    #[test]
    fn mu_tilde_round_trip() {
        let (n, m, big_t, beta) = (3usize, 0.2, 1.0, 0.3);
        let tr = Transformation::new(m, big_t).unwrap();
        let s: Vec<ExtinctionSample> = series(|g| g, big_t, 300, 6.0)
            .into_iter()
            .map(|x| {
                let g = big_t - x.tau;
                let mu = beta * (big_t / g).ln().powf(-1.0);
                let u = alpha_n(n) * mu.powf(-0.5);
                let w = (u / tr.amplitude(x.tau).unwrap()).powf(1.0 / m);
                ExtinctionSample { center_w: w, sup_w: w, ..x }
            })
            .collect();
        let f = extract_mu_tilde(&s, big_t, n, m, DEFAULT_WINDOW).unwrap();
        assert!((f.beta - beta).abs() < 1e-8 * beta && !f.poor && f.correlation > 0.999999);
    }
}
