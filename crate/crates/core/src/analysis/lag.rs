//! Sample-level lag between two recordings of the same signal.
//!
//! The lag is the integer shift that maximizes the raw cross-correlation
//!
//! ```text
//! r(L) = sum_n a[n] * b[n - L]
//! ```
//!
//! over the overlap of the two buffers. A positive lag means `b` leads `a`:
//! whatever appears in `a` at sample `n` already appeared in `b` at `n - L`.
//!
//! All lags are scored at once through an FFT; the handful of lags within
//! rounding distance of the best score are then re-scored exactly in the time
//! domain so ties resolve the same way a direct evaluation would.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioSignal;
use crate::error::{Error, Result};

/// One LTC frame at 192 kHz and 30 fps.
pub const DEFAULT_MAX_LAG: usize = 6400;

const MAX_REFINED_CANDIDATES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagOptions {
    pub max_lag: usize,
    /// Score by correlation coefficient over the overlap instead of the raw sum.
    pub normalized: bool,
}

impl Default for LagOptions {
    fn default() -> Self {
        LagOptions { max_lag: DEFAULT_MAX_LAG, normalized: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagMeasurement {
    pub lag_samples: i64,
    pub sample_rate: u32,
    pub lag_seconds: f64,
    pub peak_correlation: f64,
}

impl LagMeasurement {
    pub fn new(lag_samples: i64, sample_rate: u32, peak_correlation: f64) -> Self {
        LagMeasurement {
            lag_samples,
            sample_rate,
            lag_seconds: lag_samples as f64 / f64::from(sample_rate),
            peak_correlation,
        }
    }

    pub fn lag_micros(&self) -> f64 {
        self.lag_seconds * 1e6
    }
}

pub fn crosscorr_lag(a: &AudioSignal, b: &AudioSignal, max_lag: usize) -> Result<LagMeasurement> {
    crosscorr_lag_with(a, b, &LagOptions { max_lag, ..LagOptions::default() })
}

pub fn crosscorr_lag_with(a: &AudioSignal, b: &AudioSignal, opts: &LagOptions) -> Result<LagMeasurement> {
    if a.sample_rate() != b.sample_rate() {
        return Err(Error::SampleRateMismatch(a.sample_rate(), b.sample_rate()));
    }
    let (lag, score) = best_lag(a.samples(), b.samples(), opts)?;
    Ok(LagMeasurement::new(lag, a.sample_rate(), score))
}

/// Exact raw correlation at one lag, summed in ascending `n`.
pub fn correlation_at(a: &[f32], b: &[f32], lag: i64) -> f64 {
    let (lo, hi) = overlap(a.len(), b.len(), lag);
    (lo..hi)
        .map(|n| f64::from(a[n]) * f64::from(b[(n as i64 - lag) as usize]))
        .sum()
}

/// Range of `n` for which both `a[n]` and `b[n - lag]` exist.
fn overlap(len_a: usize, len_b: usize, lag: i64) -> (usize, usize) {
    let lo = lag.max(0) as usize;
    let hi = (len_b as i64 + lag).clamp(0, len_a as i64) as usize;
    (lo.min(hi), hi)
}

/// Raw correlation for every lag in `[-max_lag, max_lag]`, index `lag + max_lag`.
pub fn correlate_fft(a: &[f32], b: &[f32], max_lag: usize) -> Vec<f64> {
    let n = (a.len() + b.len()).max(1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let load = |x: &[f32]| {
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(f64::from(v), 0.0)).collect();
        buf.resize(n, Complex::new(0.0, 0.0));
        buf
    };
    let mut fa = load(a);
    let mut fb = load(b);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y.conj();
    }
    inv.process(&mut fa);

    let scale = 1.0 / n as f64;
    let max = max_lag as i64;
    (-max..=max)
        .map(|lag| fa[lag.rem_euclid(n as i64) as usize].re * scale)
        .collect()
}

fn energies(x: &[f32]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(x.len() + 1);
    acc.push(0.0);
    let mut s = 0.0;
    for &v in x {
        s += f64::from(v) * f64::from(v);
        acc.push(s);
    }
    acc
}

fn normalize(raw: f64, lag: i64, ea: &[f64], eb: &[f64], len_a: usize, len_b: usize) -> f64 {
    let (lo, hi) = overlap(len_a, len_b, lag);
    let e_a = ea[hi] - ea[lo];
    let (blo, bhi) = ((lo as i64 - lag) as usize, (hi as i64 - lag) as usize);
    let e_b = eb[bhi] - eb[blo];
    let denom = (e_a * e_b).sqrt();
    if denom > 0.0 {
        raw / denom
    } else {
        0.0
    }
}

/// Orders lag candidates: higher score first, then smaller `|lag|`, then smaller lag.
fn better(candidate: (i64, f64), incumbent: (i64, f64)) -> bool {
    candidate.1 > incumbent.1
        || (candidate.1 == incumbent.1
            && (candidate.0.abs(), candidate.0) < (incumbent.0.abs(), incumbent.0))
}

pub(crate) fn best_lag(a: &[f32], b: &[f32], opts: &LagOptions) -> Result<(i64, f64)> {
    let needed = 2 * opts.max_lag;
    let shortest = a.len().min(b.len());
    if shortest < needed.max(1) {
        return Err(Error::SignalTooShort { needed: needed.max(1), got: shortest });
    }
    let raw = correlate_fft(a, b, opts.max_lag);
    let (ea, eb) = if opts.normalized { (energies(a), energies(b)) } else { (vec![], vec![]) };
    let score = |lag: i64, r: f64| {
        if opts.normalized {
            normalize(r, lag, &ea, &eb, a.len(), b.len())
        } else {
            r
        }
    };

    let max = opts.max_lag as i64;
    let approx: Vec<(i64, f64)> = raw
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let lag = i as i64 - max;
            (lag, score(lag, r))
        })
        .collect();
    let top = approx.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);

    // FFT rounding is far below this; anything closer to the top gets an exact re-score.
    let magnitude = if opts.normalized { 1.0 } else { (ea_total(a) * ea_total(b)).sqrt() };
    let tol = 1e-9 * magnitude + f64::MIN_POSITIVE;
    let mut candidates: Vec<(i64, f64)> = approx.into_iter().filter(|c| c.1 >= top - tol).collect();
    candidates.sort_by(|x, y| y.1.total_cmp(&x.1));
    candidates.truncate(MAX_REFINED_CANDIDATES);

    let mut best: Option<(i64, f64)> = None;
    for (lag, _) in candidates {
        let exact = (lag, score(lag, correlation_at(a, b, lag)));
        if best.is_none_or(|inc| better(exact, inc)) {
            best = Some(exact);
        }
    }
    Ok(best.expect("at least one lag"))
}

fn ea_total(x: &[f32]) -> f64 {
    x.iter().map(|&v| f64::from(v) * f64::from(v)).sum()
}

/// Mean and median of a set of lags, in samples and microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSummary {
    pub lags_samples: Vec<i64>,
    pub sample_rate: u32,
    pub mean_samples: f64,
    pub median_samples: f64,
    pub mean_micros: f64,
    pub median_micros: f64,
}

/// Even-length medians take the midpoint of the two central lags.
pub fn summarize_lags(lags: &[i64], sample_rate: u32) -> Result<LagSummary> {
    if lags.is_empty() {
        return Err(Error::InvalidParameter("no lags to summarize".into()));
    }
    if sample_rate == 0 {
        return Err(Error::InvalidSampleRate(sample_rate));
    }
    let mean = lags.iter().sum::<i64>() as f64 / lags.len() as f64;
    let mut sorted = lags.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 0 {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    } else {
        sorted[mid] as f64
    };
    let to_us = |s: f64| s / f64::from(sample_rate) * 1e6;
    Ok(LagSummary {
        lags_samples: lags.to_vec(),
        sample_rate,
        mean_samples: mean,
        median_samples: median,
        mean_micros: to_us(mean),
        median_micros: to_us(median),
    })
}
