//! Stitched (epoch-based) empirical Bernstein confidence sequence with a
//! law-of-the-iterated-logarithm width, built by unioning fixed-tuning
//! boundaries over geometric variance epochs.

use crate::error::{CsError, Result};
use crate::kernel;

/// Penalty over epochs: how the error budget alpha is divided among the
/// geometric epochs indexed by j = 0, 1, 2, ...
#[derive(Debug, Clone)]
pub enum EpochPenalty {
    /// h(j) = zeta(s) (j + 1)^s, a polynomial stitching function.
    ZetaPoly { s: f64 },
    /// Explicit per-epoch weights w_j with sum <= 1; alpha_j = alpha * w_j.
    /// Epochs beyond the table reuse the last weight (conservative only if
    /// the tail truly is covered; intended for experimentation).
    Custom(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct StitchConfig {
    pub alpha: f64,
    /// Geometric epoch ratio (> 1).
    pub eta: f64,
    /// Variance at which the first epoch starts (> 0).
    pub l0: f64,
    pub penalty: EpochPenalty,
}

impl StitchConfig {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, eta: 2.0, l0: 1.0, penalty: EpochPenalty::ZetaPoly { s: 1.4 } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CsError::Config(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if !(self.eta > 1.0) {
            return Err(CsError::Config(format!("eta must exceed 1, got {}", self.eta)));
        }
        if !(self.l0 > 0.0) {
            return Err(CsError::Config(format!("l0 must be positive, got {}", self.l0)));
        }
        match &self.penalty {
            EpochPenalty::ZetaPoly { s } => {
                if !(*s > 1.0) {
                    return Err(CsError::Config(format!("zeta exponent must exceed 1, got {s}")));
                }
            }
            EpochPenalty::Custom(w) => {
                if w.is_empty() {
                    return Err(CsError::Config("custom penalty table is empty".into()));
                }
                if w.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
                    return Err(CsError::Config("custom penalty weights must lie in (0,1]".into()));
                }
                if w.iter().sum::<f64>() > 1.0 + 1e-12 {
                    return Err(CsError::Config("custom penalty weights must sum to at most 1".into()));
                }
            }
        }
        Ok(())
    }

    /// log h(j) at a real-valued epoch index j >= 0.
    pub fn log_penalty(&self, j: f64) -> f64 {
        match &self.penalty {
            EpochPenalty::ZetaPoly { s } => zeta(*s).ln() + s * (j + 1.0).ln(),
            EpochPenalty::Custom(w) => {
                let idx = (j.floor() as usize).min(w.len() - 1);
                -w[idx].ln()
            }
        }
    }
}

/// Riemann zeta at real s > 1, via a partial sum plus the Euler-Maclaurin
/// tail correction. Accurate to well below 1e-12 for s >= 1.1.
pub fn zeta(s: f64) -> f64 {
    const N: u64 = 1_000;
    let mut sum = 0.0;
    for k in 1..=N {
        sum += (k as f64).powf(-s);
    }
    let nf = N as f64;
    // Euler-Maclaurin tail with the B_2 and B_4 corrections; the truncation
    // error is O(s^5 N^{-s-5}), far below 1e-12 for s > 1 and N = 1000.
    sum + nf.powf(1.0 - s) / (s - 1.0) - nf.powf(-s) / 2.0
        + s * nf.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * nf.powf(-s - 3.0) / 720.0
}

/// Streaming accumulator for the stitched sequence.
#[derive(Debug, Clone)]
pub struct StitchState {
    pub t: u64,
    pub s: f64,
    /// V_t = sum of psi_E(|X_i - Xhat_i|), with the smoothed-mean predictor.
    pub v: f64,
    predictor_sum: f64,
    next_predictor: f64,
}

impl StitchState {
    pub fn new() -> Self {
        Self { t: 0, s: 0.0, v: 0.0, predictor_sum: 0.5, next_predictor: 0.5 }
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(CsError::Domain(format!("observation must lie in [0,1], got {x}")));
        }
        self.t += 1;
        self.s += x;
        self.v += kernel::psi_e((x - self.next_predictor).abs())?;
        self.predictor_sum += x;
        self.next_predictor = self.predictor_sum / (self.t + 1) as f64;
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.s / self.t as f64
    }
}

impl Default for StitchState {
    fn default() -> Self {
        Self::new()
    }
}

/// Halfwidth of the fixed-tuning boundary |xi| V_t / t + log(2/alpha) / (t |xi|).
pub fn fixed_xi_halfwidth(xi: f64, v: f64, t: u64, alpha: f64) -> Result<f64> {
    if xi == 0.0 || xi.abs() > 1.0 {
        return Err(CsError::Config(format!("xi must lie in [-1,1] \\ {{0}}, got {xi}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CsError::Config(format!("alpha must be in (0,1), got {alpha}")));
    }
    Ok(xi.abs() * v / t as f64 + (2.0 / alpha).ln() / (t as f64 * xi.abs()))
}

/// Per-epoch error budget and tuning value for the first `n` epochs:
/// alpha_j = alpha / h(j) and xi_j = min(1, sqrt(log(2/alpha_j) / (l0 eta^{j+1}))).
pub fn epoch_schedule(config: &StitchConfig, n: usize) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let alpha_j = (config.alpha.ln() - config.log_penalty(j as f64)).exp();
        let xi = ((2.0 / alpha_j).ln() / (config.l0 * config.eta.powi(j as i32 + 1)))
            .sqrt()
            .min(1.0);
        out.push((alpha_j, xi));
    }
    Ok(out)
}

/// Whether the stitched bound is non-vacuous at intrinsic time V_t: the
/// variance has entered the first epoch and the boundary is below V_t.
/// The second check is done in log space: log h(j(V)) <= log(alpha/2) + V.
pub fn stitched_valid(config: &StitchConfig, v: f64) -> bool {
    if v < config.l0 {
        return false;
    }
    let j = (v / config.l0).ln() / config.eta.ln();
    config.log_penalty(j) <= (config.alpha / 2.0).ln() + v
}

/// Stitched halfwidth at (t, V_t):
/// (sqrt(eta) + 1)/t * sqrt(V_t (log(2/alpha) + log h(log_eta(V_t / l0)))),
/// evaluated at the real epoch index. `None` while the bound is vacuous.
pub fn stitched_halfwidth(config: &StitchConfig, v: f64, t: u64) -> Result<Option<f64>> {
    config.validate()?;
    if !stitched_valid(config, v) {
        return Ok(None);
    }
    let j = (v / config.l0).ln() / config.eta.ln();
    let boundary = v * ((2.0 / config.alpha).ln() + config.log_penalty(j));
    Ok(Some((config.eta.sqrt() + 1.0) / t as f64 * boundary.sqrt()))
}

/// The stitched confidence interval around the sample mean.
pub fn interval(config: &StitchConfig, state: &StitchState) -> Result<crate::eb::Interval> {
    match stitched_halfwidth(config, state.v, state.t)? {
        Some(w) => Ok(crate::eb::Interval::from_center(state.mean(), w, state.t, true)),
        None => Ok(crate::eb::Interval::vacuous(state.t, false)),
    }
}
