//! Comparison confidence sequences from prior work: the predictable-plug-in
//! empirical Bernstein sequence (WSR), the iterated-logarithm empirical
//! Bernstein sequence (HRMS), a predictable-plug-in Hoeffding sequence, and
//! Robbins' sub-Gaussian normal-mixture sequence.
//!
//! All four assume a constant conditional mean; they are included for width
//! and (mis)coverage comparisons against the variance-adaptive sequences.

use crate::eb::Interval;
use crate::error::{CsError, Result};
use crate::kernel;
use crate::stitched::zeta;

fn check_obs(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CsError::Domain(format!("observation must lie in [0,1], got {x}")));
    }
    Ok(())
}

/// Predictable-plug-in empirical Bernstein sequence with the tuning
/// lambda_t = min(1/2, sqrt(2 log(2/alpha) / (sigma2_hat_{t-1} t log(1+t)))).
#[derive(Debug, Clone)]
pub struct WsrState {
    pub t: u64,
    pub sum_lambda: f64,
    pub sum_lambda_x: f64,
    /// Sum of (X_i - Xhat_i)^2 psi_E(lambda_i), with Xhat_i = mu_hat_{i-1}.
    pub sum_vpsi: f64,
    /// mu_hat_t = (1/2 + sum X_i) / (t + 1).
    pub mu_hat: f64,
    /// sigma2_hat_t = (1/4 + sum (X_i - mu_hat_i)^2) / (t + 1).
    pub sigma2_hat: f64,
    pub alpha: f64,
    sum_x: f64,
    sum_sq_dev: f64,
}

impl WsrState {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CsError::Config(format!("alpha must be in (0,1), got {alpha}")));
        }
        Ok(Self {
            t: 0,
            sum_lambda: 0.0,
            sum_lambda_x: 0.0,
            sum_vpsi: 0.0,
            mu_hat: 0.5,
            sigma2_hat: 0.25,
            alpha,
            sum_x: 0.0,
            sum_sq_dev: 0.0,
        })
    }

    /// The tuning value that will be applied to the next observation.
    pub fn next_lambda(&self) -> f64 {
        let t = (self.t + 1) as f64;
        let num = 2.0 * (2.0 / self.alpha).ln();
        (num / (self.sigma2_hat * t * (1.0 + t).ln())).sqrt().min(0.5)
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        check_obs(x)?;
        let lambda = self.next_lambda();
        let xhat = self.mu_hat; // predictable: mean before seeing x
        self.t += 1;
        self.sum_lambda += lambda;
        self.sum_lambda_x += lambda * x;
        self.sum_vpsi += (x - xhat).powi(2) * kernel::psi_e(lambda)?;
        self.sum_x += x;
        self.mu_hat = (0.5 + self.sum_x) / (self.t + 1) as f64;
        self.sum_sq_dev += (x - self.mu_hat).powi(2);
        self.sigma2_hat = (0.25 + self.sum_sq_dev) / (self.t + 1) as f64;
        Ok(())
    }
}

pub fn wsr_interval(state: &WsrState) -> Result<Interval> {
    if state.t == 0 {
        return Err(CsError::Precondition("wsr_interval requires t >= 1".into()));
    }
    let center = state.sum_lambda_x / state.sum_lambda;
    let w = ((2.0 / state.alpha).ln() + state.sum_vpsi) / state.sum_lambda;
    Ok(Interval::from_center(center, w, state.t, true))
}

/// Iterated-logarithm empirical Bernstein sequence with a floored variance
/// process V_hat_t = max(sum (X_i - Xhat_i)^2, 1).
#[derive(Debug, Clone)]
pub struct HrmsState {
    pub t: u64,
    pub v_hat: f64,
    /// The predictable smoothed-mean estimate; also the reported center.
    pub x_hat_t: f64,
    pub eta: f64,
    pub s: f64,
    pub alpha: f64,
    sum_x: f64,
    sum_sq: f64,
}

impl HrmsState {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_params(alpha, 2.0, 1.4)
    }

    pub fn with_params(alpha: f64, eta: f64, s: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CsError::Config(format!("alpha must be in (0,1), got {alpha}")));
        }
        if !(eta > 1.0) {
            return Err(CsError::Config(format!("eta must exceed 1, got {eta}")));
        }
        if !(s > 1.0) {
            return Err(CsError::Config(format!("s must exceed 1, got {s}")));
        }
        Ok(Self { t: 0, v_hat: 1.0, x_hat_t: 0.5, eta, s, alpha, sum_x: 0.0, sum_sq: 0.0 })
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        check_obs(x)?;
        self.sum_sq += (x - self.x_hat_t).powi(2);
        self.v_hat = self.sum_sq.max(1.0);
        self.t += 1;
        self.sum_x += x;
        self.x_hat_t = (0.5 + self.sum_x) / (self.t + 1) as f64;
        Ok(())
    }
}

pub fn hrms_interval(state: &HrmsState) -> Result<Interval> {
    if state.t == 0 {
        return Err(CsError::Precondition("hrms_interval requires t >= 1".into()));
    }
    let eta = state.eta;
    let h = state.s * (eta * state.v_hat).ln().ln()
        + (2.0 * zeta(state.s) / (state.alpha * eta.ln().powf(state.s))).ln();
    let k1 = (eta.powf(0.25) + eta.powf(-0.25)) / std::f64::consts::SQRT_2;
    let k2 = (eta.sqrt() + 1.0) / 2.0;
    let w = (k1 * (state.v_hat * h).sqrt() + k2 * h) / state.t as f64;
    Ok(Interval::from_center(state.x_hat_t, w, state.t, true))
}

/// Known-scale parameters for the sub-Gaussian baselines.
#[derive(Debug, Clone, Copy)]
pub struct SubGaussianConfig {
    /// Variance proxy (standard-deviation scale), e.g. 1/2 for [0,1] data.
    pub sigma: f64,
    /// Robbins mixture precision.
    pub a: f64,
    pub alpha: f64,
}

impl SubGaussianConfig {
    pub fn new(sigma: f64, a: f64, alpha: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(CsError::Config(format!("sigma must be positive, got {sigma}")));
        }
        if !(a > 0.0) {
            return Err(CsError::Config(format!("a must be positive, got {a}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CsError::Config(format!("alpha must be in (0,1), got {alpha}")));
        }
        Ok(Self { sigma, a, alpha })
    }
}

/// Predictable-plug-in Hoeffding sequence with known variance proxy.
/// lambda_t = sqrt(2 log(2/alpha) / (sigma^2 t log(t+1))), uncapped.
#[derive(Debug, Clone)]
pub struct HoeffState {
    pub t: u64,
    pub sum_lambda: f64,
    pub sum_lambda_x: f64,
    pub sum_lambda_sq: f64,
}

impl HoeffState {
    pub fn new() -> Self {
        Self { t: 0, sum_lambda: 0.0, sum_lambda_x: 0.0, sum_lambda_sq: 0.0 }
    }

    pub fn next_lambda(&self, config: &SubGaussianConfig) -> f64 {
        let t = (self.t + 1) as f64;
        let num = 2.0 * (2.0 / config.alpha).ln();
        (num / (config.sigma * config.sigma * t * (t + 1.0).ln())).sqrt()
    }

    pub fn update(&mut self, x: f64, config: &SubGaussianConfig) -> Result<()> {
        check_obs(x)?;
        let lambda = self.next_lambda(config);
        self.t += 1;
        self.sum_lambda += lambda;
        self.sum_lambda_x += lambda * x;
        self.sum_lambda_sq += lambda * lambda;
        Ok(())
    }
}

impl Default for HoeffState {
    fn default() -> Self {
        Self::new()
    }
}

pub fn hoeffding_interval(state: &HoeffState, config: &SubGaussianConfig) -> Result<Interval> {
    if state.t == 0 {
        return Err(CsError::Precondition("hoeffding_interval requires t >= 1".into()));
    }
    let center = state.sum_lambda_x / state.sum_lambda;
    let w = ((2.0 / config.alpha).ln() + config.sigma * config.sigma / 2.0 * state.sum_lambda_sq)
        / state.sum_lambda;
    Ok(Interval::from_center(center, w, state.t, true))
}

/// Robbins' normal-mixture sequence for sigma-sub-Gaussian observations,
/// centered at the unweighted sample mean.
#[derive(Debug, Clone)]
pub struct RobbinsState {
    pub t: u64,
    pub sum_x: f64,
}

impl RobbinsState {
    pub fn new() -> Self {
        Self { t: 0, sum_x: 0.0 }
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        check_obs(x)?;
        self.t += 1;
        self.sum_x += x;
        Ok(())
    }
}

impl Default for RobbinsState {
    fn default() -> Self {
        Self::new()
    }
}

pub fn robbins_halfwidth(t: u64, config: &SubGaussianConfig) -> f64 {
    let tf = t as f64;
    let m = 1.0 + config.a * tf * config.sigma * config.sigma;
    (2.0 * m / (config.a * tf * tf) * ((1.0 / config.alpha).ln() + 0.5 * m.ln())).sqrt()
}

pub fn robbins_interval(state: &RobbinsState, config: &SubGaussianConfig) -> Result<Interval> {
    if state.t == 0 {
        return Err(CsError::Precondition("robbins_interval requires t >= 1".into()));
    }
    let center = state.sum_x / state.t as f64;
    Ok(Interval::from_center(center, robbins_halfwidth(state.t, config), state.t, true))
}
