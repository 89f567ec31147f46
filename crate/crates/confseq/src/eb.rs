//! Empirical Bernstein confidence sequences for the average conditional mean
//! of a bounded stream: the exact truncated-Gaussian mixture interval, the
//! uniform-mixture variant, and the closed-form relaxation with its hitting
//! time t0.
//!
//! The accumulators are S_t = sum of X_i and
//! U_t = 1/(2 kappa^2) + sum of psi_E(|X_i - Xhat_i|), where Xhat_t is a
//! predictable estimate of X_t (by default the smoothed running mean
//! (1/2 + sum_{j<t} X_j)/t, so Xhat_1 = 1/2 and Xhat_t < 1 always).

use crate::error::{CsError, Result};
use crate::kernel::{self, KernelTolerances};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Predictable estimate fed to the variance surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predictor {
    /// Xhat_t = (1/2 + sum_{j<t} X_j) / t.
    SmoothedMean,
    /// A fixed value in [0, 1).
    Constant(f64),
    /// Caller supplies the next prediction via [`EbState::set_predictor`].
    External,
}

#[derive(Debug, Clone)]
pub struct EbConfig {
    pub alpha: f64,
    pub kappa: f64,
    pub predictor: Predictor,
    /// Maintain the running intersection of the closed-form intervals.
    /// Only valid when the conditional mean is constant over time.
    pub intersect: bool,
}

impl EbConfig {
    pub fn new(alpha: f64, kappa: f64) -> Self {
        Self { alpha, kappa, predictor: Predictor::SmoothedMean, intersect: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CsError::Config(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if !(self.kappa > 0.0) {
            return Err(CsError::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        if let Predictor::Constant(c) = self.predictor {
            if !(0.0..1.0).contains(&c) {
                return Err(CsError::Config(format!("constant predictor must lie in [0,1), got {c}")));
            }
        }
        Ok(())
    }

    /// Z = Phi(1/kappa) - Phi(-1/kappa) = erf(1/(kappa sqrt(2))).
    pub fn z(&self) -> f64 {
        kernel::erf(1.0 / (self.kappa * std::f64::consts::SQRT_2))
    }

    /// Ville threshold G_alpha = kappa Z sqrt(2 pi) / alpha.
    pub fn log_g_alpha(&self) -> f64 {
        (self.kappa * self.z() * SQRT_2PI / self.alpha).ln()
    }
}

impl Default for EbConfig {
    fn default() -> Self {
        Self::new(0.05, 0.25)
    }
}

/// A confidence interval at time `t`, clipped to the parameter space [0, 1].
///
/// `halfwidth` is the unclipped analytic halfwidth; `lo`/`hi` are clipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub t: u64,
    pub valid: bool,
    pub halfwidth: f64,
}

impl Interval {
    pub fn from_center(center: f64, halfwidth: f64, t: u64, valid: bool) -> Self {
        Self {
            lo: (center - halfwidth).max(0.0),
            hi: (center + halfwidth).min(1.0),
            t,
            valid,
            halfwidth,
        }
    }

    pub fn vacuous(t: u64, valid: bool) -> Self {
        Self { lo: 0.0, hi: 1.0, t, valid, halfwidth: 0.5 }
    }

    pub fn contains(&self, m: f64) -> bool {
        self.lo <= m && m <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
            t: other.t,
            valid: self.valid && other.valid,
            halfwidth: self.halfwidth.min(other.halfwidth),
        }
    }
}

/// Accumulated sufficient statistics for one stream.
#[derive(Debug, Clone)]
pub struct EbState {
    pub t: u64,
    /// S_t = sum of X_i.
    pub s: f64,
    /// U_t = 1/(2 kappa^2) + sum of psi_E(|X_i - Xhat_i|).
    pub u: f64,
    /// 1/2 + sum of X_i, for the smoothed predictor.
    pub predictor_sum: f64,
    /// Xhat_{t+1}, the prediction for the next observation.
    pub next_predictor: f64,
    /// Whether the closed-form relaxation has become valid. Monotone.
    pub t0_reached: bool,
    /// Running intersection of valid closed-form intervals (opt in).
    pub intersection: Option<Interval>,
}

pub fn new_state(config: &EbConfig) -> Result<EbState> {
    config.validate()?;
    let next_predictor = match config.predictor {
        Predictor::SmoothedMean => 0.5,
        Predictor::Constant(c) => c,
        Predictor::External => 0.5,
    };
    Ok(EbState {
        t: 0,
        s: 0.0,
        u: 1.0 / (2.0 * config.kappa * config.kappa),
        predictor_sum: 0.5,
        next_predictor,
        t0_reached: false,
        intersection: None,
    })
}

impl EbState {
    /// V_t = U_t - 1/(2 kappa^2), the kappa-free residual sum.
    pub fn v(&self, config: &EbConfig) -> f64 {
        self.u - 1.0 / (2.0 * config.kappa * config.kappa)
    }

    /// Sample mean, the common center of all three intervals.
    pub fn mean(&self) -> f64 {
        self.s / self.t as f64
    }

    /// Override the next prediction (predictor = External only).
    pub fn set_predictor(&mut self, xhat: f64) -> Result<()> {
        if !(0.0..1.0).contains(&xhat) {
            return Err(CsError::Domain(format!("predictor must lie in [0,1), got {xhat}")));
        }
        self.next_predictor = xhat;
        Ok(())
    }
}

/// Ingest one observation.
pub fn update(state: &mut EbState, x: f64, config: &EbConfig) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CsError::Domain(format!("observation must lie in [0,1], got {x}")));
    }
    state.t += 1;
    state.s += x;
    state.u += kernel::psi_e((x - state.next_predictor).abs())?;
    state.predictor_sum += x;
    if let Predictor::SmoothedMean = config.predictor {
        state.next_predictor = state.predictor_sum / (state.t + 1) as f64;
    }
    if !state.t0_reached && t0_condition_holds(state.u, config) {
        state.t0_reached = true;
    }
    if config.intersect {
        let iv = interval_apx(state, config);
        if iv.valid {
            state.intersection = Some(match &state.intersection {
                Some(prev) => prev.intersect(&iv),
                None => iv,
            });
        }
    }
    Ok(())
}

/// Hitting-time condition: sqrt(pi/U) (exp(U/4) - 1/2) >= G_alpha,
/// evaluated in log space so large U never overflows.
fn t0_condition_holds(u: f64, config: &EbConfig) -> bool {
    // log(exp(U/4) - 1/2) = U/4 + log(1 - exp(-U/4)/2)
    let log_big = u / 4.0 + (-0.5 * (-u / 4.0).exp()).ln_1p();
    let lhs = 0.5 * (std::f64::consts::PI.ln() - u.ln()) + log_big;
    lhs >= config.log_g_alpha()
}

pub fn t0_reached(state: &EbState, config: &EbConfig) -> bool {
    state.t0_reached || t0_condition_holds(state.u, config)
}

/// Closed-form halfwidth W_t = (2/t) sqrt(U_t (l_alpha + log(2 U_t)/2))
/// with l_alpha = log((kappa Z / alpha) / (1 - exp(-U_t/4))).
pub fn halfwidth_apx(state: &EbState, config: &EbConfig) -> f64 {
    let u = state.u;
    let ell = ell_alpha(u, config.kappa * config.z(), config.alpha);
    2.0 / state.t as f64 * (u * (ell + 0.5 * (2.0 * u).ln())).sqrt()
}

fn ell_alpha(u: f64, kappa_z: f64, alpha: f64) -> f64 {
    let log_denom = if u > 200.0 {
        0.0 // 1 - exp(-U/4) is 1 to machine precision
    } else {
        (-(-u / 4.0).exp()).ln_1p()
    };
    (kappa_z / alpha).ln() - log_denom
}

/// The closed-form confidence interval; `valid` is false before t0, in
/// which case callers should treat the interval as [0, 1].
pub fn interval_apx(state: &EbState, config: &EbConfig) -> Interval {
    let valid = state.t0_reached;
    Interval::from_center(state.mean(), halfwidth_apx(state, config), state.t, valid)
}

/// The exact mixture interval, via root finding on log I(.; U_t).
pub fn interval_mix(state: &EbState, config: &EbConfig, tol: &KernelTolerances) -> Result<Interval> {
    let y = kernel::solve_radius(state.u, config.log_g_alpha(), tol)?;
    Ok(Interval::from_center(state.mean(), y / state.t as f64, state.t, true))
}

/// The uniform-mixture interval (threshold 2/alpha, variance V_t).
/// Vacuously [0, 1] while I(0; V_t) >= 2/alpha or V_t = 0.
pub fn interval_unif(state: &EbState, config: &EbConfig, tol: &KernelTolerances) -> Result<Interval> {
    let v = state.v(config);
    let log_g = (2.0 / config.alpha).ln();
    if v <= 0.0 || kernel::log_mixture_integral(0.0, v)?.0 >= log_g {
        return Ok(Interval::vacuous(state.t, true));
    }
    let y = kernel::solve_radius(v, log_g, tol)?;
    Ok(Interval::from_center(state.mean(), y / state.t as f64, state.t, true))
}
