//! Deterministic scalar kernel: the variance surrogate `psi_e`, the error
//! function, the mixture integral in log space, and a monotone root finder.
//!
//! Everything here is a pure function of its inputs, so the kernel is safe
//! to call from any number of threads.

use crate::error::{CsError, Result};

/// The natural log of a positive quantity; exponentiation is deferred to
/// callers so that very large or very small magnitudes never overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue(pub f64);

impl LogValue {
    /// Exponentiate, possibly to `inf`/`0.0` if the magnitude is extreme.
    pub fn value(self) -> f64 {
        self.0.exp()
    }
}

/// Tolerances for the iterative routines in this module.
#[derive(Debug, Clone, Copy)]
pub struct KernelTolerances {
    pub erf_rel_tol: f64,
    pub root_abs_tol: f64,
    pub root_max_iter: usize,
}

impl Default for KernelTolerances {
    fn default() -> Self {
        Self {
            erf_rel_tol: 1e-13,
            root_abs_tol: 1e-10,
            root_max_iter: 200,
        }
    }
}

impl KernelTolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.erf_rel_tol > 0.0) || !(self.root_abs_tol > 0.0) {
            return Err(CsError::Config("tolerances must be strictly positive".into()));
        }
        if self.root_max_iter < 1 {
            return Err(CsError::Config("root_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// psi_E(x) = -log(1-x) - x, the CGF of a centered unit-rate
/// negative-exponential random variable. Defined on [0, 1).
pub fn psi_e(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(CsError::Domain(format!("psi_e requires 0 <= x < 1, got {x}")));
    }
    // -ln(1-x) via ln_1p keeps full precision for small x.
    Ok(-(-x).ln_1p() - x)
}

// ---------------------------------------------------------------------------
// erf / erfc
//
// Rational minimax approximations with the classical SunPro coefficient sets
// (also used by FreeBSD's msun and Go's math package). Relative error is
// below 1e-15 everywhere, well inside the 1e-13 contract.
// ---------------------------------------------------------------------------

const ERX: f64 = 8.450_629_115_104_675_3e-1;

const EFX: f64 = 1.283_791_670_955_125_9e-1;
const PP0: f64 = 1.283_791_670_955_125_6e-1;
const PP1: f64 = -3.250_421_072_470_015e-1;
const PP2: f64 = -2.848_174_957_559_851e-2;
const PP3: f64 = -5.770_270_296_489_442e-3;
const PP4: f64 = -2.376_301_665_665_016_3e-5;
const QQ1: f64 = 3.979_172_239_591_553_5e-1;
const QQ2: f64 = 6.502_224_998_876_729e-2;
const QQ3: f64 = 5.081_306_281_875_766e-3;
const QQ4: f64 = 1.324_947_380_043_216_4e-4;
const QQ5: f64 = -3.960_228_278_775_368e-6;

const PA0: f64 = -2.362_118_560_752_659_4e-3;
const PA1: f64 = 4.148_561_186_837_483e-1;
const PA2: f64 = -3.722_078_760_357_013_3e-1;
const PA3: f64 = 3.183_466_199_011_617_6e-1;
const PA4: f64 = -1.108_946_942_823_966_8e-1;
const PA5: f64 = 3.547_830_432_561_823_6e-2;
const PA6: f64 = -2.166_375_594_868_790_8e-3;
const QA1: f64 = 1.064_208_804_008_442_3e-1;
const QA2: f64 = 5.403_979_177_021_710_5e-1;
const QA3: f64 = 7.182_865_441_419_627e-2;
const QA4: f64 = 1.261_712_198_087_616_4e-1;
const QA5: f64 = 1.363_708_391_202_905e-2;
const QA6: f64 = 1.198_449_984_679_910_7e-2;

const RA0: f64 = -9.864_944_034_847_148e-3;
const RA1: f64 = -6.938_585_727_071_818e-1;
const RA2: f64 = -1.055_862_622_532_329_1e1;
const RA3: f64 = -6.237_533_245_032_6e1;
const RA4: f64 = -1.623_966_694_625_734_7e2;
const RA5: f64 = -1.846_050_929_067_110_4e2;
const RA6: f64 = -8.128_743_550_630_659e1;
const RA7: f64 = -9.814_329_344_169_146e0;
const SA1: f64 = 1.965_127_166_743_925_7e1;
const SA2: f64 = 1.376_577_541_435_190_4e2;
const SA3: f64 = 4.345_658_774_752_292_3e2;
const SA4: f64 = 6.453_872_717_332_679e2;
const SA5: f64 = 4.290_081_400_275_678_3e2;
const SA6: f64 = 1.086_350_055_417_794_4e2;
const SA7: f64 = 6.570_249_770_319_282e0;
const SA8: f64 = -6.042_441_521_485_81e-2;

const RB0: f64 = -9.864_942_924_700_099e-3;
const RB1: f64 = -7.992_832_376_805_23e-1;
const RB2: f64 = -1.775_795_491_775_475_2e1;
const RB3: f64 = -1.606_363_848_558_219_2e2;
const RB4: f64 = -6.375_664_433_683_896e2;
const RB5: f64 = -1.025_095_131_611_077_2e3;
const RB6: f64 = -4.835_191_916_086_514e2;
const SB1: f64 = 3.033_806_074_348_246e1;
const SB2: f64 = 3.257_925_129_965_739_2e2;
const SB3: f64 = 1.536_729_586_084_437e3;
const SB4: f64 = 3.199_858_219_508_595_4e3;
const SB5: f64 = 2.553_050_406_433_164_4e3;
const SB6: f64 = 4.745_285_412_069_554e2;
const SB7: f64 = -2.244_095_244_658_581_8e1;

const TINY: f64 = 1e-300;
const SMALL: f64 = 3.725_290_298_461_914e-9; // 2^-28

/// erf(z) = (2/sqrt(pi)) * integral of exp(-u^2) over [0, z].
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return -1.0;
    }
    let sign = x < 0.0;
    let x = x.abs();
    let r = if x < 0.84375 {
        if x < SMALL {
            x + EFX * x
        } else {
            let z = x * x;
            let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
            let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
            x + x * (r / s)
        }
    } else if x < 1.25 {
        let s = x - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        ERX + p / q
    } else if x >= 6.0 {
        1.0 - TINY
    } else {
        1.0 - erfc_core(x)
    };
    if sign {
        -r
    } else {
        r
    }
}

/// erfc(z) = 1 - erf(z), accurate in the far right tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 2.0;
    }
    if x >= 0.0 {
        if x < 0.84375 {
            1.0 - erf(x)
        } else if x < 1.25 {
            let s = x - 1.0;
            let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
            let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
            1.0 - ERX - p / q
        } else if x < 28.0 {
            erfc_core(x)
        } else {
            0.0
        }
    } else {
        2.0 - erfc(-x)
    }
}

// erfc on [1.25, 28): (1/x) * exp(-x*x - 0.5625 + R/S).
fn erfc_core(x: f64) -> f64 {
    let s = 1.0 / (x * x);
    let (r, big_s) = if x < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2
                        + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // Split x into a 32-bit-truncated head so -x*x is computed exactly.
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    let t = (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / big_s).exp();
    t / x
}

/// log(erfc(x)) for any finite x, stable arbitrarily far into the right tail.
pub fn ln_erfc(x: f64) -> f64 {
    if x < 25.0 {
        // erfc(25) ~ 8e-274 is still a normal double.
        erfc(x).ln()
    } else {
        // Asymptotic series erfc(x) ~ exp(-x^2)/(x sqrt(pi)) (1 - 1/(2x^2) + ...).
        let s = 1.0 / (2.0 * x * x);
        let series = 1.0 - s * (1.0 - 3.0 * s * (1.0 - 5.0 * s * (1.0 - 7.0 * s)));
        -x * x - (x * std::f64::consts::PI.sqrt()).ln() + series.ln()
    }
}

/// log I(y; v) where
/// I(y; v) = exp(y^2/(4v)) / (2 sqrt(v/pi)) * (erf(sqrt(v) - y/(2 sqrt(v))) + erf(sqrt(v) + y/(2 sqrt(v)))).
///
/// Symmetric in `y`; computed entirely in log space so it never overflows
/// even when y^2/(4v) is in the thousands.
pub fn log_mixture_integral(y: f64, v: f64) -> Result<LogValue> {
    if !(v > 0.0) {
        return Err(CsError::Domain(format!("mixture integral requires v > 0, got {v}")));
    }
    let y = y.abs();
    let sv = v.sqrt();
    let a = sv - y / (2.0 * sv);
    let b = sv + y / (2.0 * sv);
    let quad = y * y / (4.0 * v);
    // log(erf(a) + erf(b)). For a well away from -1 the direct sum is exact
    // enough; once a is deep in the negative tail (which coincides with
    // quad growing large) switch to erfc complements:
    //   erf(a) + erf(b) = erfc(-a) - erfc(b),  with b = -a + 2 sqrt(v) > -a.
    let log_sum = if a > -1.0 {
        (erf(a) + erf(b)).ln()
    } else {
        let la = ln_erfc(-a);
        let lb = ln_erfc(b);
        la + (-(lb - la).exp()).ln_1p()
    };
    let log_i = quad - std::f64::consts::LN_2 - 0.5 * (v / std::f64::consts::PI).ln() + log_sum;
    Ok(LogValue(log_i))
}

/// Solve log I(y; v) = log_g for y >= 0 by bracket doubling plus bisection.
///
/// `log I(.; v)` is even and strictly increasing on [0, inf), so the
/// solution is unique. Requires log I(0; v) < log_g.
pub fn solve_radius(v: f64, log_g: f64, tol: &KernelTolerances) -> Result<f64> {
    tol.validate()?;
    if !(v > 0.0) {
        return Err(CsError::Domain(format!("solve_radius requires v > 0, got {v}")));
    }
    let at_zero = log_mixture_integral(0.0, v)?.0;
    if at_zero == log_g {
        return Ok(0.0);
    }
    if at_zero > log_g {
        return Err(CsError::Precondition(format!(
            "I(0; v) >= G: log I(0; {v}) = {at_zero} >= {log_g}"
        )));
    }

    let mut lo = 0.0_f64;
    let mut hi = v.max(1.0);
    let mut iters = 0usize;
    while log_mixture_integral(hi, v)?.0 < log_g {
        lo = hi;
        hi *= 2.0;
        iters += 1;
        if iters > tol.root_max_iter {
            return Err(CsError::Convergence("solve_radius bracket doubling exceeded iteration limit".into()));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let f = log_mixture_integral(mid, v)?.0;
        if (f - log_g).abs() <= tol.root_abs_tol {
            return Ok(mid);
        }
        if f < log_g {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
        if iters > tol.root_max_iter {
            return Err(CsError::Convergence("solve_radius bisection exceeded iteration limit".into()));
        }
    }
}
