//! Diagnostic formulas: limiting widths of the various sequences, the
//! realized-over-predicted ratio R_t for the closed-form bound, the
//! variance surrogate constant E[psi_E(|X - mu|)], and the worst-case
//! psi_E / sigma^2 ratio.

use statrs::function::gamma::ln_gamma;

use crate::eb::{self, EbConfig, EbState};
use crate::error::{CsError, Result};
use crate::kernel;
use crate::streams::DistKind;

/// E[psi_E(|X - mu|)] for a supported distribution: closed form for the
/// discrete cases, adaptive quadrature (1e-9 absolute) for the continuous
/// densities. Time-varying scenarios are rejected.
pub fn expected_psi_e(kind: &DistKind) -> Result<f64> {
    match kind {
        DistKind::Bernoulli(p) => {
            Ok(p * kernel::psi_e(1.0 - p)? + (1.0 - p) * kernel::psi_e(*p)?)
        }
        DistKind::TwoPoint { mu, eps } => {
            let low_dev = eps * (1.0 - mu) / (1.0 - eps);
            Ok(eps * kernel::psi_e(1.0 - mu)? + (1.0 - eps) * kernel::psi_e(low_dev)?)
        }
        DistKind::Constant(_) => Ok(0.0),
        DistKind::Uniform => {
            adaptive_simpson(&|x| kernel::psi_e((x - 0.5).abs()).unwrap(), 0.0, 1.0, 1e-9)
        }
        DistKind::Beta { a, b } => {
            let mu = a / (a + b);
            let log_norm = ln_gamma(a + b) - ln_gamma(*a) - ln_gamma(*b);
            let f = move |x: f64| {
                let log_pdf = log_norm + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln();
                kernel::psi_e((x - mu).abs()).unwrap() * log_pdf.exp()
            };
            adaptive_simpson(&f, 1e-10, 1.0 - 1e-10, 1e-9)
        }
        other => Err(CsError::Unsupported(format!(
            "expected_psi_e needs a fixed distribution, got {other:?}"
        ))),
    }
}

/// Variance of a supported distribution.
pub fn dist_variance(kind: &DistKind) -> Result<f64> {
    match kind {
        DistKind::Bernoulli(p) => Ok(p * (1.0 - p)),
        DistKind::Constant(_) => Ok(0.0),
        DistKind::Uniform => Ok(1.0 / 12.0),
        DistKind::Beta { a, b } => Ok(a * b / ((a + b) * (a + b) * (a + b + 1.0))),
        DistKind::TwoPoint { mu, eps } => {
            let low = (mu - eps) / (1.0 - eps);
            let ex2 = eps + (1.0 - eps) * low * low;
            Ok(ex2 - mu * mu)
        }
        other => Err(CsError::Unsupported(format!(
            "dist_variance needs a fixed distribution, got {other:?}"
        ))),
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(b > a) {
        return Err(CsError::Domain(format!("bad integration range [{a},{b}]")));
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    let v = adaptive_step(f, a, b, fa, fm, fb, whole, tol, 50);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CsError::Convergence("quadrature produced a non-finite value".into()))
    }
}

/// Predicted asymptotic halfwidth A_t = sqrt(2 u log t / t), where u is
/// E[psi_E(|X - mu|)] for the stream's distribution.
pub fn a_t_apx(t: u64, u: f64) -> Result<f64> {
    if t < 3 {
        return Err(CsError::Domain(format!("a_t_apx needs t >= 3, got {t}")));
    }
    if !(u > 0.0) {
        return Err(CsError::Domain(format!("a_t_apx needs u > 0, got {u}")));
    }
    let tf = t as f64;
    Ok((2.0 * u * tf.ln() / tf).sqrt())
}

/// Realized-over-predicted ratio R_t = W_t / A_t for a closed-form state.
pub fn r_t(state: &EbState, config: &EbConfig, u: f64) -> Result<f64> {
    let w = eb::halfwidth_apx(state, config);
    Ok(w / a_t_apx(state.t, u)?)
}

/// The finite-t refinement of R_t (dropping the o(1) term):
/// sqrt((2 U_t / (t u)) (log(1/alpha)/log t + 1/2)).
pub fn r_t_predicted(u_t: f64, t: u64, u: f64, alpha: f64) -> Result<f64> {
    if t < 3 || !(u > 0.0) {
        return Err(CsError::Domain("r_t_predicted needs t >= 3 and u > 0".into()));
    }
    let tf = t as f64;
    Ok((2.0 * u_t / (tf * u) * ((1.0 / alpha).ln() / tf.ln() + 0.5)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsrVariant {
    /// alpha-dependent tuning (the recommended default).
    Alpha,
    /// alpha-free tuning; alpha reappears additively in the width.
    NoAlpha,
}

/// Asymptotic halfwidth of the predictable plug-in empirical Bernstein
/// baseline under iid data with standard deviation sigma.
pub fn a_t_wsr(t: u64, sigma: f64, alpha: f64, variant: WsrVariant) -> Result<f64> {
    if t < 16 {
        return Err(CsError::Domain(format!("a_t_wsr needs t >= 16, got {t}")));
    }
    if !(sigma > 0.0) {
        return Err(CsError::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CsError::Domain(format!("alpha must be in (0,1), got {alpha}")));
    }
    let tf = t as f64;
    let llt = tf.ln().ln();
    Ok(match variant {
        WsrVariant::Alpha => {
            sigma / 2.0 * ((2.0 / alpha).ln() * tf.ln() / (2.0 * tf)).sqrt() * (1.0 + llt)
        }
        WsrVariant::NoAlpha => {
            0.5 * (sigma * sigma * tf.ln() / (2.0 * tf)).sqrt() * ((2.0 / alpha).ln() + llt)
        }
    })
}

/// Worst-case constant C_mu = psi_E(g(mu)) / g(mu)^2 with g = max(mu, 1-mu),
/// so that E[psi_E(|X - mu|)] <= C_mu sigma^2.
pub fn psi_sigma_ratio_bound(mu: f64) -> Result<f64> {
    if !(0.0 < mu && mu < 1.0) {
        return Err(CsError::Domain(format!("mu must lie in (0,1), got {mu}")));
    }
    let g = mu.max(1.0 - mu);
    Ok(kernel::psi_e(g)? / (g * g))
}

/// The extremal two-point distribution: 1 with probability eps, else
/// (mu - eps)/(1 - eps); its mean is exactly mu.
pub fn two_point_dist(mu: f64, eps: f64) -> Result<DistKind> {
    if !(0.0 < mu && mu < 1.0) {
        return Err(CsError::Domain(format!("mu must lie in (0,1), got {mu}")));
    }
    if !(0.0 < eps && eps < mu) {
        return Err(CsError::Domain(format!("eps must lie in (0,mu), got {eps}")));
    }
    Ok(DistKind::TwoPoint { mu, eps })
}

/// The sequences whose limiting widths are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthMethod {
    Apx,
    Stch,
    WsrAlpha,
    WsrNoAlpha,
    Hrms,
    HoeffAlpha,
    HoeffNoAlpha,
    Robbins,
    Bern,
    BernStch,
}

impl WidthMethod {
    pub const ALL: [WidthMethod; 10] = [
        WidthMethod::Apx,
        WidthMethod::Stch,
        WidthMethod::WsrAlpha,
        WidthMethod::WsrNoAlpha,
        WidthMethod::Hrms,
        WidthMethod::HoeffAlpha,
        WidthMethod::HoeffNoAlpha,
        WidthMethod::Robbins,
        WidthMethod::Bern,
        WidthMethod::BernStch,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            WidthMethod::Apx => "apx",
            WidthMethod::Stch => "stch",
            WidthMethod::WsrAlpha => "wsr_alpha",
            WidthMethod::WsrNoAlpha => "wsr_noalpha",
            WidthMethod::Hrms => "hrms",
            WidthMethod::HoeffAlpha => "hoeff_alpha",
            WidthMethod::HoeffNoAlpha => "hoeff_noalpha",
            WidthMethod::Robbins => "robbins",
            WidthMethod::Bern => "bern",
            WidthMethod::BernStch => "bern_stch",
        }
    }
}

/// Parameters a limiting-width row may need; a missing one is an error for
/// the rows that use it.
#[derive(Debug, Clone, Copy, Default)]
pub struct WidthParams {
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    /// E[psi_E(|X - mu|)].
    pub u: Option<f64>,
}

/// Evaluates a limiting-width expression at time t.
pub fn limiting_width(method: WidthMethod, params: &WidthParams, t: u64) -> Result<f64> {
    if t < 3 {
        return Err(CsError::Domain(format!("limiting_width needs t >= 3, got {t}")));
    }
    let tf = t as f64;
    let lt = tf.ln();
    let llt = lt.ln();
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| CsError::Config(format!("missing parameter {name} for {method:?}")))
    };
    Ok(match method {
        WidthMethod::Apx => {
            let u = need(params.u, "u")?;
            (2.0 * u * lt / tf).sqrt()
        }
        WidthMethod::Stch => {
            let u = need(params.u, "u")?;
            (4.0 * u * llt / tf).sqrt()
        }
        WidthMethod::WsrAlpha | WidthMethod::HoeffAlpha => {
            let sigma = need(params.sigma, "sigma")?;
            let alpha = need(params.alpha, "alpha")?;
            (sigma * sigma * (2.0 / alpha).ln() * lt / (8.0 * tf)).sqrt() * llt
        }
        WidthMethod::WsrNoAlpha | WidthMethod::HoeffNoAlpha => {
            let sigma = need(params.sigma, "sigma")?;
            (sigma * sigma * lt / (8.0 * tf)).sqrt() * llt
        }
        WidthMethod::Hrms | WidthMethod::BernStch => {
            let sigma = need(params.sigma, "sigma")?;
            (2.0 * sigma * sigma * llt / tf).sqrt()
        }
        WidthMethod::Robbins | WidthMethod::Bern => {
            let sigma = need(params.sigma, "sigma")?;
            (sigma * sigma * lt / tf).sqrt()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: [(DistKind, f64, f64); 5] = [
        (DistKind::Bernoulli(0.5), 0.194, 0.125),
        (DistKind::Bernoulli(0.1), 0.144, 0.045),
        (DistKind::Uniform, 0.057, 0.042),
        (DistKind::Beta { a: 5.0, b: 2.0 }, 0.016, 0.013),
        (DistKind::Beta { a: 10.0, b: 30.0 }, 0.002, 0.002),
    ];

    #[test]
    fn expected_psi_e_frozen_values() {
        // high-precision oracle values
        let cases = [
            (DistKind::Bernoulli(0.5), 0.19314718055994531),
            (DistKind::Bernoulli(0.1), 0.14508297379388717),
            (DistKind::Uniform, 0.056852819440054690),
            (DistKind::Beta { a: 5.0, b: 2.0 }, 0.015525911532537),
            (DistKind::Beta { a: 10.0, b: 30.0 }, 0.0024692912321954),
        ];
        for (kind, want) in cases {
            let got = expected_psi_e(&kind).unwrap();
            assert!((got - want).abs() < 1e-8, "{kind:?}: got {got}, want {want}");
        }
        assert_eq!(expected_psi_e(&DistKind::Constant(0.3)).unwrap(), 0.0);
        assert!(expected_psi_e(&DistKind::Sinusoid).is_err());
    }

    #[test]
    fn published_table_within_rounding() {
        for (kind, e_psi, half_var) in TABLE {
            let got = expected_psi_e(&kind).unwrap();
            assert!((got - e_psi).abs() <= 0.002, "{kind:?}: {got} vs {e_psi}");
            let v = dist_variance(&kind).unwrap() / 2.0;
            assert!((v - half_var).abs() <= 0.002, "{kind:?}: {v} vs {half_var}");
        }
    }

    #[test]
    fn psi_e_sandwich_bounds() {
        use rand::{Rng, SeedableRng};
        let upper = (2.0f64).ln() - 0.5;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let mut kinds: Vec<DistKind> = TABLE.iter().map(|(k, _, _)| k.clone()).collect();
        for _ in 0..100 {
            kinds.push(DistKind::Beta {
                a: 0.5 + 10.0 * rng.gen::<f64>(),
                b: 0.5 + 10.0 * rng.gen::<f64>(),
            });
        }
        for kind in kinds {
            let e = expected_psi_e(&kind).unwrap();
            let half_var = dist_variance(&kind).unwrap() / 2.0;
            assert!(e >= half_var - 1e-9, "{kind:?}: {e} < {half_var}");
            assert!(e <= upper + 1e-9, "{kind:?}: {e} > {upper}");
        }
    }

    #[test]
    fn ratio_bound_holds_on_table() {
        // E psi_E <= C_mu sigma^2
        for (kind, _, _) in TABLE {
            let mu = match &kind {
                DistKind::Bernoulli(p) => *p,
                DistKind::Uniform => 0.5,
                DistKind::Beta { a, b } => a / (a + b),
                _ => unreachable!(),
            };
            let c = psi_sigma_ratio_bound(mu).unwrap();
            let e = expected_psi_e(&kind).unwrap();
            let v = dist_variance(&kind).unwrap();
            assert!(e <= c * v + 1e-9, "{kind:?}");
        }
        let c = psi_sigma_ratio_bound(0.5).unwrap();
        assert!((c - 0.19314718055994531 / 0.25).abs() < 1e-12);
        assert!(psi_sigma_ratio_bound(0.0).is_err());
    }

    #[test]
    fn two_point_ratio_approaches_bound() {
        let c = psi_sigma_ratio_bound(0.3).unwrap();
        let mut prev_gap = f64::INFINITY;
        for eps in [0.1, 0.01, 0.001] {
            let kind = two_point_dist(0.3, eps).unwrap();
            let r = expected_psi_e(&kind).unwrap() / dist_variance(&kind).unwrap();
            let gap = (c - r).abs();
            assert!(gap < prev_gap, "eps = {eps}: gap {gap} did not shrink");
            prev_gap = gap;
        }
        assert!(prev_gap < 0.01);
        assert!(two_point_dist(0.3, 0.5).is_err());
    }

    #[test]
    fn a_t_apx_example_and_domain() {
        let u = (2.0f64).ln() - 0.5;
        let a = a_t_apx(1_000_000, u).unwrap();
        assert!((a - 2.3099e-3).abs() < 1e-6, "a = {a}");
        assert!(a_t_apx(2, u).is_err());
        assert!(a_t_apx(100, 0.0).is_err());
    }

    #[test]
    fn wsr_asymptote_dominates_apx() {
        let u = 0.19314718055994531;
        let mut prev_ratio = 0.0;
        for t in [10_000u64, 100_000, 1_000_000] {
            let wsr = a_t_wsr(t, 0.5, 0.05, WsrVariant::Alpha).unwrap();
            let apx = a_t_apx(t, u).unwrap();
            let ratio = wsr / apx;
            assert!(ratio > prev_ratio, "ratio not increasing at t = {t}");
            prev_ratio = ratio;
        }
        assert!(a_t_wsr(10, 0.5, 0.05, WsrVariant::Alpha).is_err());
        // no-alpha variant: additive alpha dependence only
        let w1 = a_t_wsr(100_000, 0.5, 0.05, WsrVariant::NoAlpha).unwrap();
        let t = 100_000f64;
        let expect = 0.5 * (0.25 * t.ln() / (2.0 * t)).sqrt() * ((40.0f64).ln() + t.ln().ln());
        assert!((w1 - expect).abs() < 1e-14);
    }

    #[test]
    fn limiting_width_rows() {
        let p = WidthParams { alpha: Some(0.05), sigma: Some(0.5), u: Some(0.1931) };
        let t = 1_000_000u64;
        let tf = t as f64;
        let apx = limiting_width(WidthMethod::Apx, &p, t).unwrap();
        assert!((apx - (2.0 * 0.1931 * tf.ln() / tf).sqrt()).abs() < 1e-15);
        let stch = limiting_width(WidthMethod::Stch, &p, t).unwrap();
        assert!((stch - (4.0 * 0.1931 * tf.ln().ln() / tf).sqrt()).abs() < 1e-15);
        let bstch = limiting_width(WidthMethod::BernStch, &p, t).unwrap();
        assert!((bstch - (2.0 * 0.25 * tf.ln().ln() / tf).sqrt()).abs() < 1e-15);

        // every row positive for t >= 3
        for m in WidthMethod::ALL {
            for t in [3u64, 10, 100] {
                assert!(limiting_width(m, &p, t).unwrap() > 0.0, "{m:?} at {t}");
            }
        }
        // wsr_alpha and hoeff_alpha share an expression
        assert_eq!(
            limiting_width(WidthMethod::WsrAlpha, &p, t).unwrap(),
            limiting_width(WidthMethod::HoeffAlpha, &p, t).unwrap()
        );
        // missing parameter errors
        let empty = WidthParams::default();
        assert!(limiting_width(WidthMethod::Apx, &empty, t).is_err());
        assert!(limiting_width(WidthMethod::Hrms, &empty, t).is_err());
    }

    #[test]
    fn quadrature_sanity() {
        let v = adaptive_simpson(&|x| x * x, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-11);
        assert!(adaptive_simpson(&|x| x, 1.0, 0.0, 1e-9).is_err());
    }
}
