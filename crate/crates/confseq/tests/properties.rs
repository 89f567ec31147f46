//! Cross-module invariant checks on full streams: monotonicity and ordering
//! of the interval families, oracle equivalences, trend bands, and baseline
//! coverage, plus a few randomized properties.

use confseq::baselines::{wsr_interval, WsrState};
use confseq::eb::{self, EbConfig};
use confseq::harness::{self, HarnessParams, Method};
use confseq::kernel::{self, log_mixture_integral, psi_e, solve_radius, KernelTolerances};
use confseq::matrix::{self, MatrixEbConfig};
use confseq::stitched::{self, StitchConfig, StitchState};
use confseq::streams::{self, DistKind, DistributionSpec, MatrixGenKind};
use proptest::prelude::*;
use rayon::prelude::*;

fn bernoulli_stream(seed: u64, horizon: u64) -> Vec<f64> {
    let spec = DistributionSpec::new(DistKind::Bernoulli(0.5), seed).unwrap();
    streams::sample_path(&spec, horizon).unwrap().0
}

#[test]
fn mixture_integral_shape() {
    // even in y, increasing in |y|, decreasing in v
    for &v in &[0.5f64, 2.0, 10.0, 100.0] {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..40 {
            let y = 0.25 * k as f64 * v.sqrt();
            let li = log_mixture_integral(y, v).unwrap().0;
            let li_neg = log_mixture_integral(-y, v).unwrap().0;
            assert!((li - li_neg).abs() <= 1e-12 * li.abs().max(1.0), "evenness at y={y}, v={v}");
            assert!(li > prev, "not increasing in |y| at y={y}, v={v}");
            prev = li;
        }
    }
    for &y in &[0.0f64, 1.0, 5.0] {
        let mut prev = f64::INFINITY;
        for &v in &[0.5f64, 1.0, 2.0, 5.0, 20.0, 200.0] {
            let li = log_mixture_integral(y, v).unwrap().0;
            assert!(li < prev, "not decreasing in v at y={y}, v={v}");
            prev = li;
        }
    }
}

#[test]
fn radius_round_trip_identity() {
    let tol = KernelTolerances::default();
    for &v in &[1.0f64, 8.0, 50.0, 400.0] {
        for &y0 in &[0.5f64, 2.0, 10.0, 40.0] {
            let log_g = log_mixture_integral(y0 * v.sqrt(), v).unwrap().0;
            let y = solve_radius(v, log_g, &tol).unwrap();
            let back = log_mixture_integral(y, v).unwrap().0;
            assert!(
                (back - log_g).abs() <= 10.0 * tol.root_abs_tol,
                "round trip failed at v={v}, y0={y0}: {back} vs {log_g}"
            );
        }
    }
}

/// Dense-grid inversion of the uniform-mixture boundary reproduces the
/// bisection radius: scan log I(y; 100) for the crossing of log(2/alpha).
#[test]
fn uniform_mixture_grid_scan_oracle() {
    let v = 100.0;
    let log_g = (2.0f64 / 0.05).ln();
    let tol = KernelTolerances::default();
    let y_solver = solve_radius(v, log_g, &tol).unwrap();

    // coarse bracket, then a 1e-7-step local scan
    let mut lo = 0.0;
    let mut k = 0u64;
    while log_mixture_integral((k + 1) as f64 * 0.01, v).unwrap().0 < log_g {
        k += 1;
        lo = k as f64 * 0.01;
    }
    let mut y_grid = lo;
    while log_mixture_integral(y_grid, v).unwrap().0 < log_g {
        y_grid += 1e-7;
    }
    assert!(
        (y_grid - y_solver).abs() <= 1e-6,
        "grid {y_grid} vs solver {y_solver}"
    );
}

/// With intersect = true the running intersection is monotone: lo never
/// decreases and hi never increases.
#[test]
fn running_intersection_is_nested() {
    let mut cfg = EbConfig::new(0.05, 0.25);
    cfg.intersect = true;
    let mut state = eb::new_state(&cfg).unwrap();
    let (mut best_lo, mut best_hi) = (0.0f64, 1.0f64);
    for x in bernoulli_stream(11, 5000) {
        eb::update(&mut state, x, &cfg).unwrap();
        if let Some(iv) = &state.intersection {
            assert!(iv.lo >= best_lo - 1e-15 && iv.hi <= best_hi + 1e-15, "t={}", state.t);
            best_lo = best_lo.max(iv.lo);
            best_hi = best_hi.min(iv.hi);
            assert!(iv.lo <= iv.hi, "empty intersection at t={}", state.t);
        }
    }
    assert!(state.intersection.is_some());
}

/// For fixed data all three halfwidths are nonincreasing in alpha, and the
/// sample mean always lies inside the exact mixture interval.
#[test]
fn alpha_ordering_and_never_empty() {
    let xs = bernoulli_stream(12, 2000);
    let tol = KernelTolerances::default();
    let alphas = [0.01, 0.05, 0.2];
    let mut states: Vec<(EbConfig, eb::EbState)> = alphas
        .iter()
        .map(|&a| {
            let c = EbConfig::new(a, 0.25);
            let s = eb::new_state(&c).unwrap();
            (c, s)
        })
        .collect();
    for (i, &x) in xs.iter().enumerate() {
        let t = i as u64 + 1;
        for (c, s) in &mut states {
            eb::update(s, x, c).unwrap();
        }
        if t % 97 != 0 {
            continue;
        }
        for w in states.windows(2) {
            let (ca, sa) = &w[0];
            let (cb, sb) = &w[1];
            assert!(
                eb::halfwidth_apx(sa, ca) >= eb::halfwidth_apx(sb, cb) - 1e-12,
                "apx ordering at t={t}"
            );
            let ma = eb::interval_mix(sa, ca, &tol).unwrap().halfwidth;
            let mb = eb::interval_mix(sb, cb, &tol).unwrap().halfwidth;
            assert!(ma >= mb - 1e-9, "mix ordering at t={t}");
            let ua = eb::interval_unif(sa, ca, &tol).unwrap().halfwidth;
            let ub = eb::interval_unif(sb, cb, &tol).unwrap().halfwidth;
            assert!(ua >= ub - 1e-9, "unif ordering at t={t}");
        }
        let (c, s) = &states[1];
        let iv = eb::interval_mix(s, c, &tol).unwrap();
        assert!(iv.contains(s.mean()), "mean outside mixture interval at t={t}");
    }
}

/// The stitched width is sandwiched per epoch: at least the epoch's own
/// fixed-tuning boundary, at most the chain bound of that epoch's budget.
#[test]
fn stitched_epoch_sandwich_and_monotone_validity() {
    let cfg = StitchConfig::new(0.05);
    let schedule = stitched::epoch_schedule(&cfg, 64).unwrap();
    let mut state = StitchState::new();
    let mut was_valid = false;
    for x in bernoulli_stream(13, 10_000) {
        state.update(x).unwrap();
        let valid = stitched::stitched_valid(&cfg, state.v);
        assert!(!was_valid || valid, "validity regressed at t={}", state.t);
        was_valid = valid;
        if !valid {
            continue;
        }
        let w = stitched::stitched_halfwidth(&cfg, state.v, state.t).unwrap().unwrap();
        let j = ((state.v / cfg.l0).ln() / cfg.eta.ln()).floor() as usize;
        let (alpha_j, xi_j) = schedule[j];
        let lower = stitched::fixed_xi_halfwidth(xi_j, state.v, state.t, alpha_j).unwrap();
        let j_real = (state.v / cfg.l0).ln() / cfg.eta.ln();
        let alpha_real = (cfg.alpha.ln() - cfg.log_penalty(j_real)).exp();
        let chain = (cfg.eta.sqrt() + 1.0) / state.t as f64
            * (state.v * (2.0 / alpha_real).ln()).sqrt();
        assert!(w >= lower - 1e-12, "below epoch boundary at t={}", state.t);
        assert!(w <= chain + 1e-12, "above chain bound at t={}", state.t);
    }
}

/// Iterated-logarithm scaling: the stitched width's limiting coefficient
/// (sqrt(eta)+1)sqrt(s u) sits in a fixed multiple-of-sqrt(u) band, and on
/// Bernoulli(1/2) the realized width times sqrt(t / loglog t) tracks its
/// finite-sample prediction within 10% for t in [1e5, 1e6]. (The realized
/// scaled width itself is still ~4.4 sqrt(u) there: the log(2/alpha) and
/// log zeta(s) terms inside the boundary decay only like 1/loglog t.)
#[test]
fn stitched_lil_band() {
    let u = std::f64::consts::LN_2 - 0.5;
    let cfg = StitchConfig::new(0.05);
    let limit_coeff = (cfg.eta.sqrt() + 1.0) * (1.4 * u).sqrt();
    assert!(
        (1.9 * u.sqrt()..=3.5 * u.sqrt()).contains(&limit_coeff),
        "limiting coefficient {limit_coeff} outside the LIL band"
    );

    let mut state = StitchState::new();
    for (i, x) in bernoulli_stream(14, 1_000_000).into_iter().enumerate() {
        let t = i as u64 + 1;
        state.update(x).unwrap();
        if t < 100_000 || t % 10_000 != 0 {
            continue;
        }
        let w = stitched::stitched_halfwidth(&cfg, state.v, t).unwrap().unwrap();
        let lll = (t as f64).ln().ln();
        let scaled = w * (t as f64 / lll).sqrt();
        // prediction with V_t replaced by its mean u t
        let v = u * t as f64;
        let j = (v / cfg.l0).ln() / cfg.eta.ln();
        let predicted = (cfg.eta.sqrt() + 1.0)
            * (u * ((2.0 / cfg.alpha).ln() + cfg.log_penalty(j)) / lll).sqrt();
        assert!(
            (scaled - predicted).abs() <= 0.1 * predicted,
            "scaled width {scaled} vs predicted {predicted} at t={t}"
        );
    }
}

/// Constant-mean coverage of the weighted baseline stays at the alpha level,
/// and its weights respect the 1/2 cap.
#[test]
fn wsr_constant_mean_coverage() {
    const REPS: u64 = 2000;
    const T: u64 = 10_000;
    let misses: u64 = (0..REPS)
        .into_par_iter()
        .map(|rep| {
            let spec = DistributionSpec::new(DistKind::Bernoulli(0.5), 2000 + rep).unwrap();
            let (xs, _) = streams::sample_path(&spec, T).unwrap();
            let mut state = WsrState::new(0.05).unwrap();
            for &x in &xs {
                assert!(state.next_lambda() <= 0.5 + 1e-15);
                state.update(x).unwrap();
                let iv = wsr_interval(&state).unwrap();
                if iv.valid && !iv.contains(0.5) {
                    return 1u64;
                }
            }
            0
        })
        .sum();
    let rate = misses as f64 / REPS as f64;
    let limit = 0.05 + 3.0 * (0.05f64 * 0.95 / REPS as f64).sqrt();
    assert!(rate <= limit, "wsr miscoverage {rate} > {limit}");
}

/// Spectral-width trend: W^mat scaled by sqrt(t / log t) at t = 1e6 is
/// within 20% of sqrt(2 gamma_max(E psi_E(|X - M|))) for the generator.
#[test]
fn matrix_width_trend() {
    const T: u64 = 1_000_000;
    let gen = MatrixGenKind::DiagonalBernoulli { p: 0.5 };
    let cfg = MatrixEbConfig::new(0.05, 0.25, 3).unwrap();
    let (xs, mean) = streams::matrix_sample_path(3, &gen, 30, T).unwrap();

    // Monte Carlo estimate of gamma_max(E psi_E(|X - M|)) on a fresh draw
    let (ref_xs, _) = streams::matrix_sample_path(3, &gen, 31, 20_000).unwrap();
    let mut acc = matrix::SymMatrix::zeros(3);
    for x in &ref_xs {
        acc.add_scaled(&matrix::psi_e_abs(&x.sub(&mean)).unwrap(), 1.0);
    }
    let target = (2.0 * matrix::gamma_max(&acc.scale(1.0 / ref_xs.len() as f64)).unwrap()).sqrt();

    let mut state = matrix::matrix_new_state(&cfg);
    for x in &xs {
        matrix::matrix_update(&mut state, x, &cfg).unwrap();
    }
    let b = matrix::matrix_halfwidth(&state, &cfg);
    assert!(b.valid);
    let scaled = b.halfwidth * (T as f64 / (T as f64).ln()).sqrt();
    assert!(
        (scaled - target).abs() <= 0.2 * target,
        "scaled width {scaled} vs target {target}"
    );
}

/// Identical (spec, seed, horizon) reproduces identical streams, and the
/// tracked report rows are strictly increasing in t per method.
#[test]
fn reproducibility_and_row_order() {
    let spec = DistributionSpec::new(DistKind::Sinusoid, 77).unwrap();
    let (a, pa) = streams::sample_path(&spec, 4096).unwrap();
    let (b, pb) = streams::sample_path(&spec, 4096).unwrap();
    assert_eq!(a, b);
    assert_eq!(pa.running, pb.running);

    let params = HarnessParams::default();
    let rows =
        harness::track_stream(&a, Some(&pa), &[Method::Apx, Method::Stch], &params, &|t| {
            t % 100 == 0
        })
        .unwrap();
    for m in [Method::Apx, Method::Stch] {
        let ts: Vec<u64> = rows.iter().filter(|r| r.method == m).map(|r| r.t).collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ts.len(), 40);
    }
    for r in &rows {
        if r.valid {
            assert_eq!(r.covered.unwrap(), r.lo <= r.mu_t.unwrap() && r.mu_t.unwrap() <= r.hi);
        }
    }
}

proptest! {
    /// psi_E dominates the quadratic lower bound everywhere on [0, 1).
    #[test]
    fn psi_e_quadratic_lower_bound(x in 0.0f64..0.999) {
        let p = psi_e(x).unwrap();
        prop_assert!(p >= x * x / 2.0 - 1e-15);
    }

    /// Intervals clip to the unit interval and keep lo <= hi.
    #[test]
    fn interval_clipping(center in 0.0f64..1.0, halfwidth in 0.0f64..2.0, t in 1u64..1000) {
        let iv = confseq::eb::Interval::from_center(center, halfwidth, t, true);
        prop_assert!(iv.lo >= 0.0 && iv.hi <= 1.0 && iv.lo <= iv.hi);
    }

    /// The mixture boundary radius is positive and increasing in the
    /// threshold for any fixed variance.
    #[test]
    fn radius_monotone_in_threshold(v in 0.5f64..200.0, g1 in 1.0f64..4.0, dg in 0.1f64..2.0) {
        let tol = KernelTolerances::default();
        let base = kernel::log_mixture_integral(0.0, v).unwrap().0;
        let y1 = solve_radius(v, base + g1, &tol).unwrap();
        let y2 = solve_radius(v, base + g1 + dg, &tol).unwrap();
        prop_assert!(y1 > 0.0);
        prop_assert!(y2 > y1 - 1e-9);
    }
}
