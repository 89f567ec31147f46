//! Shared engine behind the command-line front end: method registry,
//! per-stream tracking, Monte Carlo coverage, width-comparison grids, the
//! kappa sweep, and matrix tracking. Kept in the library so integration
//! tests can drive it without spawning processes.

use rayon::prelude::*;

use crate::baselines::{self, HoeffState, HrmsState, RobbinsState, SubGaussianConfig, WsrState};
use crate::eb::{self, EbConfig, EbState, Interval};
use crate::error::{CsError, Result};
use crate::kernel::KernelTolerances;
use crate::matrix::{self, MatrixEbConfig, SymMatrix, WangRamdasState};
use crate::stitched::{self, StitchConfig, StitchState};
use crate::streams::{self, DistKind, DistributionSpec, MatrixGenKind, MeanPath};

/// Scalar confidence-sequence methods the harness can track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Apx,
    Mix,
    Unif,
    Stch,
    Wsr,
    Hrms,
    Hoeff,
    Robbins,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        Ok(match s {
            "apx" => Method::Apx,
            "mix" => Method::Mix,
            "unif" => Method::Unif,
            "stch" => Method::Stch,
            "wsr" => Method::Wsr,
            "hrms" => Method::Hrms,
            "hoeff" => Method::Hoeff,
            "robbins" => Method::Robbins,
            other => return Err(CsError::Config(format!("unknown method {other:?}"))),
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Apx => "apx",
            Method::Mix => "mix",
            Method::Unif => "unif",
            Method::Stch => "stch",
            Method::Wsr => "wsr",
            Method::Hrms => "hrms",
            Method::Hoeff => "hoeff",
            Method::Robbins => "robbins",
        }
    }

    pub fn needs_sigma(&self) -> bool {
        matches!(self, Method::Hoeff | Method::Robbins)
    }
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let out: Vec<Method> = s
        .split(',')
        .filter(|tok| !tok.trim().is_empty())
        .map(|tok| Method::parse(tok.trim()))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(CsError::Config("empty method list".into()));
    }
    Ok(out)
}

/// All tuning knobs shared across subcommands.
#[derive(Debug, Clone)]
pub struct HarnessParams {
    pub alpha: f64,
    pub kappa: f64,
    pub eta: f64,
    pub s: f64,
    pub l0: f64,
    /// Required by the sub-Gaussian methods.
    pub sigma: Option<f64>,
    /// Robbins mixture precision.
    pub a: f64,
}

impl Default for HarnessParams {
    fn default() -> Self {
        Self { alpha: 0.05, kappa: 0.25, eta: 2.0, s: 1.4, l0: 1.0, sigma: None, a: 1.0 }
    }
}

impl HarnessParams {
    pub fn eb_config(&self) -> EbConfig {
        EbConfig::new(self.alpha, self.kappa)
    }

    pub fn stitch_config(&self) -> StitchConfig {
        let mut c = StitchConfig::new(self.alpha);
        c.eta = self.eta;
        c.l0 = self.l0;
        c.penalty = stitched::EpochPenalty::ZetaPoly { s: self.s };
        c
    }

    pub fn subgaussian_config(&self) -> Result<SubGaussianConfig> {
        let sigma = self.sigma.ok_or_else(|| {
            CsError::Config("--sigma is required for the hoeff and robbins methods".into())
        })?;
        SubGaussianConfig::new(sigma, self.a, self.alpha)
    }

    pub fn validate_for(&self, methods: &[Method]) -> Result<()> {
        self.eb_config().validate()?;
        self.stitch_config().validate()?;
        if methods.iter().any(Method::needs_sigma) {
            self.subgaussian_config()?;
        }
        Ok(())
    }
}

/// One report row; `mu_t`/`covered` are absent when the stream has no known
/// mean path (CSV input).
#[derive(Debug, Clone)]
pub struct RunRow {
    pub t: u64,
    pub method: Method,
    pub center: f64,
    pub lo: f64,
    pub hi: f64,
    pub halfwidth: f64,
    pub valid: bool,
    pub mu_t: Option<f64>,
    pub covered: Option<bool>,
}

/// 17 significant digits, locale-independent.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl RunRow {
    pub fn csv_line(&self) -> String {
        let (mu, cov) = match (self.mu_t, self.covered) {
            (Some(m), Some(c)) => (fmt_float(m), c.to_string()),
            _ => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.method.label(),
            fmt_float(self.center),
            fmt_float(self.lo),
            fmt_float(self.hi),
            fmt_float(self.halfwidth),
            self.valid,
            mu,
            cov
        )
    }
}

pub const RUN_REPORT_HEADER: &str = "t,method,center,lo,hi,halfwidth,valid,mu_t,covered";

/// Per-method sequential state for one stream.
struct Tracker {
    eb_cfg: EbConfig,
    stitch_cfg: StitchConfig,
    tol: KernelTolerances,
    eb: Option<EbState>,
    stitch: Option<StitchState>,
    wsr: Option<WsrState>,
    hrms: Option<HrmsState>,
    hoeff: Option<(HoeffState, SubGaussianConfig)>,
    robbins: Option<(RobbinsState, SubGaussianConfig)>,
}

impl Tracker {
    fn new(methods: &[Method], params: &HarnessParams) -> Result<Self> {
        params.validate_for(methods)?;
        let eb_cfg = params.eb_config();
        let stitch_cfg = params.stitch_config();
        let wants = |m: Method| methods.contains(&m);
        let eb = if wants(Method::Apx) || wants(Method::Mix) || wants(Method::Unif) {
            Some(eb::new_state(&eb_cfg)?)
        } else {
            None
        };
        let stitch = wants(Method::Stch).then(StitchState::new);
        let wsr = if wants(Method::Wsr) { Some(WsrState::new(params.alpha)?) } else { None };
        let hrms = if wants(Method::Hrms) {
            Some(HrmsState::with_params(params.alpha, params.eta, params.s)?)
        } else {
            None
        };
        let hoeff = if wants(Method::Hoeff) {
            Some((HoeffState::new(), params.subgaussian_config()?))
        } else {
            None
        };
        let robbins = if wants(Method::Robbins) {
            Some((RobbinsState::new(), params.subgaussian_config()?))
        } else {
            None
        };
        Ok(Self {
            eb_cfg,
            stitch_cfg,
            tol: KernelTolerances::default(),
            eb,
            stitch,
            wsr,
            hrms,
            hoeff,
            robbins,
        })
    }

    fn update(&mut self, x: f64) -> Result<()> {
        if let Some(s) = &mut self.eb {
            eb::update(s, x, &self.eb_cfg)?;
        }
        if let Some(s) = &mut self.stitch {
            s.update(x)?;
        }
        if let Some(s) = &mut self.wsr {
            s.update(x)?;
        }
        if let Some(s) = &mut self.hrms {
            s.update(x)?;
        }
        if let Some((s, c)) = &mut self.hoeff {
            s.update(x, c)?;
        }
        if let Some((s, _)) = &mut self.robbins {
            s.update(x)?;
        }
        Ok(())
    }

    fn interval(&self, method: Method) -> Result<Interval> {
        Ok(match method {
            Method::Apx => {
                let s = self.eb.as_ref().unwrap();
                if s.t0_reached {
                    eb::interval_apx(s, &self.eb_cfg)
                } else {
                    Interval::vacuous(s.t, false)
                }
            }
            Method::Mix => eb::interval_mix(self.eb.as_ref().unwrap(), &self.eb_cfg, &self.tol)?,
            Method::Unif => eb::interval_unif(self.eb.as_ref().unwrap(), &self.eb_cfg, &self.tol)?,
            Method::Stch => stitched::interval(&self.stitch_cfg, self.stitch.as_ref().unwrap())?,
            Method::Wsr => baselines::wsr_interval(self.wsr.as_ref().unwrap())?,
            Method::Hrms => baselines::hrms_interval(self.hrms.as_ref().unwrap())?,
            Method::Hoeff => {
                let (s, c) = self.hoeff.as_ref().unwrap();
                baselines::hoeffding_interval(s, c)?
            }
            Method::Robbins => {
                let (s, c) = self.robbins.as_ref().unwrap();
                baselines::robbins_interval(s, c)?
            }
        })
    }

    /// U_t of the shared closed-form accumulator, when tracked.
    fn u_t(&self) -> Option<f64> {
        self.eb.as_ref().map(|s| s.u)
    }
}

/// Tracks a stream with every requested method, emitting one row per
/// (step, method) for steps where `emit` returns true.
pub fn track_stream(
    xs: &[f64],
    mean_path: Option<&MeanPath>,
    methods: &[Method],
    params: &HarnessParams,
    emit: &dyn Fn(u64) -> bool,
) -> Result<Vec<RunRow>> {
    let mut tracker = Tracker::new(methods, params)?;
    let mut rows = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let t = i as u64 + 1;
        tracker.update(x)?;
        if !emit(t) {
            continue;
        }
        let mu = mean_path.map(|p| p.mu(t));
        for &m in methods {
            let iv = tracker.interval(m)?;
            rows.push(RunRow {
                t,
                method: m,
                center: 0.5 * (iv.lo + iv.hi),
                lo: iv.lo,
                hi: iv.hi,
                halfwidth: iv.halfwidth,
                valid: iv.valid,
                mu_t: mu,
                covered: mu.map(|m| iv.lo <= m && m <= iv.hi),
            });
        }
    }
    Ok(rows)
}

/// Log-spaced evaluation grid: at most 64 points per decade, always
/// including 1 and the horizon.
pub fn log_grid(horizon: u64) -> Vec<u64> {
    let mut pts = vec![1u64];
    let decades = (horizon as f64).log10().ceil() as u32 + 1;
    let n = 64 * decades;
    for k in 0..=n {
        let t = 10f64.powf(k as f64 / 64.0).round() as u64;
        if t > 1 && t <= horizon {
            pts.push(t);
        }
    }
    pts.push(horizon);
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Median of a non-empty slice (averaging the middle pair).
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// One row of the width-comparison output: median halfwidth over seeds at a
/// grid time, plus the median U_t diagnostic when the closed-form
/// accumulator is present.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub t: u64,
    pub method: Method,
    pub median_halfwidth: f64,
    pub median_u_t: Option<f64>,
}

pub const COMPARE_HEADER: &str = "t,method,median_halfwidth,median_u_t";

impl CompareRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.t,
            self.method.label(),
            fmt_float(self.median_halfwidth),
            self.median_u_t.map(fmt_float).unwrap_or_default()
        )
    }
}

/// Median-over-seeds width curves on the log grid. Replications run in
/// parallel and are merged by replication index, so the output is
/// deterministic for a fixed base seed regardless of thread count.
pub fn compare_widths(
    kind: &DistKind,
    base_seed: u64,
    n_seeds: u64,
    horizon: u64,
    methods: &[Method],
    params: &HarnessParams,
) -> Result<Vec<CompareRow>> {
    if n_seeds == 0 {
        return Err(CsError::Config("need at least one seed".into()));
    }
    params.validate_for(methods)?;
    let grid = log_grid(horizon);
    let grid_set: std::collections::HashSet<u64> = grid.iter().copied().collect();

    // per replication: rows on the grid, in (t, method) order
    let per_rep: Vec<Result<(Vec<RunRow>, Vec<f64>)>> = (0..n_seeds)
        .into_par_iter()
        .map(|rep| {
            let spec = DistributionSpec::new(kind.clone(), base_seed + rep)?;
            let (xs, path) = streams::sample_path(&spec, horizon)?;
            let mut tracker = Tracker::new(methods, params)?;
            let mut rows = Vec::new();
            let mut us = Vec::new();
            for (i, &x) in xs.iter().enumerate() {
                let t = i as u64 + 1;
                tracker.update(x)?;
                if !grid_set.contains(&t) {
                    continue;
                }
                let mu = path.mu(t);
                for &m in methods {
                    let iv = tracker.interval(m)?;
                    rows.push(RunRow {
                        t,
                        method: m,
                        center: 0.5 * (iv.lo + iv.hi),
                        lo: iv.lo,
                        hi: iv.hi,
                        halfwidth: iv.halfwidth,
                        valid: iv.valid,
                        mu_t: Some(mu),
                        covered: Some(iv.lo <= mu && mu <= iv.hi),
                    });
                }
                us.push(tracker.u_t().unwrap_or(f64::NAN));
            }
            Ok((rows, us))
        })
        .collect();

    let mut reps = Vec::with_capacity(n_seeds as usize);
    for r in per_rep {
        reps.push(r?);
    }

    let n_methods = methods.len();
    let mut out = Vec::new();
    for (gi, &t) in grid.iter().enumerate() {
        for (mi, &m) in methods.iter().enumerate() {
            let mut widths: Vec<f64> = reps
                .iter()
                .map(|(rows, _)| rows[gi * n_methods + mi].halfwidth)
                .collect();
            let u = if reps[0].1[gi].is_nan() {
                None
            } else {
                let mut us: Vec<f64> = reps.iter().map(|(_, us)| us[gi]).collect();
                Some(median(&mut us))
            };
            out.push(CompareRow { t, method: m, median_halfwidth: median(&mut widths), median_u_t: u });
        }
    }
    Ok(out)
}

/// Per-method any-time miscoverage over R replications.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub replications: u64,
    pub horizon: u64,
    pub rows: Vec<CoverageRow>,
}

#[derive(Debug, Clone)]
pub struct CoverageRow {
    pub method: Method,
    pub miscoverage_rate: f64,
    pub standard_error: f64,
}

pub const COVERAGE_HEADER: &str = "method,miscoverage_rate,standard_error,replications,horizon";

impl CoverageReport {
    pub fn csv_lines(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{}",
                    r.method.label(),
                    fmt_float(r.miscoverage_rate),
                    fmt_float(r.standard_error),
                    self.replications,
                    self.horizon
                )
            })
            .collect()
    }
}

/// Monte Carlo any-time coverage: a replication miscovers a method when any
/// valid-time interval excludes mu_t. Replications are parallel, seeds are
/// base_seed + index, and results merge by index.
pub fn coverage_study(
    kind: &DistKind,
    base_seed: u64,
    replications: u64,
    horizon: u64,
    methods: &[Method],
    params: &HarnessParams,
) -> Result<CoverageReport> {
    if replications == 0 {
        return Err(CsError::Config("need at least one replication".into()));
    }
    params.validate_for(methods)?;
    let per_rep: Vec<Result<Vec<bool>>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let spec = DistributionSpec::new(kind.clone(), base_seed + rep)?;
            let (xs, path) = streams::sample_path(&spec, horizon)?;
            let mut tracker = Tracker::new(methods, params)?;
            let mut missed = vec![false; methods.len()];
            for (i, &x) in xs.iter().enumerate() {
                let t = i as u64 + 1;
                tracker.update(x)?;
                let mu = path.mu(t);
                for (mi, &m) in methods.iter().enumerate() {
                    if missed[mi] {
                        continue;
                    }
                    let iv = tracker.interval(m)?;
                    if iv.valid && !(iv.lo <= mu && mu <= iv.hi) {
                        missed[mi] = true;
                    }
                }
            }
            Ok(missed)
        })
        .collect();

    let mut counts = vec![0u64; methods.len()];
    for r in per_rep {
        for (mi, &miss) in r?.iter().enumerate() {
            if miss {
                counts[mi] += 1;
            }
        }
    }
    let rows = methods
        .iter()
        .zip(&counts)
        .map(|(&m, &c)| {
            let rate = c as f64 / replications as f64;
            CoverageRow {
                method: m,
                miscoverage_rate: rate,
                standard_error: (rate * (1.0 - rate) / replications as f64).sqrt(),
            }
        })
        .collect();
    Ok(CoverageReport { replications, horizon, rows })
}

pub const KAPPA_SWEEP_HEADER: &str = "kappa,t,halfwidth_mix,kappa_z";

/// Exact-mixture width curves across kappa values on the log grid, with the
/// kappa Z diagnostic column.
pub fn kappa_sweep(
    kind: &DistKind,
    seed: u64,
    horizon: u64,
    kappas: &[f64],
    alpha: f64,
) -> Result<Vec<String>> {
    if kappas.is_empty() || kappas.iter().any(|&k| !(k > 0.0)) {
        return Err(CsError::Config("kappa list must be nonempty and positive".into()));
    }
    let spec = DistributionSpec::new(kind.clone(), seed)?;
    let (xs, _) = streams::sample_path(&spec, horizon)?;
    let grid: std::collections::HashSet<u64> = log_grid(horizon).into_iter().collect();
    let tol = KernelTolerances::default();
    let mut lines = Vec::new();
    for &kappa in kappas {
        let cfg = EbConfig::new(alpha, kappa);
        cfg.validate()?;
        let kz = kappa * cfg.z();
        let mut state = eb::new_state(&cfg)?;
        for (i, &x) in xs.iter().enumerate() {
            let t = i as u64 + 1;
            eb::update(&mut state, x, &cfg)?;
            if grid.contains(&t) {
                let iv = eb::interval_mix(&state, &cfg, &tol)?;
                lines.push(format!(
                    "{},{},{},{}",
                    fmt_float(kappa),
                    t,
                    fmt_float(iv.halfwidth),
                    fmt_float(kz)
                ));
            }
        }
    }
    Ok(lines)
}

/// Matrix tracking methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMethod {
    MatApx,
    WangRamdas,
}

impl MatrixMethod {
    pub fn parse(s: &str) -> Result<MatrixMethod> {
        Ok(match s {
            "mat_apx" => MatrixMethod::MatApx,
            "wang_ramdas" => MatrixMethod::WangRamdas,
            other => return Err(CsError::Config(format!("unknown matrix method {other:?}"))),
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            MatrixMethod::MatApx => "mat_apx",
            MatrixMethod::WangRamdas => "wang_ramdas",
        }
    }
}

pub const MATRIX_TRACK_HEADER: &str = "t,method,bound,realized_gamma,valid,covered";

/// Tracks a matrix stream: realized gamma_max(Xbar_t - M) against each
/// method's bound. `mean` is the generator's true mean matrix.
pub fn matrix_track(
    xs: &[SymMatrix],
    mean: &SymMatrix,
    dim: usize,
    methods: &[MatrixMethod],
    alpha: f64,
    kappa: f64,
    emit: &dyn Fn(u64) -> bool,
) -> Result<Vec<String>> {
    if methods.is_empty() {
        return Err(CsError::Config("empty matrix method list".into()));
    }
    let cfg = MatrixEbConfig::new(alpha, kappa, dim)?;
    let mut eb_state = matrix::matrix_new_state(&cfg);
    let mut wr_state = WangRamdasState::new(dim);
    let mut sum = SymMatrix::zeros(dim);
    let mut lines = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let t = i as u64 + 1;
        if methods.contains(&MatrixMethod::MatApx) {
            matrix::matrix_update(&mut eb_state, x, &cfg)?;
        }
        if methods.contains(&MatrixMethod::WangRamdas) {
            wr_state.update(x, alpha)?;
        }
        sum.add_scaled(x, 1.0);
        if !emit(t) {
            continue;
        }
        let xbar = sum.scale(1.0 / t as f64);
        let realized = matrix::gamma_max(&xbar.sub(mean))?;
        for &m in methods {
            let (bound, valid, covered) = match m {
                MatrixMethod::MatApx => {
                    let b = matrix::matrix_halfwidth(&eb_state, &cfg);
                    (b.halfwidth, b.valid, realized <= b.halfwidth)
                }
                MatrixMethod::WangRamdas => {
                    let w = matrix::wang_ramdas_halfwidth(&wr_state, alpha)?;
                    // the bound constrains the lambda-weighted deviation
                    let dev = wr_state
                        .weighted_sum
                        .scale(1.0 / wr_state.sum_lambda)
                        .sub(mean);
                    (w, true, matrix::gamma_max(&dev)? <= w)
                }
            };
            lines.push(format!(
                "{},{},{},{},{},{}",
                t,
                m.label(),
                fmt_float(bound),
                fmt_float(realized),
                valid,
                covered
            ));
        }
    }
    Ok(lines)
}

/// Parses a distribution flag such as `bernoulli:0.5`, `beta:5,2`,
/// `uniform`, `two_point:0.3,0.01`, `constant:0.5`,
/// `switch:0.8,0.2,0.1`, or `sinusoid`.
pub fn parse_dist(s: &str) -> Result<DistKind> {
    let (name, args) = match s.split_once(':') {
        Some((n, a)) => (n, a),
        None => (s, ""),
    };
    let nums: Vec<f64> = if args.is_empty() {
        vec![]
    } else {
        args.split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|e| CsError::Config(format!("bad distribution parameter {t:?}: {e}")))
            })
            .collect::<Result<_>>()?
    };
    let arity = |n: usize| {
        if nums.len() == n {
            Ok(())
        } else {
            Err(CsError::Config(format!(
                "{name} takes {n} parameter(s), got {}",
                nums.len()
            )))
        }
    };
    let kind = match name {
        "bernoulli" => {
            arity(1)?;
            DistKind::Bernoulli(nums[0])
        }
        "beta" => {
            arity(2)?;
            DistKind::Beta { a: nums[0], b: nums[1] }
        }
        "uniform" => {
            arity(0)?;
            DistKind::Uniform
        }
        "two_point" => {
            arity(2)?;
            DistKind::TwoPoint { mu: nums[0], eps: nums[1] }
        }
        "constant" => {
            arity(1)?;
            DistKind::Constant(nums[0])
        }
        "switch" => {
            arity(3)?;
            DistKind::Switch { p1: nums[0], p2: nums[1], frac: nums[2] }
        }
        "sinusoid" => {
            arity(0)?;
            DistKind::Sinusoid
        }
        other => return Err(CsError::Config(format!("unknown distribution {other:?}"))),
    };
    DistributionSpec::new(kind.clone(), 0)?; // parameter validation
    Ok(kind)
}

/// Parses a matrix generator flag: `diag-bernoulli:0.5` or `rotated-beta:5,2`.
pub fn parse_matrix_gen(s: &str) -> Result<MatrixGenKind> {
    let (name, args) = match s.split_once(':') {
        Some((n, a)) => (n, a),
        None => (s, ""),
    };
    let nums: Vec<f64> = args
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|e| CsError::Config(format!("bad generator parameter {t:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    match name {
        "diag-bernoulli" if nums.len() == 1 => Ok(MatrixGenKind::DiagonalBernoulli { p: nums[0] }),
        "rotated-beta" if nums.len() == 2 => Ok(MatrixGenKind::RotatedBeta { a: nums[0], b: nums[1] }),
        other => Err(CsError::Config(format!("unknown matrix generator {other:?}"))),
    }
}
