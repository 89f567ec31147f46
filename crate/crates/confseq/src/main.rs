//! Command-line front end for the confidence-sequence harness.
//!
//! Exit codes: 0 success, 2 usage error, 3 data/validation error,
//! 4 numerical failure.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use confseq::asymptotics::{self, WidthMethod, WidthParams};
use confseq::error::CsError;
use confseq::harness::{self, HarnessParams, MatrixMethod};
use confseq::streams;

#[derive(Parser)]
#[command(name = "confseq", about = "Variance-adaptive confidence sequences for bounded streams", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Miscoverage level in (0,1).
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Mixture truncation scale.
    #[arg(long, default_value_t = 0.25)]
    kappa: f64,
    /// Stitching epoch ratio.
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    /// Stitching penalty exponent.
    #[arg(long, default_value_t = 1.4)]
    s: f64,
    /// Stitching first-epoch variance.
    #[arg(long, default_value_t = 1.0)]
    l0: f64,
    /// Sub-Gaussian scale (required for hoeff/robbins).
    #[arg(long)]
    sigma: Option<f64>,
    /// Robbins mixture precision.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// RNG seed (replication r uses seed + r).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write output to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonFlags {
    fn params(&self) -> HarnessParams {
        HarnessParams {
            alpha: self.alpha,
            kappa: self.kappa,
            eta: self.eta,
            s: self.s,
            l0: self.l0,
            sigma: self.sigma,
            a: self.a,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Track one stream, emitting per-step interval rows.
    Track {
        #[command(flatten)]
        common: CommonFlags,
        /// Scenario spec, e.g. bernoulli:0.5, beta:5,2, switch:0.8,0.2,0.1.
        #[arg(long)]
        dist: Option<String>,
        /// Read observations from a CSV file instead of a scenario.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        horizon: u64,
        /// Comma-separated subset of apx,mix,unif,stch,wsr,hrms,hoeff,robbins.
        #[arg(long, default_value = "apx")]
        methods: String,
    },
    /// Median-over-seeds width curves on a log grid.
    Compare {
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long)]
        dist: String,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        #[arg(long, default_value = "apx,wsr")]
        methods: String,
        /// Number of seeds to take the median over.
        #[arg(long, default_value_t = 20)]
        reps: u64,
    },
    /// Monte Carlo any-time miscoverage rates.
    Coverage {
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long)]
        dist: String,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        #[arg(long, default_value = "apx")]
        methods: String,
        #[arg(long, default_value_t = 200)]
        reps: u64,
    },
    /// Exact-mixture width curves across kappa values.
    KappaSweep {
        #[command(flatten)]
        common: CommonFlags,
        #[arg(long)]
        dist: String,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        /// Comma-separated kappa values.
        #[arg(long, default_value = "0.1,0.25,1,10,100")]
        kappas: String,
    },
    /// Track a matrix stream: bound vs realized maximum eigenvalue deviation.
    MatrixTrack {
        #[command(flatten)]
        common: CommonFlags,
        /// Generator: diag-bernoulli:<p> or rotated-beta:<a>,<b>.
        #[arg(long, default_value = "diag-bernoulli:0.5")]
        gen: String,
        /// Read a matrix stream from CSV (header `d=<dim>`).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        horizon: u64,
        /// Comma-separated subset of mat_apx,wang_ramdas.
        #[arg(long, default_value = "mat_apx")]
        methods: String,
    },
    /// Emit the limiting-width table or the variance-surrogate table.
    Asymptotics {
        #[command(flatten)]
        common: CommonFlags,
        /// 1 = limiting widths by method; 2 = E[psi_E] vs sigma^2/2 by distribution.
        #[arg(long, default_value_t = 1)]
        table: u8,
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
        /// E[psi_E(|X-mu|)] for the u-based rows of table 1.
        #[arg(long, default_value_t = 0.19314718055994531)]
        u: f64,
    },
}

fn exit_code(err: &CsError) -> i32 {
    match err {
        CsError::Config(_) => 2,
        CsError::Convergence(_) => 4,
        _ => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

struct Output {
    dest: Option<PathBuf>,
    lines: Vec<String>,
}

impl Output {
    fn new(dest: Option<PathBuf>) -> Self {
        Self { dest, lines: Vec::new() }
    }

    fn push(&mut self, line: String) {
        self.lines.push(line);
    }

    fn finish(self) -> Result<(), CsError> {
        let body = self.lines.join("\n") + "\n";
        match self.dest {
            Some(p) => std::fs::write(p, body)?,
            None => {
                std::io::stdout().write_all(body.as_bytes())?;
            }
        }
        Ok(())
    }
}

fn footer(out: &mut Output, seed: u64, config: &str, start: Instant) {
    out.push(format!("# seed={seed}"));
    out.push(format!("# config={config}"));
    out.push(format!("# wall_time={:.3}s", start.elapsed().as_secs_f64()));
}

fn run(cli: Cli) -> Result<(), CsError> {
    let start = Instant::now();
    match cli.command {
        Command::Track { common, dist, csv, horizon, methods } => {
            let methods = harness::parse_methods(&methods)?;
            let params = common.params();
            params.validate_for(&methods)?;
            let (xs, path) = match (&csv, &dist) {
                (Some(path), None) => (streams::ingest_scalar_csv(path)?, None),
                (None, Some(d)) => {
                    let kind = harness::parse_dist(d)?;
                    let spec = streams::DistributionSpec::new(kind, common.seed)?;
                    let (xs, p) = streams::sample_path(&spec, horizon)?;
                    (xs, Some(p))
                }
                _ => {
                    return Err(CsError::Config(
                        "track needs exactly one of --dist or --csv".into(),
                    ))
                }
            };
            let rows = harness::track_stream(&xs, path.as_ref(), &methods, &params, &|_| true)?;
            let mut out = Output::new(common.out.clone());
            out.push(harness::RUN_REPORT_HEADER.into());
            for r in rows {
                out.push(r.csv_line());
            }
            footer(&mut out, common.seed, &describe(&common, &dist, horizon), start);
            out.finish()
        }
        Command::Compare { common, dist, horizon, methods, reps } => {
            let methods = harness::parse_methods(&methods)?;
            let params = common.params();
            let kind = harness::parse_dist(&dist)?;
            let rows = harness::compare_widths(&kind, common.seed, reps, horizon, &methods, &params)?;
            let mut out = Output::new(common.out.clone());
            out.push(harness::COMPARE_HEADER.into());
            for r in rows {
                out.push(r.csv_line());
            }
            footer(&mut out, common.seed, &describe(&common, &Some(dist), horizon), start);
            out.finish()
        }
        Command::Coverage { common, dist, horizon, methods, reps } => {
            let methods = harness::parse_methods(&methods)?;
            let params = common.params();
            let kind = harness::parse_dist(&dist)?;
            let report = harness::coverage_study(&kind, common.seed, reps, horizon, &methods, &params)?;
            let mut out = Output::new(common.out.clone());
            out.push(harness::COVERAGE_HEADER.into());
            for line in report.csv_lines() {
                out.push(line);
            }
            footer(&mut out, common.seed, &describe(&common, &Some(dist), horizon), start);
            out.finish()
        }
        Command::KappaSweep { common, dist, horizon, kappas } => {
            let kind = harness::parse_dist(&dist)?;
            let ks: Vec<f64> = kappas
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|e| CsError::Config(format!("bad kappa {t:?}: {e}")))
                })
                .collect::<Result<_, _>>()?;
            let lines = harness::kappa_sweep(&kind, common.seed, horizon, &ks, common.alpha)?;
            let mut out = Output::new(common.out.clone());
            out.push(harness::KAPPA_SWEEP_HEADER.into());
            for line in lines {
                out.push(line);
            }
            footer(&mut out, common.seed, &describe(&common, &Some(dist), horizon), start);
            out.finish()
        }
        Command::MatrixTrack { common, gen, csv, dim, horizon, methods } => {
            let methods: Vec<MatrixMethod> = methods
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| MatrixMethod::parse(t.trim()))
                .collect::<Result<_, _>>()?;
            let (xs, mean, d) = match &csv {
                Some(path) => {
                    let (d, xs) = streams::ingest_matrix_csv(path)?;
                    // with file input the mean is unknown; score against the
                    // empirical mean of the whole file
                    let mut mean = confseq::matrix::SymMatrix::zeros(d);
                    for x in &xs {
                        mean.add_scaled(x, 1.0 / xs.len() as f64);
                    }
                    (xs, mean, d)
                }
                None => {
                    let kind = harness::parse_matrix_gen(&gen)?;
                    let (xs, mean) =
                        streams::matrix_sample_path(dim, &kind, common.seed, horizon)?;
                    (xs, mean, dim)
                }
            };
            let lines = harness::matrix_track(
                &xs,
                &mean,
                d,
                &methods,
                common.alpha,
                common.kappa,
                &|_| true,
            )?;
            let mut out = Output::new(common.out.clone());
            out.push(harness::MATRIX_TRACK_HEADER.into());
            for line in lines {
                out.push(line);
            }
            footer(&mut out, common.seed, &describe(&common, &Some(gen), horizon), start);
            out.finish()
        }
        Command::Asymptotics { common, table, horizon, u } => {
            let mut out = Output::new(common.out.clone());
            match table {
                1 => {
                    out.push("t,method,limiting_width".into());
                    let params = WidthParams {
                        alpha: Some(common.alpha),
                        sigma: Some(common.sigma.unwrap_or(0.5)),
                        u: Some(u),
                    };
                    for t in harness::log_grid(horizon) {
                        if t < 3 {
                            continue;
                        }
                        for m in WidthMethod::ALL {
                            let w = asymptotics::limiting_width(m, &params, t)?;
                            out.push(format!("{t},{},{}", m.label(), harness::fmt_float(w)));
                        }
                    }
                }
                2 => {
                    out.push("distribution,expected_psi_e,half_variance".into());
                    use streams::DistKind;
                    let menu = [
                        ("bernoulli:0.5", DistKind::Bernoulli(0.5)),
                        ("bernoulli:0.1", DistKind::Bernoulli(0.1)),
                        ("uniform", DistKind::Uniform),
                        ("beta:5,2", DistKind::Beta { a: 5.0, b: 2.0 }),
                        ("beta:10,30", DistKind::Beta { a: 10.0, b: 30.0 }),
                    ];
                    for (label, kind) in menu {
                        let e = asymptotics::expected_psi_e(&kind)?;
                        let v = asymptotics::dist_variance(&kind)? / 2.0;
                        out.push(format!(
                            "{label},{},{}",
                            harness::fmt_float(e),
                            harness::fmt_float(v)
                        ));
                    }
                }
                other => {
                    return Err(CsError::Config(format!("--table must be 1 or 2, got {other}")))
                }
            }
            footer(&mut out, common.seed, &format!("table={table}"), start);
            out.finish()
        }
    }
}

fn describe(common: &CommonFlags, source: &Option<String>, horizon: u64) -> String {
    format!(
        "alpha={} kappa={} eta={} s={} l0={} sigma={:?} a={} source={} horizon={}",
        common.alpha,
        common.kappa,
        common.eta,
        common.s,
        common.l0,
        common.sigma,
        common.a,
        source.as_deref().unwrap_or("csv"),
        horizon
    )
}
